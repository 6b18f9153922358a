#pragma once

#include <stdexcept>
#include <string>

namespace hoi {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateRotation : Error { using Error::Error; };
struct InvalidRotation : Error { using Error::Error; };
struct BehindCamera : Error { using Error::Error; };
struct InvalidGrid : Error { using Error::Error; };
struct InvalidGeometry : Error { using Error::Error; };
struct InvalidConfig : Error { using Error::Error; };
struct InvalidShape : Error { using Error::Error; };
struct DegenerateTriangle : Error { using Error::Error; };
struct DegenerateAlignment : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace hoi
