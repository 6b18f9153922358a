#include "hoi/image.hpp"

#include <fstream>

#include "hoi/errors.hpp"

namespace hoi {

void write_ppm(const Image& im, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("write_ppm: cannot open " + path);
    f << "P6\n" << im.width << ' ' << im.height << "\n255\n";
    f.write(reinterpret_cast<const char*>(im.rgb.data()),
            static_cast<std::streamsize>(im.rgb.size()));
    if (!f) throw IoError("write_ppm: short write to " + path);
}

}  // namespace hoi
