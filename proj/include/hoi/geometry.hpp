#pragma once

#include <Eigen/Dense>
#include <vector>

#include "hoi/errors.hpp"

namespace hoi {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// First two columns of a rotation matrix, before orthonormalization.
struct Rotation6D {
    Vec3 a = Vec3::UnitX();
    Vec3 b = Vec3::UnitY();
};

struct CameraIntrinsics {
    double fx = 0, fy = 0, cx = 0, cy = 0;
};

// Dense 2D feature grid, logically C x H x W. Stored row-major by position
// with interleaved channels: data[(y*width + x)*channels + c].
// Pixel convention: cell centers sit at integer coordinates, origin top-left.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    double at(int y, int x, int c) const {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
    double& at(int y, int x, int c) {
        return data[(static_cast<size_t>(y) * width + x) * channels + c];
    }
};

// Gram-Schmidt orthonormalization of the 6D representation.
// First column is a/|a|; throws DegenerateRotation when |a| ~ 0 or a || b.
Mat3 rot6d_to_matrix(const Rotation6D& r);

// Inverse map: first two columns of M. Throws InvalidRotation when M is not
// orthonormal within 1e-6.
Rotation6D matrix_to_rot6d(const Mat3& m);

// Pinhole projection, u = fx*x/z + cx, v = fy*y/z + cy. Throws BehindCamera
// when z <= 0.
Vec2 project_point(const Vec3& p, const CameraIntrinsics& k);

// NeRF-style positional encoding. Output has 6*bands entries, axis-major,
// octave k = 0..bands-1 innermost, sin before cos:
//   [sin(2^0 pi x), cos(2^0 pi x), ..., sin(2^(L-1) pi x), cos(2^(L-1) pi x),
//    <same for y>, <same for z>]
std::vector<double> fourier_encode(const Vec3& p, int bands);

constexpr int kFourierBandsDefault = 6;

// Bilinear interpolation at continuous (u, v); coordinates outside the grid
// are clamped to the border (replicate padding). Returns one value per
// channel. Throws InvalidGrid on an empty grid.
std::vector<double> bilinear_sample(const FeatureMap& grid, const Vec2& uv);

}  // namespace hoi
