#include "hoi/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace hoi {

Mat3 rot6d_to_matrix(const Rotation6D& r) {
    const double na = r.a.norm();
    if (na < 1e-8) throw DegenerateRotation("rot6d: |a| ~ 0");
    const Vec3 c1 = r.a / na;
    Vec3 u = r.b - c1.dot(r.b) * c1;
    const double nu = u.norm();
    if (nu < 1e-8 * std::max(1.0, r.b.norm()))
        throw DegenerateRotation("rot6d: a and b are parallel");
    const Vec3 c2 = u / nu;
    const Vec3 c3 = c1.cross(c2);
    Mat3 m;
    m.col(0) = c1;
    m.col(1) = c2;
    m.col(2) = c3;
    return m;
}

Rotation6D matrix_to_rot6d(const Mat3& m) {
    const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
    if (ortho > 1e-6 || m.determinant() < 0.0)
        throw InvalidRotation("matrix_to_rot6d: input is not a rotation");
    Rotation6D r;
    r.a = m.col(0);
    r.b = m.col(1);
    return r;
}

Vec2 project_point(const Vec3& p, const CameraIntrinsics& k) {
    if (p.z() <= 0.0) throw BehindCamera("project_point: z <= 0");
    return {k.fx * p.x() / p.z() + k.cx, k.fy * p.y() / p.z() + k.cy};
}

std::vector<double> fourier_encode(const Vec3& p, int bands) {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(6 * bands));
    for (int axis = 0; axis < 3; ++axis) {
        double freq = M_PI;
        for (int k = 0; k < bands; ++k) {
            out.push_back(std::sin(freq * p[axis]));
            out.push_back(std::cos(freq * p[axis]));
            freq *= 2.0;
        }
    }
    return out;
}

std::vector<double> bilinear_sample(const FeatureMap& grid, const Vec2& uv) {
    if (grid.width <= 0 || grid.height <= 0 || grid.channels <= 0 ||
        grid.data.size() != static_cast<size_t>(grid.width) * grid.height * grid.channels)
        throw InvalidGrid("bilinear_sample: empty or inconsistent grid");

    const double u = std::clamp(uv.x(), 0.0, static_cast<double>(grid.width - 1));
    const double v = std::clamp(uv.y(), 0.0, static_cast<double>(grid.height - 1));
    const int x0 = std::min(static_cast<int>(std::floor(u)), grid.width - 1);
    const int y0 = std::min(static_cast<int>(std::floor(v)), grid.height - 1);
    const int x1 = std::min(x0 + 1, grid.width - 1);
    const int y1 = std::min(y0 + 1, grid.height - 1);
    const double fx = u - x0;
    const double fy = v - y0;

    std::vector<double> out(grid.channels);
    for (int c = 0; c < grid.channels; ++c) {
        const double top = (1.0 - fx) * grid.at(y0, x0, c) + fx * grid.at(y0, x1, c);
        const double bot = (1.0 - fx) * grid.at(y1, x0, c) + fx * grid.at(y1, x1, c);
        out[c] = (1.0 - fy) * top + fy * bot;
    }
    return out;
}

}  // namespace hoi
