#include "hoi/sdf.hpp"

#include <cmath>
#include <limits>

#include "hoi/errors.hpp"

namespace hoi {

// Closest point on a triangle, region classification after Ericson,
// "Real-Time Collision Detection", 5.1.5.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               Vec3* closest) {
    const Vec3 ab = b - a, ac = c - a;
    if (0.5 * ab.cross(ac).norm() <= 1e-12)
        throw DegenerateTriangle("point_triangle_distance: area <= 1e-12");

    auto finish = [&](const Vec3& q) {
        if (closest) *closest = q;
        return (p - q).norm();
    };

    const Vec3 ap = p - a;
    const double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return finish(a);

    const Vec3 bp = p - b;
    const double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return finish(b);

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return finish(a + (d1 / (d1 - d3)) * ab);

    const Vec3 cp = p - c;
    const double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return finish(c);

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return finish(a + (d2 / (d2 - d6)) * ac);

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0)
        return finish(b + ((d4 - d3) / ((d4 - d3) + (d5 - d6))) * (c - b));

    const double denom = 1.0 / (va + vb + vc);
    return finish(a + (vb * denom) * ab + (vc * denom) * ac);
}

// Solid angle of one triangle as seen from p (van Oosterom & Strackee).
static double solid_angle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    const Vec3 va = a - p, vb = b - p, vc = c - p;
    const double la = va.norm(), lb = vb.norm(), lc = vc.norm();
    const double num = va.dot(vb.cross(vc));
    const double den =
        la * lb * lc + va.dot(vb) * lc + vb.dot(vc) * la + vc.dot(va) * lb;
    return 2.0 * std::atan2(num, den);
}

double winding_number(const Vec3& p, const TriangleMesh& mesh) {
    double omega = 0.0;
    for (const auto& t : mesh.triangles)
        omega += solid_angle(p, mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]);
    return omega / (4.0 * M_PI);
}

double signed_distance(const Vec3& p, const TriangleMesh& mesh) {
    double best = std::numeric_limits<double>::max();
    for (const auto& t : mesh.triangles) {
        const double d = point_triangle_distance(p, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                                 mesh.vertices[t[2]]);
        best = std::min(best, d);
    }
    return winding_number(p, mesh) > 0.5 ? -best : best;
}

std::vector<SdfSample> sample_queries(const TriangleMesh& hand_mesh,
                                      const TriangleMesh& obj_mesh, int n, uint64_t seed) {
    if (n <= 0) throw InvalidConfig("sample_queries: n must be > 0");

    const std::vector<double> hand_cdf = build_area_cdf(hand_mesh);
    const std::vector<double> obj_cdf = build_area_cdf(obj_mesh);
    Aabb box = hand_mesh.bounds();
    box.expand(obj_mesh.bounds());
    box = box.inflated(kQueryBoxInflation);

    Rng rng(seed);
    std::vector<SdfSample> out;
    out.reserve(n);
    for (int i = 0; i < n; ++i) {
        SdfSample s;
        s.near_surface = rng.uniform() < kNearSurfaceFraction;
        if (s.near_surface) {
            const bool from_hand = rng.uniform() < 0.5;
            Vec3 normal;
            const Vec3 q = from_hand
                               ? sample_surface_point(hand_mesh, hand_cdf, rng, &normal)
                               : sample_surface_point(obj_mesh, obj_cdf, rng, &normal);
            s.p = q + rng.normal(0.0, kNearSurfaceSigma) * normal;
        } else {
            s.p = {rng.uniform(box.lo.x(), box.hi.x()), rng.uniform(box.lo.y(), box.hi.y()),
                   rng.uniform(box.lo.z(), box.hi.z())};
        }
        s.d_hand = signed_distance(s.p, hand_mesh);
        s.d_obj = signed_distance(s.p, obj_mesh);
        out.push_back(s);
    }
    return out;
}

}  // namespace hoi
