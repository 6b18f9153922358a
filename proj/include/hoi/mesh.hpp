#pragma once

#include <array>
#include <string>
#include <vector>

#include "hoi/geometry.hpp"
#include "hoi/rng.hpp"

namespace hoi {

struct Aabb {
    Vec3 lo = Vec3::Constant(std::numeric_limits<double>::max());
    Vec3 hi = Vec3::Constant(std::numeric_limits<double>::lowest());

    void expand(const Vec3& p) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    void expand(const Aabb& o) {
        lo = lo.cwiseMin(o.lo);
        hi = hi.cwiseMax(o.hi);
    }
    Vec3 center() const { return 0.5 * (lo + hi); }
    Vec3 extent() const { return hi - lo; }
    Aabb inflated(double factor) const {
        Aabb out;
        const Vec3 c = center(), h = 0.5 * factor * extent();
        out.lo = c - h;
        out.hi = c + h;
        return out;
    }
};

struct TriangleMesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> triangles;

    size_t vertex_count() const { return vertices.size(); }
    size_t triangle_count() const { return triangles.size(); }
    Aabb bounds() const;
    double total_area() const;
    TriangleMesh transformed(const Mat3& r, const Vec3& t) const;
};

// Checks that every edge is shared by exactly two triangles with opposite
// winding and that no triangle is degenerate (area <= 1e-12). A disjoint
// union of closed components passes.
bool is_watertight(const TriangleMesh& mesh, std::string* why = nullptr);

// Area-weighted uniform surface point; also reports the face normal.
Vec3 sample_surface_point(const TriangleMesh& mesh,
                          const std::vector<double>& area_cdf, Rng& rng,
                          Vec3* normal = nullptr);
std::vector<double> build_area_cdf(const TriangleMesh& mesh);

// Primitive generators (all watertight, centered at the origin).
TriangleMesh make_box(const Vec3& half_extents);
TriangleMesh make_cylinder(double radius, double half_height, int segments = 16);
TriangleMesh make_icosphere(double radius, int subdivisions = 2);
// Capsule from a to b; `segments` points per ring, `rings` rows per cap.
TriangleMesh make_capsule(const Vec3& a, const Vec3& b, double radius,
                          int segments = 8, int rings = 1);
// Appends `other` into `mesh`, offsetting indices.
void append_mesh(TriangleMesh& mesh, const TriangleMesh& other);

// Plain-text mesh format: header line "hoimesh 1", then "v x y z" and
// "f i j k" lines (0-based indices). Optional "w ..." lines carry per-vertex
// skinning weights (see hand.hpp).
std::string mesh_to_text(const TriangleMesh& mesh,
                         const std::vector<std::vector<std::pair<int, double>>>* weights = nullptr);
TriangleMesh mesh_from_text(const std::string& text,
                            std::vector<std::vector<std::pair<int, double>>>* weights = nullptr);

}  // namespace hoi
