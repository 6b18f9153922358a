#pragma once

#include <vector>

#include "hoi/mesh.hpp"

namespace hoi {

// Ground-truth supervision triple: a query point with exact signed distances
// to the hand and object meshes. `near_surface` records which branch of the
// sampling mixture produced the point.
struct SdfSample {
    Vec3 p = Vec3::Zero();
    double d_hand = 0.0;
    double d_obj = 0.0;
    bool near_surface = false;
};

// Distance from p to the closed triangle (face, edge or vertex region),
// plus the closest point. Throws DegenerateTriangle when the triangle has
// area <= 1e-12.
double point_triangle_distance(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c,
                               Vec3* closest = nullptr);

// Generalized winding number: solid angle sum / 4pi. ~1 inside a watertight
// mesh, ~0 outside.
double winding_number(const Vec3& p, const TriangleMesh& mesh);

// Min distance over all triangles, negated when winding_number > 0.5.
double signed_distance(const Vec3& p, const TriangleMesh& mesh);

// DeepSDF-style query mixture: 70% near-surface (surface point plus a
// N(0, 2cm) offset along the face normal, split evenly between the two
// meshes), 30% uniform in the joint bounding box inflated by 20%.
// Deterministic for a given (n, seed). Throws InvalidConfig when n == 0.
std::vector<SdfSample> sample_queries(const TriangleMesh& hand_mesh,
                                      const TriangleMesh& obj_mesh, int n, uint64_t seed);

constexpr double kNearSurfaceFraction = 0.7;
constexpr double kNearSurfaceSigma = 0.02;
constexpr double kQueryBoxInflation = 1.2;

}  // namespace hoi
