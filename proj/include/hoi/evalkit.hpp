#pragma once

#include "hoi/hand.hpp"
#include "hoi/supervision.hpp"

namespace hoi {

struct Similarity {
    double s = 1.0;
    Mat3 r = Mat3::Identity();
    Vec3 t = Vec3::Zero();

    Vec3 apply(const Vec3& p) const { return s * (r * p) + t; }
};

// Least-squares similarity transform (Umeyama closed form, det(R) = +1
// enforced) solving target ~ s R source + t. Throws DegenerateAlignment for
// coincident or collinear sources, or fewer than 3 points.
Similarity procrustes_align(const std::vector<Vec3>& target, const std::vector<Vec3>& source);

// Closed-form optimal scale + translation only (no rotation).
Similarity scale_translation_align(const std::vector<Vec3>& target,
                                   const std::vector<Vec3>& source);

// All distances in millimeters; F-scores and VAUC unitless in [0, 1].
// VAUC integrates the percentage-of-correct-vertices curve over 0..20 mm
// (101 uniform thresholds, trapezoidal). The aligned metrics polish the
// closed-form solutions with a monotone IRLS pass on the reported mean
// Euclidean error, seeding each class from the next-smaller one, so
// PAMJE <= STMJE <= MJE holds for every input.
struct HandMetrics {
    double mje = 0, pamje = 0, stmje = 0;
    double mme = 0, pamme = 0;
    double vauc = 0, pavauc = 0;
    double f5 = 0, f15 = 0, paf5 = 0, paf15 = 0;
};
HandMetrics hand_metrics(const HandGeometry& pred, const HandGeometry& gt);

constexpr double kVaucMaxMm = 20.0;
constexpr int kVaucSteps = 101;

// OCE/MCE/ADD-S/OME in millimeters. MCE uses the 8 corners of the model-frame
// bounding box; ADD-S uses `adds_points` area-weighted surface samples
// (seeded); OME is the mean per-vertex error.
struct ObjectMetrics {
    double oce = 0, mce = 0, adds = 0, ome = 0;
};
ObjectMetrics object_metrics(const ObjectPose& pred, const ObjectPose& gt,
                             const TriangleMesh& model, int adds_points = 512,
                             uint64_t seed = 7);

}  // namespace hoi
