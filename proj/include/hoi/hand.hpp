#pragma once

#include <array>

#include "hoi/mesh.hpp"

namespace hoi {

// 21-keypoint hand tree. Joint ordering is fixed:
//   0        wrist
//   1..4     thumb  (base, middle, distal, tip)
//   5..8     index
//   9..12    middle
//   13..16   ring
//   17..20   pinky
// Local rotations (16 = 1 global + 15 articulations) drive the wrist and the
// first three joints of each finger; tips carry no rotation of their own.
constexpr int kHandJoints = 21;
constexpr int kHandRotations = 16;
constexpr int kHandShapeDim = 10;
constexpr int kHandFingers = 5;

inline int finger_joint(int finger, int level) { return 1 + 4 * finger + level; }
inline int fingertip_joint(int finger) { return finger_joint(finger, 3); }
// Rotation slot driving joint j, or -1 for tips.
inline int joint_rotation_index(int j) {
    if (j == 0) return 0;
    const int f = (j - 1) / 4, l = (j - 1) % 4;
    return l < 3 ? 1 + 3 * f + l : -1;
}

struct HandSkeleton {
    std::array<int, kHandJoints> parent{};             // -1 for the wrist
    std::array<Vec3, kHandJoints> template_offsets{};  // rest offset from parent
    std::array<Vec3, kHandJoints> rest_joints{};       // derived from offsets
    // Shape coefficients scaling each bone offset: scale_j = 1 + sum of the
    // betas listed here (group 0 global, 1..5 per finger, 6 palm,
    // 7/8/9 proximal/middle/distal segments).
    std::array<std::vector<int>, kHandJoints> shape_groups;

    TriangleMesh template_mesh;
    // Per-vertex (joint, weight) pairs; weights are nonnegative and sum to 1.
    std::vector<std::vector<std::pair<int, double>>> vertex_weights;
    // Rest offset of each vertex from each of its bound joints, cached.
    std::vector<std::vector<Vec3>> vertex_offsets;

    void finalize();  // fills rest_joints and vertex_offsets
};

struct HandParams {
    std::array<Rotation6D, kHandRotations> rotations;
    Eigen::Matrix<double, kHandShapeDim, 1> beta = Eigen::Matrix<double, kHandShapeDim, 1>::Zero();
    Vec3 root_translation = Vec3::Zero();
};

struct HandGeometry {
    std::array<Vec3, kHandJoints> joints3d;
    std::vector<Vec3> verts3d;
};

// Cotangents of forward_kinematics (same layout as HandParams).
struct HandParamsGrad {
    std::array<Eigen::Matrix<double, 6, 1>, kHandRotations> rotations;
    Eigen::Matrix<double, kHandShapeDim, 1> beta;
    Vec3 root_translation;
};

// The rigid-skinned stand-in for a parametric hand layer: capsule-per-bone
// template, ~640 triangles.
HandSkeleton make_template_hand();

// Reads the versioned template file (data/hand_template_v1.txt): '#' comment
// lines, "skeleton 21", one "j <idx> <parent> <ox> <oy> <oz> <groups...>"
// line per joint, then the hoimesh block with per-vertex weights.
HandSkeleton load_template_hand(const std::string& path);

// Root-to-leaf composition: world(child) = world(parent) o (offset, R_local);
// vertices follow their bound joints rigidly.
HandGeometry forward_kinematics(const HandSkeleton& skel, const HandParams& params);

// Reverse-mode gradient of forward_kinematics. d_joints / d_verts are the
// cotangents w.r.t. the returned geometry (d_verts may be empty).
HandParamsGrad fk_gradients(const HandSkeleton& skel, const HandParams& params,
                            const std::array<Vec3, kHandJoints>& d_joints,
                            const std::vector<Vec3>& d_verts);

// Per-joint pinhole projection; throws BehindCamera when any joint has z <= 0.
std::array<Vec2, kHandJoints> keypoints_2d(const HandGeometry& geom,
                                           const CameraIntrinsics& k);

// Gram-Schmidt pullback: given dL/dM, accumulate dL/d(a,b).
void rot6d_backward(const Rotation6D& r, const Mat3& d_m, Vec3* d_a, Vec3* d_b);

}  // namespace hoi
