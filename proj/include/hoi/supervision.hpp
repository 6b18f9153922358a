#pragma once

#include "hoi/network.hpp"
#include "hoi/sdf.hpp"

namespace hoi {

struct ObjectPose {
    Rotation6D rotation;
    Vec3 translation = Vec3(0, 0, 0.5);  // camera frame, z > 0
};

struct LossWeights {
    double lambda_2d = 1.0;
    double lambda_3d = 1.0;
    double lambda_h = 1.0;
    double lambda_o = 1.0;
};

struct LossBundle {
    double l2d = 0, l3d = 0, lh = 0, lo = 0, total = 0;
};

struct LossNodes {
    int l2d = -1, l3d = -1, lh = -1, lo = -1, total = -1;
};

// L_3D: mean absolute error against clamped targets, hand branch plus object
// branch. Predictions are [Q, 1] tensors aligned with `targets`.
int sdf_loss(Tape& tape, int pred_hand, int pred_obj, const std::vector<SdfSample>& targets,
             double clamp);
constexpr double kSdfClampDefault = 0.1;

// L_2D: per-pixel 3-class cross-entropy plus per-joint heatmap MSE, equally
// weighted. seg_logits [P, 3], heatmaps [P, 21].
int seg_heatmap_loss(Tape& tape, int seg_logits, const std::vector<int>& seg_labels,
                     int heatmaps, const Tensor& heatmap_targets);

// L_h: MSE over (16x6 rotations, beta) plus mean per-joint and per-vertex
// Euclidean errors between FK(pred) and FK(gt). `fk_out` is the fk_op output
// for the predicted parameters.
int hand_loss(Tape& tape, const ManoOut& pred, int fk_out, const HandSkeleton& skel,
              const HandParams& gt);

// L_o: sum of absolute differences over the 6D rotation values and the
// translation. pose9 is the pose_head output [1, 9].
int object_loss(Tape& tape, int pose9, const ObjectPose& gt);

LossNodes total_loss(Tape& tape, int l2d, int l3d, int lh, int lo, const LossWeights& w);
LossBundle read_bundle(const Tape& tape, const LossNodes& nodes);

// Ground-truth builders for the 2D losses, both at the finest feature scale.
// Heatmaps are per-joint Gaussians (peak 1) with sigma in feature pixels;
// labels are majority votes per cell with ties broken hand > object > bg.
Tensor heatmap_targets(const std::array<Vec2, kHandJoints>& keypoints, int image_size,
                       int grid_w, int grid_h, double sigma = 2.0);
std::vector<int> downsample_labels(const std::vector<uint8_t>& seg, int image_size,
                                   int grid);

}  // namespace hoi
