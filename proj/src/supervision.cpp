#include "hoi/supervision.hpp"

#include <algorithm>
#include <cmath>

#include "hoi/errors.hpp"

namespace hoi {

int sdf_loss(Tape& tape, int pred_hand, int pred_obj, const std::vector<SdfSample>& targets,
             double clamp) {
    if (targets.empty()) throw InvalidShape("sdf_loss: no samples");
    const int q = static_cast<int>(targets.size());
    Tensor t_hand(q, 1), t_obj(q, 1);
    for (int i = 0; i < q; ++i) {
        t_hand.v[i] = std::clamp(targets[i].d_hand, -clamp, clamp);
        t_obj.v[i] = std::clamp(targets[i].d_obj, -clamp, clamp);
    }
    return tape.weighted_sum({{1.0, tape.l1_mean(pred_hand, std::move(t_hand))},
                              {1.0, tape.l1_mean(pred_obj, std::move(t_obj))}});
}

int seg_heatmap_loss(Tape& tape, int seg_logits, const std::vector<int>& seg_labels,
                     int heatmaps, const Tensor& heatmap_targets) {
    return tape.weighted_sum({{1.0, tape.ce_mean(seg_logits, seg_labels)},
                              {1.0, tape.mse_mean(heatmaps, heatmap_targets)}});
}

int hand_loss(Tape& tape, const ManoOut& pred, int fk_out, const HandSkeleton& skel,
              const HandParams& gt) {
    // Parameter MSE over the concatenated (rotations, beta) vector.
    Tensor target(1, kHandRotations * 6 + kHandShapeDim);
    for (int i = 0; i < kHandRotations; ++i)
        for (int c = 0; c < 3; ++c) {
            target.v[i * 6 + c] = gt.rotations[i].a[c];
            target.v[i * 6 + 3 + c] = gt.rotations[i].b[c];
        }
    for (int i = 0; i < kHandShapeDim; ++i) target.v[kHandRotations * 6 + i] = gt.beta[i];
    const int flat = tape.concat_cols({tape.reshape(pred.rot6, 1, kHandRotations * 6),
                                       pred.beta});
    const int param_mse = tape.mse_mean(flat, std::move(target));

    const HandGeometry gt_geom = forward_kinematics(skel, gt);
    const int n_verts = static_cast<int>(gt_geom.verts3d.size());
    Tensor t_joints(kHandJoints, 3), t_verts(n_verts, 3);
    for (int j = 0; j < kHandJoints; ++j)
        for (int c = 0; c < 3; ++c) t_joints.at(j, c) = gt_geom.joints3d[j][c];
    for (int v = 0; v < n_verts; ++v)
        for (int c = 0; c < 3; ++c) t_verts.at(v, c) = gt_geom.verts3d[v][c];

    const int joints = tape.slice_rows(fk_out, 0, kHandJoints);
    const int verts = tape.slice_rows(fk_out, kHandJoints, n_verts);
    return tape.weighted_sum({{1.0, param_mse},
                              {1.0, tape.row_norm_mean(joints, std::move(t_joints))},
                              {1.0, tape.row_norm_mean(verts, std::move(t_verts))}});
}

int object_loss(Tape& tape, int pose9, const ObjectPose& gt) {
    Tensor target(1, 9);
    for (int c = 0; c < 3; ++c) {
        target.v[c] = gt.rotation.a[c];
        target.v[3 + c] = gt.rotation.b[c];
        target.v[6 + c] = gt.translation[c];
    }
    return tape.l1_sum(pose9, std::move(target));
}

LossNodes total_loss(Tape& tape, int l2d, int l3d, int lh, int lo, const LossWeights& w) {
    LossNodes n;
    n.l2d = l2d;
    n.l3d = l3d;
    n.lh = lh;
    n.lo = lo;
    n.total = tape.weighted_sum(
        {{w.lambda_2d, l2d}, {w.lambda_3d, l3d}, {w.lambda_h, lh}, {w.lambda_o, lo}});
    return n;
}

LossBundle read_bundle(const Tape& tape, const LossNodes& nodes) {
    LossBundle b;
    b.l2d = tape.val(nodes.l2d).v[0];
    b.l3d = tape.val(nodes.l3d).v[0];
    b.lh = tape.val(nodes.lh).v[0];
    b.lo = tape.val(nodes.lo).v[0];
    b.total = tape.val(nodes.total).v[0];
    return b;
}

Tensor heatmap_targets(const std::array<Vec2, kHandJoints>& keypoints, int image_size,
                       int grid_w, int grid_h, double sigma) {
    Tensor out(grid_w * grid_h, kHandJoints);
    const double scale = static_cast<double>(grid_w) / image_size;
    for (int j = 0; j < kHandJoints; ++j) {
        const double cx = (keypoints[j].x() + 0.5) * scale - 0.5;
        const double cy = (keypoints[j].y() + 0.5) * scale - 0.5;
        for (int y = 0; y < grid_h; ++y)
            for (int x = 0; x < grid_w; ++x) {
                const double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                out.at(y * grid_w + x, j) = std::exp(-d2 / (2.0 * sigma * sigma));
            }
    }
    return out;
}

std::vector<int> downsample_labels(const std::vector<uint8_t>& seg, int image_size,
                                   int grid) {
    if (seg.size() != static_cast<size_t>(image_size) * image_size || image_size % grid != 0)
        throw InvalidGeometry("downsample_labels: size mismatch");
    const int cell = image_size / grid;
    std::vector<int> out(static_cast<size_t>(grid) * grid, 0);
    for (int gy = 0; gy < grid; ++gy)
        for (int gx = 0; gx < grid; ++gx) {
            int count[3] = {0, 0, 0};
            for (int y = gy * cell; y < (gy + 1) * cell; ++y)
                for (int x = gx * cell; x < (gx + 1) * cell; ++x)
                    ++count[seg[static_cast<size_t>(y) * image_size + x]];
            // Majority vote, ties broken hand > object > background.
            int best = 1;
            if (count[2] > count[best]) best = 2;
            if (count[0] > count[best]) best = 0;
            out[static_cast<size_t>(gy) * grid + gx] = best;
        }
    return out;
}

}  // namespace hoi
