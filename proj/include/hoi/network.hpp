#pragma once

#include <map>
#include <string>

#include "hoi/hand.hpp"
#include "hoi/tensor.hpp"

namespace hoi {

// Desk-scale masked autoencoder: shared encoder, two parallel decoders, and
// the prediction heads. The paper-scale 224/16 geometry is a config preset.
struct ModelConfig {
    int image_size = 64;
    int patch_size = 8;
    int dim = 64;        // encoder width
    int enc_depth = 4;
    int enc_heads = 4;
    int dec_dim = 64;    // decoder width (each decoder has its own weights)
    int dec_depth = 2;
    int dec_heads = 4;
    int feat_channels = 32;  // channels per feature-map scale
    int sdf_hidden = 64;
    int mlp_ratio = 4;
    int fourier_bands = 6;
    uint64_t seed = 1;

    int rows() const { return image_size / patch_size; }
    int cols() const { return image_size / patch_size; }
    int patches() const { return rows() * cols(); }
    int patch_dim() const { return patch_size * patch_size * 3; }
    int sdf_input_dim() const { return 6 * fourier_bands + 3 + 2 * feat_channels; }
    void validate() const;
};

// Named weight tensors; the ordered map fixes the iteration order used by
// the optimizer and the checkpoint writer.
struct ParamStore {
    std::map<std::string, Tensor> tensors;

    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
};

// Seed-deterministic scaled-uniform init (limit sqrt(6/(fan_in+fan_out))).
// Rotation-emitting biases start at the identity 6D value and translation
// biases at mid-range depth so the kinematic losses are finite from step 0.
ParamStore init_params(const ModelConfig& cfg);

// Fixed 2D sine-cosine position table for a rows x cols grid, row-major.
Tensor sincos_pos_embed(int rows, int cols, int dim);

// Per-tape leaf ids for every weight tensor.
struct Bound {
    std::map<std::string, int> id;
    int p(const std::string& name) const;
};
Bound bind_params(Tape& tape, const ParamStore& store, bool needs_grad = true);

// --- forward pieces -------------------------------------------------------

// kept_pixels: [N', patch_dim] pixel values in [0,1] for the kept patches
// only; masked patch content never reaches the tape.
int encode(Tape& tape, const Bound& b, const ModelConfig& cfg, const Tensor& kept_pixels,
           const std::vector<int>& kept_indices);

struct DecodedTokens {
    int y_h = -1;
    int y_o = -1;
};
DecodedTokens decode_dual(Tape& tape, const Bound& b, const ModelConfig& cfg, int encoded,
                          const std::vector<int>& kept_indices);

// Two scales: s0 at patch-grid resolution [N, C], s1 at 2x resolution
// [4N, C] via a learned pixel-shuffle upsampling.
struct FeatureScales {
    int s0 = -1;
    int s1 = -1;
};
FeatureScales feature_head(Tape& tape, const Bound& b, const ModelConfig& cfg, int decoded,
                           const std::string& prefix);

// Query-point conditioning: [fourier | p] columns for normalized points.
Tensor sdf_point_encoding(const std::vector<Vec3>& normalized_points, int bands);
// Maps continuous image pixel coordinates into a grid_w-wide feature grid
// (both use the center-at-integer convention).
std::vector<Vec2> to_feature_coords(const std::vector<Vec2>& image_uv, int image_size,
                                    int grid_w);

// MLP(f_fpe(p) (+) p (+) f(pi(p))) -> [Q, 1]; features are bilinear-sampled
// from both scales.
int sdf_head(Tape& tape, const Bound& b, const ModelConfig& cfg, const FeatureScales& f,
             const std::string& prefix, const Tensor& point_encodings,
             const std::vector<Vec2>& uv_scale0, const std::vector<Vec2>& uv_scale1);

int seg_head(Tape& tape, const Bound& b, const ModelConfig& cfg, const FeatureScales& f_h,
             const FeatureScales& f_o);                       // [4N, 3] logits
int heatmap_head(Tape& tape, const Bound& b, const ModelConfig& cfg,
                 const FeatureScales& f_h);                   // [4N, 21]
int pose_head(Tape& tape, const Bound& b, const ModelConfig& cfg, int y_o);  // [1, 9]

struct ManoOut {
    int rot6 = -1;   // [16, 6]
    int beta = -1;   // [1, 10]
    int trans = -1;  // [1, 3]
};
ManoOut mano_head(Tape& tape, const Bound& b, const ModelConfig& cfg, int y_h);

// Differentiable forward kinematics: output [21 + V, 3] (joints then verts).
int fk_op(Tape& tape, const HandSkeleton& skel, int rot6, int beta, int trans);

HandParams hand_params_from_tensors(const Tensor& rot6, const Tensor& beta,
                                    const Tensor& trans);

}  // namespace hoi
