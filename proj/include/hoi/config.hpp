#pragma once

#include <string>

#include "hoi/masking.hpp"
#include "hoi/network.hpp"
#include "hoi/supervision.hpp"
#include "hoi/synthscene.hpp"

namespace hoi {

// Flat key=value run configuration. Unknown keys are hard errors; '#' starts
// a comment. Key names match the struct fields below (see README).
struct RunConfig {
    // dataset
    std::string data_dir = "out/desk-data";
    int train_scenes = 256;
    int test_scenes = 64;
    int image_size = 64;
    int patch_size = 8;
    int sdf_samples_per_scene = 512;

    // masking
    MaskConfig mask;
    bool mask_rho_ramp = false;  // ramp skeleton proportion 0 -> 1 over training

    // model
    ModelConfig model;

    // loss
    LossWeights loss;
    double sdf_clamp = kSdfClampDefault;

    // training
    int steps = 2000;
    int batch = 16;
    int warmup_steps = 100;
    double base_lr = 5e-4;
    double weight_decay = 0.05;
    double decay_knot = 0.72;  // cosine decay starts at this fraction of training
    int queries_per_step = 64; // SDF queries drawn per sample per step
    int threads = 4;
    uint64_t seed = 1;

    // ablation
    int ablate_steps = 200;

    void validate() const;
    SceneConfig scene_config() const;
};

// Desk preset: CPU-trainable in minutes. Paper preset: the published recipe
// (224/16 inputs, 50k steps, AdamW lr 5e-5, wd 0.05, batch 22, 1k warmup).
RunConfig preset_desk();
RunConfig preset_paper();
RunConfig make_preset(const std::string& name);  // throws InvalidConfig

void apply_config_file(RunConfig& cfg, const std::string& path);
void apply_config_line(RunConfig& cfg, const std::string& key, const std::string& value);

}  // namespace hoi
