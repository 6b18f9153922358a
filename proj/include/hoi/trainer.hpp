#pragma once

#include <optional>
#include <string>
#include <vector>

#include "hoi/checkpoint.hpp"
#include "hoi/config.hpp"

namespace hoi {

// Linear warmup to base_lr, constant until decay_knot * total_steps, then
// cosine decay to zero at total_steps.
double lr_schedule(int step, int total_steps, double base_lr, int warmup_steps,
                   double decay_knot = 0.72);

// Adaptive moments with decoupled weight decay. Decay applies to weight
// matrices only (rows > 1); biases, layer-norm affines and the mask tokens
// are exempt.
struct AdamW {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.05;
    int64_t t = 0;
    std::map<std::string, Tensor> m, v;

    void init(const ParamStore& params);
    void step(ParamStore& params, const std::map<std::string, Tensor>& grads, double lr);
};

// One sample's forward graph, with the node ids eval needs.
struct SampleForward {
    LossNodes losses;
    int seg_logits = -1;
    int heatmaps = -1;
    int pose9 = -1;
    ManoOut mano;
    int fk_out = -1;
    int sdf_h = -1;
    int sdf_o = -1;
};

SampleForward forward_sample(Tape& tape, const Bound& bound, const RunConfig& cfg,
                             const HandSkeleton& skel, const SceneRecord& rec,
                             const MaskPlan& plan, const std::vector<SdfSample>& queries);

MaskPlan plan_for_record(const RunConfig& cfg, const SceneRecord& rec, double rho,
                         uint64_t seed);
MaskPlan keep_all_plan(const RunConfig& cfg);

struct PretrainResult {
    LossBundle final_loss;
    std::string checkpoint_path;
    std::string state_path;
    std::string log_path;
};

// Runs the training loop; `resume_path` (optional) must point to a state.bin
// written by a previous run with the same config. dry_run executes 2 steps.
PretrainResult run_pretrain(const RunConfig& cfg, const std::string& out_dir,
                            const std::string& resume_path = "", bool dry_run = false);

struct EvalSummary {
    double mje = 0, pamje = 0, stmje = 0, mme = 0, pamme = 0;
    double vauc = 0, pavauc = 0, f5 = 0, f15 = 0, paf5 = 0, paf15 = 0;
    double oce = 0, mce = 0, adds = 0, ome = 0;
    double sdf_sign_acc = 0;
    double seg_acc = 0;
    int samples = 0;
};

EvalSummary run_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                     const std::string& out_dir);

void run_generate_data(const RunConfig& cfg);
void run_eval_masks(const RunConfig& cfg, const std::string& out_dir, int scene_count = 8);
void run_eval_sdf(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& out_dir, int scene_index = 0);
void run_ablation(const RunConfig& cfg, const std::string& out_dir);

std::vector<SceneRecord> load_split(const RunConfig& cfg, const std::string& split,
                                    int count);

}  // namespace hoi
