// Command-line surface: generate-data, pretrain, eval, eval-masks, eval-sdf,
// ablate. Exit code 0 on success, 1 with a one-line diagnostic otherwise.
#include <CLI11.hpp>

#include <iostream>

#include "hoi/trainer.hpp"

namespace {

struct CommonArgs {
    std::string preset = "desk";
    std::string config_path;
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool has_seed = false;
    bool dry_run = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--preset", args.preset, "Configuration preset (desk or paper)")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--config", args.config_path, "key=value config file overriding the preset");
    cmd->add_option("--out-dir", args.out_dir, "Output directory");
    cmd->add_option("--seed", args.seed, "Master seed override")
        ->each([&args](const std::string&) { args.has_seed = true; });
    cmd->add_flag("--dry-run", args.dry_run, "Run two steps and exit");
}

hoi::RunConfig build_config(const CommonArgs& args) {
    hoi::RunConfig cfg = hoi::make_preset(args.preset);
    if (!args.config_path.empty()) hoi::apply_config_file(cfg, args.config_path);
    if (args.has_seed) {
        cfg.seed = args.seed;
        cfg.model.seed = args.seed;
    }
    cfg.validate();
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Masked pretraining for hand-object interaction on synthetic scenes"};
    app.require_subcommand(1);

    CommonArgs gen_args, pre_args, eval_args, masks_args, sdf_args, abl_args;
    std::string resume_path, checkpoint_path;
    int mask_scenes = 8;
    int sdf_scene = 0;

    CLI::App* gen = app.add_subcommand("generate-data", "Write the synthetic dataset");
    add_common(gen, gen_args);

    CLI::App* pre = app.add_subcommand("pretrain", "Run masked pretraining");
    add_common(pre, pre_args);
    pre->add_option("--resume", resume_path, "Resume from a state.bin of a previous run");

    CLI::App* ev = app.add_subcommand("eval", "Evaluate a checkpoint on the test split");
    add_common(ev, eval_args);
    ev->add_option("--checkpoint", checkpoint_path, "Model checkpoint path")->required();

    CLI::App* masks = app.add_subcommand("eval-masks", "Dump mask-plan overlays");
    add_common(masks, masks_args);
    masks->add_option("--scenes", mask_scenes, "Number of test scenes to render");

    CLI::App* sdf = app.add_subcommand("eval-sdf", "Dump predicted-vs-exact SDF slices");
    add_common(sdf, sdf_args);
    sdf->add_option("--checkpoint", checkpoint_path, "Model checkpoint path")->required();
    sdf->add_option("--scene", sdf_scene, "Test scene index");

    CLI::App* abl = app.add_subcommand("ablate", "Masking-strategy ablation sweep");
    add_common(abl, abl_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            hoi::RunConfig cfg = build_config(gen_args);
            if (gen->count("--out-dir")) cfg.data_dir = gen_args.out_dir;
            hoi::run_generate_data(cfg);
        } else if (pre->parsed()) {
            const hoi::RunConfig cfg = build_config(pre_args);
            const hoi::PretrainResult r =
                hoi::run_pretrain(cfg, pre_args.out_dir, resume_path, pre_args.dry_run);
            std::cout << "checkpoint: " << r.checkpoint_path << "\nlog: " << r.log_path
                      << "\nfinal total loss: " << r.final_loss.total << '\n';
        } else if (ev->parsed()) {
            const hoi::RunConfig cfg = build_config(eval_args);
            const hoi::EvalSummary s = hoi::run_eval(cfg, checkpoint_path, eval_args.out_dir);
            std::cout << "samples: " << s.samples << "\nMJE (mm): " << s.mje
                      << "\nPAMJE (mm): " << s.pamje << "\nSTMJE (mm): " << s.stmje
                      << "\nMME (mm): " << s.mme << "\nOCE (mm): " << s.oce
                      << "\nMCE (mm): " << s.mce << "\nADD-S (mm): " << s.adds
                      << "\nOME (mm): " << s.ome << "\nSDF sign acc: " << s.sdf_sign_acc
                      << "\nseg acc: " << s.seg_acc << '\n';
        } else if (masks->parsed()) {
            hoi::run_eval_masks(build_config(masks_args), masks_args.out_dir, mask_scenes);
        } else if (sdf->parsed()) {
            hoi::run_eval_sdf(build_config(sdf_args), checkpoint_path, sdf_args.out_dir,
                              sdf_scene);
        } else if (abl->parsed()) {
            hoi::run_ablation(build_config(abl_args), abl_args.out_dir);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
