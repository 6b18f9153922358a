#include "hoi/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

#include "hoi/errors.hpp"
#include "hoi/evalkit.hpp"
#include "hoi/rng.hpp"

namespace hoi {

namespace fs = std::filesystem;

double lr_schedule(int step, int total_steps, double base_lr, int warmup_steps,
                   double decay_knot) {
    if (step < warmup_steps)
        return base_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
    const double knot = decay_knot * total_steps;
    if (step < knot) return base_lr;
    const double span = total_steps - knot;
    if (span <= 0.0) return 0.0;
    return 0.5 * base_lr * (1.0 + std::cos(M_PI * (step - knot) / span));
}

void AdamW::init(const ParamStore& params) {
    m.clear();
    v.clear();
    for (const auto& [name, p] : params.tensors) {
        m[name] = Tensor(p.rows, p.cols);
        v[name] = Tensor(p.rows, p.cols);
    }
    t = 0;
}

void AdamW::step(ParamStore& params, const std::map<std::string, Tensor>& grads, double lr) {
    ++t;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t));
    for (auto& [name, p] : params.tensors) {
        const Tensor& g = grads.at(name);
        Tensor& mi = m.at(name);
        Tensor& vi = v.at(name);
        const double decay = p.rows > 1 ? weight_decay : 0.0;
        for (size_t i = 0; i < p.v.size(); ++i) {
            mi.v[i] = beta1 * mi.v[i] + (1.0 - beta1) * g.v[i];
            vi.v[i] = beta2 * vi.v[i] + (1.0 - beta2) * g.v[i] * g.v[i];
            const double mhat = mi.v[i] / bc1;
            const double vhat = vi.v[i] / bc2;
            p.v[i] -= lr * (mhat / (std::sqrt(vhat) + eps) + decay * p.v[i]);
        }
    }
}

MaskPlan plan_for_record(const RunConfig& cfg, const SceneRecord& rec, double rho,
                         uint64_t seed) {
    Image im;
    im.width = im.height = rec.image_size;
    im.rgb = rec.image;
    const PatchGrid grid = patchify(im, cfg.patch_size);
    const size_t pixels = rec.seg.size();
    std::vector<uint8_t> hand_mask(pixels), obj_mask(pixels);
    for (size_t i = 0; i < pixels; ++i) {
        hand_mask[i] = rec.seg[i] == 1;
        obj_mask[i] = rec.seg[i] == 2;
    }
    const RegionLabels labels = classify_patches(grid, hand_mask, obj_mask);
    MaskConfig mc = cfg.mask;
    mc.skeleton_proportion = rho;
    return build_mask_plan(labels, grid, rec.keypoints2d, mc, seed);
}

MaskPlan keep_all_plan(const RunConfig& cfg) {
    MaskPlan plan;
    plan.keep.assign(static_cast<size_t>(cfg.model.patches()), 1);
    return plan;
}

SampleForward forward_sample(Tape& tape, const Bound& bound, const RunConfig& cfg,
                             const HandSkeleton& skel, const SceneRecord& rec,
                             const MaskPlan& plan, const std::vector<SdfSample>& queries) {
    const ModelConfig& mc = cfg.model;

    // Kept-patch pixels only; masked content never reaches the tape.
    Image im;
    im.width = im.height = rec.image_size;
    im.rgb = rec.image;
    std::vector<std::vector<uint8_t>> blocks;
    patchify(im, cfg.patch_size, &blocks);
    std::vector<int> kept;
    for (size_t i = 0; i < plan.keep.size(); ++i)
        if (plan.keep[i]) kept.push_back(static_cast<int>(i));
    Tensor pixels(static_cast<int>(kept.size()), mc.patch_dim());
    for (size_t r = 0; r < kept.size(); ++r)
        for (int c = 0; c < mc.patch_dim(); ++c)
            pixels.at(static_cast<int>(r), c) = blocks[kept[r]][c] / 255.0;

    const int encoded = encode(tape, bound, mc, pixels, kept);
    const DecodedTokens decoded = decode_dual(tape, bound, mc, encoded, kept);
    const FeatureScales f_h = feature_head(tape, bound, mc, decoded.y_h, "feat_h");
    const FeatureScales f_o = feature_head(tape, bound, mc, decoded.y_o, "feat_o");

    SampleForward out;

    // L_3D: masked SDF prediction at the query points.
    Vec3 center;
    double half_extent;
    scene_normalization(rec, skel, &center, &half_extent);
    std::vector<Vec3> normalized(queries.size());
    std::vector<Vec2> uv(queries.size());
    for (size_t i = 0; i < queries.size(); ++i) {
        normalized[i] = (queries[i].p - center) / half_extent;
        uv[i] = project_point(queries[i].p, rec.camera);
    }
    const Tensor enc = sdf_point_encoding(normalized, mc.fourier_bands);
    const std::vector<Vec2> uv0 = to_feature_coords(uv, rec.image_size, mc.cols());
    const std::vector<Vec2> uv1 = to_feature_coords(uv, rec.image_size, 2 * mc.cols());
    out.sdf_h = sdf_head(tape, bound, mc, f_h, "sdf_h", enc, uv0, uv1);
    out.sdf_o = sdf_head(tape, bound, mc, f_o, "sdf_o", enc, uv0, uv1);
    const int l3d = sdf_loss(tape, out.sdf_h, out.sdf_o, queries, cfg.sdf_clamp);

    // L_2D: segmentation + keypoint heatmaps at the finest feature scale.
    const int fine = 2 * mc.rows();
    out.seg_logits = seg_head(tape, bound, mc, f_h, f_o);
    out.heatmaps = heatmap_head(tape, bound, mc, f_h);
    const int l2d = seg_heatmap_loss(tape, out.seg_logits,
                                     downsample_labels(rec.seg, rec.image_size, fine),
                                     out.heatmaps,
                                     heatmap_targets(rec.keypoints2d, rec.image_size, fine,
                                                     fine));

    // L_h: direct parameter regression through the differentiable hand layer.
    out.mano = mano_head(tape, bound, mc, decoded.y_h);
    out.fk_out = fk_op(tape, skel, out.mano.rot6, out.mano.beta, out.mano.trans);
    const int lh = hand_loss(tape, out.mano, out.fk_out, skel, rec.hand_params);

    // L_o: object pose regression.
    out.pose9 = pose_head(tape, bound, mc, decoded.y_o);
    const int lo = object_loss(tape, out.pose9, rec.object_pose);

    out.losses = total_loss(tape, l2d, l3d, lh, lo, cfg.loss);
    return out;
}

std::vector<SceneRecord> load_split(const RunConfig& cfg, const std::string& split,
                                    int count) {
    std::vector<SceneRecord> records;
    records.reserve(count);
    for (int i = 0; i < count; ++i)
        records.push_back(read_record(record_path(cfg.data_dir, split, i)));
    return records;
}

namespace {

std::vector<SdfSample> pick_queries(const SceneRecord& rec, int count, uint64_t seed) {
    std::vector<int> idx(rec.sdf_samples.size());
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int>(i);
    Rng rng(seed);
    rng.shuffle(idx);
    std::vector<SdfSample> out;
    out.reserve(count);
    for (int i = 0; i < count && i < static_cast<int>(idx.size()); ++i) {
        const SdfSample& s = rec.sdf_samples[idx[i]];
        if (s.p.z() > 1e-3) out.push_back(s);  // projectable queries only
    }
    if (out.empty()) out.push_back(rec.sdf_samples.front());
    return out;
}

double effective_rho(const RunConfig& cfg, int step) {
    if (!cfg.mask_rho_ramp) return cfg.mask.skeleton_proportion;
    return cfg.steps > 1 ? static_cast<double>(step) / (cfg.steps - 1) : 1.0;
}

struct SlotResult {
    std::map<std::string, Tensor> grads;
    LossBundle bundle;
};

void accumulate(std::map<std::string, Tensor>& sum, const std::map<std::string, Tensor>& part,
                double scale) {
    for (auto& [name, t] : sum) {
        const Tensor& p = part.at(name);
        for (size_t i = 0; i < t.v.size(); ++i) t.v[i] += scale * p.v[i];
    }
}

}  // namespace

PretrainResult run_pretrain(const RunConfig& cfg, const std::string& out_dir,
                            const std::string& resume_path, bool dry_run) {
    cfg.validate();
    fs::create_directories(out_dir);
    const HandSkeleton skel = make_template_hand();
    const std::vector<SceneRecord> train = load_split(cfg, "train", cfg.train_scenes);

    ParamStore params = init_params(cfg.model);
    AdamW opt;
    opt.weight_decay = cfg.weight_decay;
    opt.init(params);
    int start_step = 0;

    if (!resume_path.empty()) {
        ParamStore state = load_checkpoint(resume_path);
        for (auto& [name, p] : params.tensors) p = state.at(name);
        for (auto& [name, mi] : opt.m) mi = state.at("opt.m." + name);
        for (auto& [name, vi] : opt.v) vi = state.at("opt.v." + name);
        opt.t = static_cast<int64_t>(state.at("opt.t").v[0]);
        start_step = static_cast<int>(state.at("opt.next_step").v[0]);
    }

    const int total_steps = dry_run ? std::min(cfg.steps, start_step + 2) : cfg.steps;
    const std::string log_path = out_dir + "/train_log.csv";
    std::ofstream log(log_path, resume_path.empty() ? std::ios::trunc : std::ios::app);
    if (!log) throw IoError("cannot open " + log_path);
    if (resume_path.empty()) log << "step,lr,l2d,l3d,lh,lo,total\n";
    log.precision(17);

    LossBundle last{};
    std::vector<SlotResult> slots(cfg.batch);
    for (int step = start_step; step < total_steps; ++step) {
        const double lr = lr_schedule(step, cfg.steps, cfg.base_lr, cfg.warmup_steps,
                                      cfg.decay_knot);
        const double rho = effective_rho(cfg, step);

        const int workers = std::max(1, std::min(cfg.threads, cfg.batch));
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&, w]() {
                for (int k = w; k < cfg.batch; k += workers) {
                    const uint64_t draw = mix_seed(cfg.seed, 0xBA7C4, step * cfg.batch + k);
                    const SceneRecord& rec = train[draw % train.size()];
                    const MaskPlan plan = plan_for_record(
                        cfg, rec, rho, mix_seed(cfg.seed, 0x3A5C, step * cfg.batch + k));
                    const std::vector<SdfSample> queries =
                        pick_queries(rec, cfg.queries_per_step,
                                     mix_seed(cfg.seed, 0x5D, step * cfg.batch + k));

                    Tape tape;
                    const Bound bound = bind_params(tape, params);
                    const SampleForward fwd =
                        forward_sample(tape, bound, cfg, skel, rec, plan, queries);
                    tape.backward(fwd.losses.total);

                    slots[k].bundle = read_bundle(tape, fwd.losses);
                    slots[k].grads.clear();
                    for (const auto& [name, id] : bound.id)
                        slots[k].grads[name] = tape.grad(id);
                }
            });
        }
        for (auto& t : pool) t.join();

        // Order-fixed reduction keeps results identical across thread counts.
        std::map<std::string, Tensor> grad_sum;
        for (const auto& [name, p] : params.tensors) grad_sum[name] = Tensor(p.rows, p.cols);
        LossBundle mean{};
        for (int k = 0; k < cfg.batch; ++k) {
            accumulate(grad_sum, slots[k].grads, 1.0 / cfg.batch);
            mean.l2d += slots[k].bundle.l2d / cfg.batch;
            mean.l3d += slots[k].bundle.l3d / cfg.batch;
            mean.lh += slots[k].bundle.lh / cfg.batch;
            mean.lo += slots[k].bundle.lo / cfg.batch;
            mean.total += slots[k].bundle.total / cfg.batch;
        }
        opt.step(params, grad_sum, lr);
        last = mean;

        log << step << ',' << lr << ',' << mean.l2d << ',' << mean.l3d << ',' << mean.lh
            << ',' << mean.lo << ',' << mean.total << '\n';
        if (step % 100 == 0 || step + 1 == total_steps)
            std::cerr << "step " << step << " lr " << lr << " total " << mean.total << '\n';
    }
    log.flush();

    PretrainResult result;
    result.final_loss = last;
    result.checkpoint_path = out_dir + "/model.ckpt";
    result.state_path = out_dir + "/state.bin";
    result.log_path = log_path;
    save_checkpoint(result.checkpoint_path, params, CheckpointDtype::f32);

    ParamStore state = params;
    for (const auto& [name, mi] : opt.m) state.tensors["opt.m." + name] = mi;
    for (const auto& [name, vi] : opt.v) state.tensors["opt.v." + name] = vi;
    Tensor t_t(1, 1), t_next(1, 1);
    t_t.v[0] = static_cast<double>(opt.t);
    t_next.v[0] = total_steps;
    state.tensors["opt.t"] = t_t;
    state.tensors["opt.next_step"] = t_next;
    save_checkpoint(result.state_path, state, CheckpointDtype::f64);
    return result;
}

namespace {

ObjectPose pose_from_tensor(const Tensor& pose9) {
    ObjectPose p;
    p.rotation.a = Vec3(pose9.v[0], pose9.v[1], pose9.v[2]);
    p.rotation.b = Vec3(pose9.v[3], pose9.v[4], pose9.v[5]);
    p.translation = Vec3(pose9.v[6], pose9.v[7], pose9.v[8]);
    return p;
}

void csv_header(std::ofstream& f) {
    f << "sample,mje,pamje,stmje,mme,pamme,vauc,pavauc,f5,f15,paf5,paf15,"
         "oce,mce,adds,ome,sdf_sign_acc,seg_acc\n";
}

}  // namespace

EvalSummary run_eval(const RunConfig& cfg, const std::string& checkpoint_path,
                     const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);
    const HandSkeleton skel = make_template_hand();
    const std::vector<SceneRecord> test = load_split(cfg, "test", cfg.test_scenes);

    ParamStore loaded = load_checkpoint(checkpoint_path);
    ParamStore params = init_params(cfg.model);
    for (auto& [name, p] : params.tensors) p = loaded.at(name);

    std::ofstream csv(out_dir + "/eval.csv");
    if (!csv) throw IoError("cannot open eval.csv");
    csv.precision(10);
    csv_header(csv);

    EvalSummary sum;
    const MaskPlan plan = keep_all_plan(cfg);
    for (size_t i = 0; i < test.size(); ++i) {
        const SceneRecord& rec = test[i];
        Tape tape;
        const Bound bound = bind_params(tape, params, /*needs_grad=*/false);
        // Evaluation runs unmasked and scores every stored query.
        std::vector<SdfSample> queries;
        for (const SdfSample& s : rec.sdf_samples)
            if (s.p.z() > 1e-3) queries.push_back(s);
        const SampleForward fwd = forward_sample(tape, bound, cfg, skel, rec, plan, queries);

        HandParams pred_params = hand_params_from_tensors(
            tape.val(fwd.mano.rot6), tape.val(fwd.mano.beta), tape.val(fwd.mano.trans));
        const HandGeometry pred_geom = forward_kinematics(skel, pred_params);
        const HandGeometry gt_geom = forward_kinematics(skel, rec.hand_params);
        const HandMetrics hm = hand_metrics(pred_geom, gt_geom);

        ObjectPose pred_pose = pose_from_tensor(tape.val(fwd.pose9));
        const TriangleMesh model = make_object_mesh(rec.object_shape, rec.object_dims);
        ObjectMetrics om;
        try {
            om = object_metrics(pred_pose, rec.object_pose, model);
        } catch (const DegenerateRotation&) {
            // Untrained pose heads can emit degenerate 6D vectors; score the
            // identity rotation instead of aborting the whole evaluation.
            pred_pose.rotation = Rotation6D{};
            om = object_metrics(pred_pose, rec.object_pose, model);
        }

        int sign_hits = 0;
        const Tensor& dh = tape.val(fwd.sdf_h);
        const Tensor& dobj = tape.val(fwd.sdf_o);
        for (size_t q = 0; q < queries.size(); ++q) {
            sign_hits += (dh.v[q] < 0) == (queries[q].d_hand < 0);
            sign_hits += (dobj.v[q] < 0) == (queries[q].d_obj < 0);
        }
        const double sdf_acc = static_cast<double>(sign_hits) / (2.0 * queries.size());

        const int fine = 2 * cfg.model.rows();
        const std::vector<int> gt_labels = downsample_labels(rec.seg, rec.image_size, fine);
        const Tensor& logits = tape.val(fwd.seg_logits);
        int seg_hits = 0;
        for (int p = 0; p < logits.rows; ++p) {
            int best = 0;
            for (int c = 1; c < 3; ++c)
                if (logits.at(p, c) > logits.at(p, best)) best = c;
            seg_hits += best == gt_labels[p];
        }
        const double seg_acc = static_cast<double>(seg_hits) / logits.rows;

        csv << i << ',' << hm.mje << ',' << hm.pamje << ',' << hm.stmje << ',' << hm.mme
            << ',' << hm.pamme << ',' << hm.vauc << ',' << hm.pavauc << ',' << hm.f5 << ','
            << hm.f15 << ',' << hm.paf5 << ',' << hm.paf15 << ',' << om.oce << ',' << om.mce
            << ',' << om.adds << ',' << om.ome << ',' << sdf_acc << ',' << seg_acc << '\n';

        sum.mje += hm.mje;
        sum.pamje += hm.pamje;
        sum.stmje += hm.stmje;
        sum.mme += hm.mme;
        sum.pamme += hm.pamme;
        sum.vauc += hm.vauc;
        sum.pavauc += hm.pavauc;
        sum.f5 += hm.f5;
        sum.f15 += hm.f15;
        sum.paf5 += hm.paf5;
        sum.paf15 += hm.paf15;
        sum.oce += om.oce;
        sum.mce += om.mce;
        sum.adds += om.adds;
        sum.ome += om.ome;
        sum.sdf_sign_acc += sdf_acc;
        sum.seg_acc += seg_acc;
        ++sum.samples;
    }

    const double n = std::max(1, sum.samples);
    sum.mje /= n;
    sum.pamje /= n;
    sum.stmje /= n;
    sum.mme /= n;
    sum.pamme /= n;
    sum.vauc /= n;
    sum.pavauc /= n;
    sum.f5 /= n;
    sum.f15 /= n;
    sum.paf5 /= n;
    sum.paf15 /= n;
    sum.oce /= n;
    sum.mce /= n;
    sum.adds /= n;
    sum.ome /= n;
    sum.sdf_sign_acc /= n;
    sum.seg_acc /= n;

    csv << "mean," << sum.mje << ',' << sum.pamje << ',' << sum.stmje << ',' << sum.mme << ','
        << sum.pamme << ',' << sum.vauc << ',' << sum.pavauc << ',' << sum.f5 << ',' << sum.f15
        << ',' << sum.paf5 << ',' << sum.paf15 << ',' << sum.oce << ',' << sum.mce << ','
        << sum.adds << ',' << sum.ome << ',' << sum.sdf_sign_acc << ',' << sum.seg_acc << '\n';
    return sum;
}

void run_generate_data(const RunConfig& cfg) {
    cfg.validate();
    write_dataset(cfg.data_dir, cfg.scene_config(), make_template_hand(), cfg.train_scenes,
                  cfg.test_scenes, cfg.seed, cfg.patch_size, cfg.threads);
}

void run_eval_masks(const RunConfig& cfg, const std::string& out_dir, int scene_count) {
    cfg.validate();
    fs::create_directories(out_dir);
    std::ofstream dump(out_dir + "/masks.txt");
    if (!dump) throw IoError("cannot open masks.txt");

    const int count = std::min(scene_count, cfg.test_scenes);
    for (int i = 0; i < count; ++i) {
        const SceneRecord rec = read_record(record_path(cfg.data_dir, "test", i));
        const uint64_t seed = mix_seed(cfg.seed, 0xEA5, i);
        const MaskPlan plan =
            plan_for_record(cfg, rec, cfg.mask.skeleton_proportion, seed);

        Image im;
        im.width = im.height = rec.image_size;
        im.rgb = rec.image;
        const PatchGrid grid = patchify(im, cfg.patch_size);
        Image overlay = im;
        for (int p = 0; p < grid.patch_count(); ++p) {
            if (plan.keep[p]) continue;
            const int r = p / grid.cols, c = p % grid.cols;
            for (int y = r * grid.patch_size; y < (r + 1) * grid.patch_size; ++y)
                for (int x = c * grid.patch_size; x < (c + 1) * grid.patch_size; ++x) {
                    uint8_t* px = overlay.pixel(x, y);
                    px[0] /= 4;
                    px[1] /= 4;
                    px[2] /= 4;
                }
        }
        char name[64];
        std::snprintf(name, sizeof(name), "/mask_%03d_%s.ppm", i,
                      mask_pattern_name(plan.pattern_used));
        write_ppm(overlay, out_dir + name);
        dump << "scene=" << i << " seed=" << seed << " pattern="
             << mask_pattern_name(plan.pattern_used) << " kept=" << plan.kept_count() << ' '
             << mask_plan_rle(plan) << '\n';
    }
}

void run_eval_sdf(const RunConfig& cfg, const std::string& checkpoint_path,
                  const std::string& out_dir, int scene_index) {
    cfg.validate();
    fs::create_directories(out_dir);
    const HandSkeleton skel = make_template_hand();
    const SceneRecord rec = read_record(record_path(cfg.data_dir, "test", scene_index));

    ParamStore loaded = load_checkpoint(checkpoint_path);
    ParamStore params = init_params(cfg.model);
    for (auto& [name, p] : params.tensors) p = loaded.at(name);

    Vec3 center;
    double half;
    scene_normalization(rec, skel, &center, &half);
    const TriangleMesh hand_mesh = posed_hand_mesh(rec, skel);
    const TriangleMesh obj_mesh = posed_object_mesh(rec);

    const int res = 64;
    const double fractions[3] = {-0.4, 0.0, 0.4};
    for (int plane = 0; plane < 3; ++plane) {
        const double z = center.z() + fractions[plane] * half;
        std::vector<SdfSample> grid_queries;
        grid_queries.reserve(res * res);
        for (int y = 0; y < res; ++y)
            for (int x = 0; x < res; ++x) {
                SdfSample s;
                s.p = Vec3(center.x() + (2.0 * x / (res - 1) - 1.0) * half,
                           center.y() + (2.0 * y / (res - 1) - 1.0) * half, z);
                s.d_hand = signed_distance(s.p, hand_mesh);
                s.d_obj = signed_distance(s.p, obj_mesh);
                grid_queries.push_back(s);
            }

        Tape tape;
        const Bound bound = bind_params(tape, params, /*needs_grad=*/false);
        const SampleForward fwd =
            forward_sample(tape, bound, cfg, skel, rec, keep_all_plan(cfg), grid_queries);

        auto shade = [](double d) {
            // Diverging map: inside red, outside blue, white near the surface.
            const double t = std::clamp(d / 0.05, -1.0, 1.0);
            uint8_t rgb[3];
            if (t < 0) {
                rgb[0] = 255;
                rgb[1] = rgb[2] = static_cast<uint8_t>(255 * (1.0 + t));
            } else {
                rgb[2] = 255;
                rgb[0] = rgb[1] = static_cast<uint8_t>(255 * (1.0 - t));
            }
            return std::array<uint8_t, 3>{rgb[0], rgb[1], rgb[2]};
        };

        const char* branch_names[2] = {"hand", "obj"};
        for (int branch = 0; branch < 2; ++branch) {
            const Tensor& pred = tape.val(branch == 0 ? fwd.sdf_h : fwd.sdf_o);
            Image side = Image::filled(2 * res, res, 0, 0, 0);
            for (int y = 0; y < res; ++y)
                for (int x = 0; x < res; ++x) {
                    const int q = y * res + x;
                    const auto pc = shade(pred.v[q]);
                    const double gt_d =
                        branch == 0 ? grid_queries[q].d_hand : grid_queries[q].d_obj;
                    const auto gc = shade(gt_d);
                    std::copy(pc.begin(), pc.end(), side.pixel(x, y));
                    std::copy(gc.begin(), gc.end(), side.pixel(res + x, y));
                }
            char name[64];
            std::snprintf(name, sizeof(name), "/sdf_scene%d_plane%d_%s.ppm", scene_index,
                          plane, branch_names[branch]);
            write_ppm(side, out_dir + name);
        }
    }
}

void run_ablation(const RunConfig& cfg, const std::string& out_dir) {
    cfg.validate();
    fs::create_directories(out_dir);

    struct Row {
        std::string name;
        MaskRates rates;
        double rho;
        bool ramp;
    };
    const MaskRates uniform{0.65, 0.65, 0.65};
    const std::vector<Row> rows = {
        {"global_random", uniform, 0.0, false},
        {"rmra", cfg.mask.rates, 0.0, false},
        {"rmra_sg_rho0.5", cfg.mask.rates, 0.5, false},
        {"rmra_sg_rho1.0", cfg.mask.rates, 1.0, false},
        {"rmra_sg_ramp", cfg.mask.rates, 0.0, true},
    };

    std::ofstream csv(out_dir + "/ablation.csv");
    std::ofstream md(out_dir + "/ablation.md");
    if (!csv || !md) throw IoError("cannot open ablation outputs");
    csv << "config,mje,pamje,stmje,mme,oce,mce,adds,ome,sdf_sign_acc,seg_acc,final_total\n";
    md << "| config | MJE | PAMJE | STMJE | MME | OCE | MCE | ADD-S | OME | SDF acc | seg acc |\n"
       << "|---|---|---|---|---|---|---|---|---|---|---|\n";
    csv.precision(10);
    md.precision(4);

    for (const Row& row : rows) {
        RunConfig run = cfg;
        run.mask.rates = row.rates;
        run.mask.skeleton_proportion = row.rho;
        run.mask_rho_ramp = row.ramp;
        run.steps = cfg.ablate_steps;
        const std::string dir = out_dir + "/" + row.name;
        const PretrainResult pre = run_pretrain(run, dir);
        const EvalSummary ev = run_eval(run, pre.checkpoint_path, dir);
        csv << row.name << ',' << ev.mje << ',' << ev.pamje << ',' << ev.stmje << ','
            << ev.mme << ',' << ev.oce << ',' << ev.mce << ',' << ev.adds << ',' << ev.ome
            << ',' << ev.sdf_sign_acc << ',' << ev.seg_acc << ',' << pre.final_loss.total
            << '\n';
        md << "| " << row.name << " | " << ev.mje << " | " << ev.pamje << " | " << ev.stmje
           << " | " << ev.mme << " | " << ev.oce << " | " << ev.mce << " | " << ev.adds
           << " | " << ev.ome << " | " << ev.sdf_sign_acc << " | " << ev.seg_acc << " |\n";
        std::cerr << "ablation row done: " << row.name << '\n';
    }
}

}  // namespace hoi
