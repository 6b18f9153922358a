// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. argv[1] must be the path of the `hoi` CLI binary; the training,
// ablation and persistence criteria drive the real executable.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <vector>

#include "hoi/evalkit.hpp"
#include "hoi/trainer.hpp"
#include "test_oracles.hpp"

using namespace hoi;
namespace fs = std::filesystem;

namespace {

std::string g_cli;
std::string g_root;

struct Check {
    bool ok = true;
    std::string why;
    void expect(bool cond, const std::string& msg) {
        if (!cond && ok) {
            ok = false;
            why = msg;
        }
    }
};

int run_cli(const std::string& args) {
    const std::string cmd = g_cli + " " + args;
    return std::system(cmd.c_str());
}

std::string slurp(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) return {};
    return std::string((std::istreambuf_iterator<char>(f)), {});
}

std::vector<std::vector<double>> read_csv_numbers(const std::string& path) {
    std::ifstream f(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::getline(f, line);  // header
    while (std::getline(f, line)) {
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                row.push_back(std::stod(cell));
            } catch (...) {
                row.push_back(std::numeric_limits<double>::quiet_NaN());
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// --- criterion 1: geometry ------------------------------------------------

bool geometry_suite(Check& c) {
    Rng rng(1);
    for (int i = 0; i < 2000; ++i) {
        const Rotation6D r{Vec3(rng.normal(), rng.normal(), rng.normal()),
                           Vec3(rng.normal(), rng.normal(), rng.normal())};
        if (r.a.norm() < 0.2 || r.a.cross(r.b).norm() < 0.2 * r.a.norm() * r.b.norm())
            continue;
        const Mat3 m = rot6d_to_matrix(r);
        c.expect((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-10,
                 "6D orthonormality");
        c.expect(std::abs(m.determinant() - 1.0) < 1e-12, "6D determinant");
        const Mat3 back = rot6d_to_matrix(matrix_to_rot6d(m));
        c.expect((back - m).cwiseAbs().maxCoeff() < 1e-10, "6D round-trip");
    }
    for (int i = 0; i < 1000; ++i) {
        const CameraIntrinsics k{rng.uniform(50, 500), rng.uniform(50, 500),
                                 rng.uniform(0, 200), rng.uniform(0, 200)};
        const Vec3 p(rng.normal(), rng.normal(), rng.uniform(0.1, 5.0));
        Mat3 km;
        km << k.fx, 0, k.cx, 0, k.fy, k.cy, 0, 0, 1;
        const Vec3 h = km * p;
        c.expect((project_point(p, k) - Vec2(h.x() / h.z(), h.y() / h.z())).norm() < 1e-12,
                 "projection oracle");
    }
    for (int i = 0; i < 500; ++i) {
        FeatureMap g1, g2;
        g1.channels = g2.channels = 2;
        g1.height = g2.height = 5;
        g1.width = g2.width = 6;
        g1.data.resize(60);
        g2.data.resize(60);
        for (double& v : g1.data) v = rng.normal();
        for (double& v : g2.data) v = rng.normal();
        FeatureMap mix = g1;
        const double a = rng.normal(), b = rng.normal();
        for (size_t j = 0; j < 60; ++j) mix.data[j] = a * g1.data[j] + b * g2.data[j];
        const Vec2 uv(rng.uniform(-1, 7), rng.uniform(-1, 6));
        const auto s1 = bilinear_sample(g1, uv), s2 = bilinear_sample(g2, uv);
        const auto sm = bilinear_sample(mix, uv);
        for (int ch = 0; ch < 2; ++ch)
            c.expect(std::abs(sm[ch] - (a * s1[ch] + b * s2[ch])) < 1e-12,
                     "bilinear linearity");
    }
    return c.ok;
}

// --- criterion 2: kinematics ------------------------------------------------

bool kinematics_suite(Check& c) {
    const HandSkeleton skel = make_template_hand();
    const HandGeometry rest = forward_kinematics(skel, HandParams{});
    for (int j = 0; j < kHandJoints; ++j)
        c.expect(rest.joints3d[j] == skel.rest_joints[j], "identity-pose exactness");

    Rng rng(2);
    auto random_pose = [&rng]() {
        HandParams p;
        for (int i = 0; i < kHandRotations; ++i) {
            const Mat3 m = testing::random_rotation_matrix(rng);
            p.rotations[i] = Rotation6D{m.col(0), m.col(1)};
        }
        for (int i = 0; i < kHandShapeDim; ++i) p.beta[i] = rng.uniform(-0.1, 0.1);
        p.root_translation = Vec3(rng.normal(), rng.normal(), rng.uniform(0.3, 0.6));
        return p;
    };

    const double h = 1e-5;
    for (int trial = 0; trial < 20; ++trial) {
        const HandParams p = random_pose();
        const HandGeometry geom = forward_kinematics(skel, p);
        for (int j = 1; j < kHandJoints; ++j) {
            double scale = 1.0;
            for (int g : skel.shape_groups[j]) scale += p.beta[g];
            const double rest_len = std::abs(scale) * skel.template_offsets[j].norm();
            const double posed = (geom.joints3d[j] - geom.joints3d[skel.parent[j]]).norm();
            c.expect(std::abs(posed - rest_len) < 1e-9, "bone-length preservation");
        }

        std::array<Vec3, kHandJoints> d_joints;
        for (auto& v : d_joints) v = Vec3(rng.normal(), rng.normal(), rng.normal());
        std::vector<Vec3> d_verts(skel.template_mesh.vertices.size());
        for (auto& v : d_verts) v = Vec3(rng.normal(), rng.normal(), rng.normal());
        const HandParamsGrad grad = fk_gradients(skel, p, d_joints, d_verts);
        auto objective = [&](const HandParams& q) {
            const HandGeometry g = forward_kinematics(skel, q);
            double acc = 0;
            for (int j = 0; j < kHandJoints; ++j) acc += d_joints[j].dot(g.joints3d[j]);
            for (size_t v = 0; v < d_verts.size(); ++v) acc += d_verts[v].dot(g.verts3d[v]);
            return acc;
        };
        // A deterministic spread of parameter coordinates per pose.
        for (int r = trial % 3; r < kHandRotations; r += 4) {
            const int coord = (trial + r) % 6;
            HandParams plus = p, minus = p;
            (coord < 3 ? plus.rotations[r].a[coord] : plus.rotations[r].b[coord - 3]) += h;
            (coord < 3 ? minus.rotations[r].a[coord] : minus.rotations[r].b[coord - 3]) -= h;
            const double fd = (objective(plus) - objective(minus)) / (2 * h);
            const double an = grad.rotations[r][coord];
            c.expect(std::abs(fd - an) <= 1e-4 * std::max({1.0, std::abs(fd), std::abs(an)}),
                     "FK gradient vs finite differences");
        }
        {
            const int bi = trial % kHandShapeDim;
            HandParams plus = p, minus = p;
            plus.beta[bi] += h;
            minus.beta[bi] -= h;
            const double fd = (objective(plus) - objective(minus)) / (2 * h);
            c.expect(std::abs(fd - grad.beta[bi]) <=
                         1e-4 * std::max({1.0, std::abs(fd), std::abs(grad.beta[bi])}),
                     "FK beta gradient");
        }
    }
    return c.ok;
}

// --- criterion 3: SDF oracle -------------------------------------------------

bool sdf_suite(Check& c) {
    Rng rng(3);
    auto random_mesh = [&rng]() {
        const Mat3 r = testing::random_rotation_matrix(rng);
        const Vec3 t(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2));
        switch (rng.uniform_int(3)) {
            case 0:
                return make_box({rng.uniform(0.05, 0.3), rng.uniform(0.05, 0.3),
                                 rng.uniform(0.05, 0.3)})
                    .transformed(r, t);
            case 1:
                return make_cylinder(rng.uniform(0.05, 0.2), rng.uniform(0.05, 0.3), 12)
                    .transformed(r, t);
            default:
                return make_icosphere(rng.uniform(0.05, 0.3), 1).transformed(r, t);
        }
    };

    for (int m = 0; m < 5; ++m) {
        const TriangleMesh mesh = random_mesh();
        c.expect(is_watertight(mesh), "mesh watertight");
        const Aabb box = mesh.bounds().inflated(1.5);
        for (int i = 0; i < 200; ++i) {
            const Vec3 p(rng.uniform(box.lo.x(), box.hi.x()),
                         rng.uniform(box.lo.y(), box.hi.y()),
                         rng.uniform(box.lo.z(), box.hi.z()));
            const double got = signed_distance(p, mesh);
            double brute = std::numeric_limits<double>::max();
            for (const auto& t : mesh.triangles)
                brute = std::min(brute, point_triangle_distance(p, mesh.vertices[t[0]],
                                                                mesh.vertices[t[1]],
                                                                mesh.vertices[t[2]]));
            if (testing::ray_parity_inside(p, mesh, rng)) brute = -brute;
            c.expect(std::abs(got - brute) < 1e-9, "brute-force + ray-parity oracle");
        }
    }

    const TriangleMesh mesh = random_mesh();
    const Aabb box = mesh.bounds().inflated(1.5);
    for (int i = 0; i < 10000; ++i) {
        const Vec3 p(rng.uniform(box.lo.x(), box.hi.x()), rng.uniform(box.lo.y(), box.hi.y()),
                     rng.uniform(box.lo.z(), box.hi.z()));
        const Vec3 q = p + 0.04 * Vec3(rng.normal(), rng.normal(), rng.normal());
        c.expect(std::abs(signed_distance(p, mesh) - signed_distance(q, mesh)) <=
                     (p - q).norm() + 1e-12,
                 "1-Lipschitz property");
    }
    return c.ok;
}

// --- criterion 4: masking ---------------------------------------------------

bool masking_suite(Check& c) {
    // The synthetic layout mirrors the unit suite: hand patch rows 1..5 x
    // cols 1..5, object col 6, keypoints one finger per column.
    Image image = Image::filled(64, 64, 10, 10, 10);
    std::vector<uint8_t> hand_mask(64 * 64, 0), obj_mask(64 * 64, 0);
    for (int y = 8; y < 48; ++y)
        for (int x = 8; x < 48; ++x) hand_mask[y * 64 + x] = 1;
    for (int y = 16; y < 48; ++y)
        for (int x = 48; x < 56; ++x) obj_mask[y * 64 + x] = 1;
    const PatchGrid grid = patchify(image, 8);
    const RegionLabels labels = classify_patches(grid, hand_mask, obj_mask);
    std::array<Vec2, 21> keypoints;
    keypoints.fill(Vec2(20, 44));
    for (int f = 0; f < 5; ++f)
        for (int l = 0; l < 4; ++l)
            keypoints[finger_joint(f, l)] = Vec2(12 + 7 * f, 36 - 8 * l);

    MaskConfig cfg;
    const KeepQuotas quotas = allocate_keep_counts(labels, cfg.rates);
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        const MaskPlan plan = build_mask_plan(labels, grid, keypoints, cfg, seed);
        int kept[3] = {0, 0, 0};
        for (int p = 0; p < grid.patch_count(); ++p)
            if (plan.keep[p]) ++kept[static_cast<int>(labels.label[p])];
        c.expect(kept[1] == quotas.hand && kept[2] == quotas.object &&
                     kept[0] == quotas.background,
                 "exact quota satisfaction");
        const MaskPlan again = build_mask_plan(labels, grid, keypoints, cfg, seed);
        c.expect(again.keep == plan.keep, "determinism");
    }
    for (uint64_t seed = 0; seed < 1000; ++seed) {
        const auto masked =
            skeleton_guided_select(labels, grid, 10, keypoints,
                                   MaskPattern::skeleton_random, 1, seed);
        for (int p : masked)
            c.expect(labels.label[p] == Region::hand, "region purity");
    }

    MaskConfig half = cfg;
    half.skeleton_proportion = 0.5;
    int skeleton = 0;
    for (uint64_t seed = 0; seed < 10000; ++seed)
        skeleton += build_mask_plan(labels, grid, keypoints, half, seed).pattern_used !=
                    MaskPattern::random;
    c.expect(std::abs(skeleton / 10000.0 - 0.5) < 0.02, "rho=0.5 frequency");

    // single_finger masks all patches of the chosen finger.
    uint64_t seed = 0;
    while (true) {
        Rng probe(seed);
        if (probe.uniform_int(5) == 1) break;
        ++seed;
    }
    const auto masked = skeleton_guided_select(
        labels, grid, labels.count(Region::hand) - 8, keypoints,
        MaskPattern::single_finger, 0, seed);
    for (int chain : {34, 26, 18, 10})
        c.expect(std::find(masked.begin(), masked.end(), chain) != masked.end(),
                 "single_finger covers the chain");
    return c.ok;
}

// --- criterion 5: differentiation -------------------------------------------

bool diff_suite(Check& c) {
    ModelConfig cfg;
    cfg.image_size = 16;
    cfg.patch_size = 8;
    cfg.dim = 8;
    cfg.enc_depth = 1;
    cfg.enc_heads = 2;
    cfg.dec_dim = 8;
    cfg.dec_depth = 1;
    cfg.dec_heads = 2;
    cfg.feat_channels = 4;
    cfg.sdf_hidden = 8;
    cfg.mlp_ratio = 2;
    cfg.fourier_bands = 2;
    cfg.seed = 11;

    const HandSkeleton skel = make_template_hand();
    Rng rng(5);
    Tensor pixels(2, cfg.patch_dim());
    for (double& v : pixels.v) v = rng.uniform();
    const std::vector<int> kept = {0, 2};
    const Tensor encp = sdf_point_encoding({Vec3(0.1, -0.3, 0.2), Vec3(0.4, 0.4, -0.2)},
                                           cfg.fourier_bands);
    const std::vector<Vec2> uv0 = {Vec2(0.2, 0.8), Vec2(1.5, 0.1)};
    const std::vector<Vec2> uv1 = {Vec2(0.4, 1.6), Vec2(3.0, 0.2)};
    const int fine = 4 * cfg.patches();

    // Full pipeline: every head plus every loss term, one scalar objective.
    auto build = [&](Tape& t, const Bound& b) {
        const int enc = encode(t, b, cfg, pixels, kept);
        const DecodedTokens dec = decode_dual(t, b, cfg, enc, kept);
        const FeatureScales fh = feature_head(t, b, cfg, dec.y_h, "feat_h");
        const FeatureScales fo = feature_head(t, b, cfg, dec.y_o, "feat_o");
        const int sdf_h = sdf_head(t, b, cfg, fh, "sdf_h", encp, uv0, uv1);
        const int sdf_o = sdf_head(t, b, cfg, fo, "sdf_o", encp, uv0, uv1);
        std::vector<SdfSample> samples(2);
        samples[0].d_hand = 0.05;
        samples[0].d_obj = -0.02;
        samples[1].d_hand = -0.01;
        samples[1].d_obj = 0.3;
        const int l3d = sdf_loss(t, sdf_h, sdf_o, samples, 0.1);

        const int seg = seg_head(t, b, cfg, fh, fo);
        const int hm = heatmap_head(t, b, cfg, fh);
        std::array<Vec2, kHandJoints> kps;
        for (int j = 0; j < kHandJoints; ++j) kps[j] = Vec2(4.0 + j % 5, 6.0 + j % 7);
        const int l2d = seg_heatmap_loss(t, seg, std::vector<int>(fine, 1), hm,
                                         heatmap_targets(kps, cfg.image_size, 4, 4));

        const ManoOut mano = mano_head(t, b, cfg, dec.y_h);
        const int fk = fk_op(t, skel, mano.rot6, mano.beta, mano.trans);
        HandParams gt;
        gt.root_translation = Vec3(0.02, -0.01, 0.45);
        const int lh = hand_loss(t, mano, fk, skel, gt);

        const int pose = pose_head(t, b, cfg, dec.y_o);
        ObjectPose gt_pose;
        gt_pose.translation = Vec3(0.0, 0.05, 0.5);
        const int lo = object_loss(t, pose, gt_pose);

        const LossNodes nodes = total_loss(t, l2d, l3d, lh, lo, LossWeights{});
        return nodes.total;
    };

    ParamStore params = init_params(cfg);
    Tape tape;
    const Bound bound = bind_params(tape, params);
    const int out = build(tape, bound);
    tape.backward(out);

    Rng pick(17);
    const double h = 1e-6;
    for (auto& [name, tensor] : params.tensors) {
        const int checks = std::min<int>(2, static_cast<int>(tensor.size()));
        for (int k = 0; k < checks; ++k) {
            const size_t i = pick.uniform_int(tensor.size());
            auto eval = [&](double delta) {
                ParamStore p2 = params;
                p2.at(name).v[i] += delta;
                Tape t2;
                const Bound b2 = bind_params(t2, p2, false);
                return t2.val(build(t2, b2)).v[0];
            };
            const double fd = (eval(h) - eval(-h)) / (2 * h);
            const double an = tape.grad(bound.p(name)).v[i];
            c.expect(std::abs(fd - an) <= 1e-4 * std::max({1.0, std::abs(fd), std::abs(an)}),
                     "finite-difference mismatch at " + name);
        }
    }
    return c.ok;
}

// --- criterion 6: masked-content independence --------------------------------

bool independence_suite(Check& c) {
    RunConfig cfg;
    cfg.data_dir = g_root + "/data6";
    cfg.train_scenes = 2;
    cfg.test_scenes = 1;
    cfg.sdf_samples_per_scene = 32;
    cfg.queries_per_step = 8;
    run_generate_data(cfg);

    const HandSkeleton skel = make_template_hand();
    SceneRecord rec = read_record(record_path(cfg.data_dir, "train", 0));
    const ParamStore params = init_params(cfg.model);
    const MaskPlan plan = plan_for_record(cfg, rec, 0.5, 99);
    const std::vector<SdfSample> queries(rec.sdf_samples.begin(),
                                         rec.sdf_samples.begin() + 8);

    auto outputs = [&](const SceneRecord& r) {
        Tape tape;
        const Bound bound = bind_params(tape, params, false);
        const SampleForward fwd = forward_sample(tape, bound, cfg, skel, r, plan, queries);
        std::vector<double> all;
        for (int id : {fwd.seg_logits, fwd.heatmaps, fwd.pose9, fwd.mano.rot6, fwd.mano.beta,
                       fwd.mano.trans, fwd.fk_out, fwd.sdf_h, fwd.sdf_o}) {
            const Tensor& t = tape.val(id);
            all.insert(all.end(), t.v.begin(), t.v.end());
        }
        all.push_back(read_bundle(tape, fwd.losses).total);
        return all;
    };

    const std::vector<double> base = outputs(rec);
    // Scribble over every masked patch.
    SceneRecord scribbled = rec;
    Rng rng(123);
    const int patch = cfg.patch_size, cols = cfg.model.cols();
    for (int p = 0; p < cfg.model.patches(); ++p) {
        if (plan.keep[p]) continue;
        for (int y = p / cols * patch; y < (p / cols + 1) * patch; ++y)
            for (int x = p % cols * patch; x < (p % cols + 1) * patch; ++x)
                for (int ch = 0; ch < 3; ++ch)
                    scribbled.image[(y * cfg.image_size + x) * 3 + ch] =
                        static_cast<uint8_t>(rng.uniform_int(256));
    }
    c.expect(scribbled.image != rec.image, "scribble changed the image");
    c.expect(outputs(scribbled) == base, "bit-identical outputs under masked-content change");

    // Control: perturbing a KEPT patch must change something.
    SceneRecord kept_change = rec;
    for (int p = 0; p < cfg.model.patches(); ++p) {
        if (!plan.keep[p]) continue;
        const int y = p / cols * patch, x = p % cols * patch;
        kept_change.image[(y * cfg.image_size + x) * 3] ^= 0x40;
        break;
    }
    c.expect(outputs(kept_change) != base, "kept-content change propagates");
    return c.ok;
}

// --- criterion 7: desk training run ------------------------------------------

bool desk_training(Check& c) {
    const std::string data = g_root + "/desk-data";
    const std::string out = g_root + "/desk-run";
    {
        std::ofstream f(g_root + "/desk.cfg");
        f << "data_dir=" << data << "\n";
    }
    const auto t0 = std::chrono::steady_clock::now();
    c.expect(run_cli("generate-data --preset desk --config " + g_root + "/desk.cfg") == 0,
             "generate-data exit code");
    c.expect(run_cli("pretrain --preset desk --config " + g_root + "/desk.cfg --out-dir " +
                     out) == 0,
             "pretrain exit code");
    const double minutes =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
    c.expect(minutes <= 30.0, "training exceeded 30 minutes");

    const auto rows = read_csv_numbers(out + "/train_log.csv");
    c.expect(rows.size() == 2000, "2000 logged steps");
    if (rows.size() == 2000) {
        double first = 0, last = 0;
        for (int i = 0; i < 10; ++i) {
            first += rows[i].back() / 10.0;
            last += rows[rows.size() - 1 - i].back() / 10.0;
        }
        c.expect(last <= 0.5 * first,
                 "total loss reduced by >= 50% (first10=" + std::to_string(first) +
                     " last10=" + std::to_string(last) + ")");
    }

    RunConfig cfg = preset_desk();
    cfg.data_dir = data;
    const EvalSummary s = run_eval(cfg, out + "/model.ckpt", out + "/eval");
    c.expect(s.sdf_sign_acc >= 0.80,
             "SDF sign accuracy >= 0.80 (got " + std::to_string(s.sdf_sign_acc) + ")");
    c.expect(s.seg_acc >= 0.70,
             "segmentation accuracy >= 0.70 (got " + std::to_string(s.seg_acc) + ")");
    std::cout << "    [desk run] minutes=" << minutes << " sdf_acc=" << s.sdf_sign_acc
              << " seg_acc=" << s.seg_acc << " mje_mm=" << s.mje << '\n';
    return c.ok;
}

// --- criterion 8: ablation harness --------------------------------------------

bool ablation_suite(Check& c) {
    const std::string out = g_root + "/ablate";
    {
        std::ofstream f(g_root + "/ablate.cfg");
        f << "data_dir=" << g_root << "/desk-data\n";  // reuse the desk dataset
        f << "ablate.steps=60\n";
    }
    c.expect(run_cli("ablate --preset desk --config " + g_root + "/ablate.cfg --out-dir " +
                     out) == 0,
             "ablate exit code");
    const auto rows = read_csv_numbers(out + "/ablation.csv");
    c.expect(rows.size() == 5, "one row per configuration");
    for (const auto& row : rows) {
        c.expect(row.size() >= 11, "all columns populated");
        for (size_t i = 1; i < row.size(); ++i)
            c.expect(std::isfinite(row[i]), "finite metric values");
    }
    const std::string md = slurp(out + "/ablation.md");
    for (const char* name : {"global_random", "rmra", "rmra_sg_rho0.5", "rmra_sg_rho1.0",
                             "rmra_sg_ramp"})
        c.expect(md.find(name) != std::string::npos,
                 std::string("markdown table row ") + name);
    return c.ok;
}

// --- criterion 9: metric suite -------------------------------------------------

bool metric_suite(Check& c) {
    Rng rng(9);
    for (int trial = 0; trial < 1000; ++trial) {
        HandGeometry pred, gt;
        for (int j = 0; j < kHandJoints; ++j) {
            gt.joints3d[j] = 0.1 * Vec3(rng.normal(), rng.normal(), rng.normal());
            pred.joints3d[j] = rng.uniform(0.5, 2.0) * gt.joints3d[j] +
                               0.02 * Vec3(rng.normal(), rng.normal(), rng.normal());
        }
        gt.verts3d.assign(12, Vec3::Zero());
        for (auto& v : gt.verts3d) v = 0.1 * Vec3(rng.normal(), rng.normal(), rng.normal());
        pred.verts3d = gt.verts3d;
        const HandMetrics m = hand_metrics(pred, gt);
        c.expect(m.pamje <= m.stmje + 1e-9 && m.stmje <= m.mje + 1e-9,
                 "PAMJE <= STMJE <= MJE");
    }

    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Vec3> gt(4 + rng.uniform_int(20)), pred;
        for (auto& p : gt) p = Vec3(rng.normal(), rng.normal(), rng.normal());
        const Mat3 r0 = testing::random_rotation_matrix(rng);
        const double s0 = rng.uniform(0.2, 5.0);
        const Vec3 t0(rng.normal(), rng.normal(), rng.normal());
        pred.reserve(gt.size());
        for (const Vec3& p : gt) pred.push_back(s0 * (r0 * p) + t0);
        const Similarity got = procrustes_align(pred, gt);
        c.expect(std::abs(got.s - s0) < 1e-9 * s0 &&
                     (got.r - r0).cwiseAbs().maxCoeff() < 1e-9 && (got.t - t0).norm() < 1e-9,
                 "planted similarity recovery");
    }

    const TriangleMesh model = make_box({0.03, 0.02, 0.05});
    for (int trial = 0; trial < 20; ++trial) {
        ObjectPose pred, gt;
        pred.rotation = matrix_to_rot6d(testing::random_rotation_matrix(rng));
        gt.rotation = matrix_to_rot6d(testing::random_rotation_matrix(rng));
        pred.translation = Vec3(rng.normal() * 0.1, rng.normal() * 0.1, 0.5);
        gt.translation = pred.translation + 0.03 * Vec3(rng.normal(), rng.normal(), rng.normal());
        const uint64_t seed = 40 + trial;
        const int n = 128;
        const ObjectMetrics m = object_metrics(pred, gt, model, n, seed);

        Rng srng(seed);
        const auto cdf = build_area_cdf(model);
        std::vector<Vec3> pts(n);
        for (Vec3& p : pts) p = sample_surface_point(model, cdf, srng);
        const Mat3 rp = rot6d_to_matrix(pred.rotation), rg = rot6d_to_matrix(gt.rotation);
        double adds = 0;
        for (const Vec3& p : pts) {
            const Vec3 g = rg * p + gt.translation;
            double best = std::numeric_limits<double>::max();
            for (const Vec3& q : pts)
                best = std::min(best, (g - (rp * q + pred.translation)).norm());
            adds += best;
        }
        c.expect(std::abs(m.adds - adds / n * 1000.0) < 1e-9, "ADD-S brute-force scan");
    }
    return c.ok;
}

// --- criterion 10: persistence -------------------------------------------------

bool persistence_suite(Check& c) {
    // Dataset record round-trip, byte-identical.
    const HandSkeleton skel = make_template_hand();
    SceneConfig scfg;
    scfg.sdf_samples = 16;
    const SceneRecord rec = sample_scene(4242, scfg, skel);
    const std::string p1 = g_root + "/p1.bin", p2 = g_root + "/p2.bin";
    write_record(rec, p1);
    write_record(read_record(p1), p2);
    c.expect(slurp(p1) == slurp(p2) && !slurp(p1).empty(), "record round-trip bytes");

    // Checkpoint round-trip, byte-identical after one quantization.
    ModelConfig mc;
    mc.image_size = 16;
    mc.patch_size = 8;
    mc.dim = 8;
    mc.enc_depth = 1;
    mc.enc_heads = 2;
    mc.dec_dim = 8;
    mc.dec_depth = 1;
    mc.dec_heads = 2;
    mc.feat_channels = 4;
    mc.sdf_hidden = 8;
    const ParamStore store = init_params(mc);
    save_checkpoint(g_root + "/c1.ckpt", store, CheckpointDtype::f32);
    save_checkpoint(g_root + "/c2.ckpt", load_checkpoint(g_root + "/c1.ckpt"),
                    CheckpointDtype::f32);
    c.expect(slurp(g_root + "/c1.ckpt") == slurp(g_root + "/c2.ckpt"),
             "checkpoint round-trip bytes");

    // Resume reproduces the unresumed trajectory exactly, through the CLI.
    {
        std::ofstream f(g_root + "/tiny.cfg");
        f << "data_dir=" << g_root << "/data6\n"
          << "train_scenes=2\ntest_scenes=1\nsdf_samples_per_scene=32\n"
          << "model.dim=16\nmodel.enc_depth=1\nmodel.enc_heads=2\nmodel.dec_dim=16\n"
          << "model.dec_heads=2\nmodel.dec_depth=1\nmodel.feat_channels=8\n"
          << "model.sdf_hidden=16\ntrain.steps=6\ntrain.batch=2\ntrain.warmup_steps=2\n"
          << "train.queries_per_step=8\n";
        f.close();
        std::ofstream g(g_root + "/tiny3.cfg");
        g << slurp(g_root + "/tiny.cfg") << "train.steps=3\n";
    }
    const std::string base_args = " --preset desk --config ";
    c.expect(run_cli("pretrain" + base_args + g_root + "/tiny.cfg --out-dir " + g_root +
                     "/full") == 0,
             "full run exit code");
    c.expect(run_cli("pretrain" + base_args + g_root + "/tiny3.cfg --out-dir " + g_root +
                     "/half") == 0,
             "half run exit code");
    fs::create_directories(g_root + "/resumed");
    fs::copy_file(g_root + "/half/train_log.csv", g_root + "/resumed/train_log.csv",
                  fs::copy_options::overwrite_existing);
    c.expect(run_cli("pretrain" + base_args + g_root + "/tiny.cfg --out-dir " + g_root +
                     "/resumed --resume " + g_root + "/half/state.bin") == 0,
             "resumed run exit code");
    c.expect(slurp(g_root + "/resumed/model.ckpt") == slurp(g_root + "/full/model.ckpt"),
             "resumed checkpoint bytes match");
    c.expect(slurp(g_root + "/resumed/train_log.csv") == slurp(g_root + "/full/train_log.csv"),
             "resumed loss trajectory matches");

    // Dry-run flag: two steps, exit 0.
    c.expect(run_cli("pretrain" + base_args + g_root + "/tiny.cfg --out-dir " + g_root +
                     "/dry --dry-run") == 0,
             "dry-run exit code");
    c.expect(read_csv_numbers(g_root + "/dry/train_log.csv").size() == 2, "dry-run ran 2 steps");
    return c.ok;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <path-to-hoi-cli>\n";
        return 2;
    }
    g_cli = argv[1];
    g_root = (fs::temp_directory_path() / "hoi_acceptance").string();
    fs::remove_all(g_root);
    fs::create_directories(g_root);

    struct Criterion {
        int id;
        const char* name;
        double limit_seconds;
        std::function<bool(Check&)> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "geometry suite", 10, geometry_suite},
        {2, "kinematics suite", 30, kinematics_suite},
        {3, "SDF oracle suite", 120, sdf_suite},
        {4, "masking suite", 60, masking_suite},
        {5, "differentiation suite", 120, diff_suite},
        {6, "masked-content independence", 10, independence_suite},
        {7, "desk training run", 1800, desk_training},
        {8, "ablation harness", 1800, ablation_suite},
        {9, "metric suite", 60, metric_suite},
        {10, "persistence", 300, persistence_suite},
    };

    int failures = 0;
    for (const auto& cr : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Check check;
        bool ok = false;
        std::string what;
        try {
            ok = cr.run(check);
        } catch (const std::exception& e) {
            what = e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (ok && secs > cr.limit_seconds) {
            ok = false;
            check.why = "exceeded time limit of " + std::to_string(cr.limit_seconds) + "s";
        }
        if (!what.empty()) check.why = "exception: " + what;
        std::printf("[%s] criterion %2d: %s (%.1fs)%s%s\n", ok ? "PASS" : "FAIL", cr.id,
                    cr.name, secs, check.why.empty() ? "" : " -- ", check.why.c_str());
        std::fflush(stdout);
        failures += !ok;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures ? 1 : 0;
}
