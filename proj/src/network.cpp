#include "hoi/network.hpp"

#include <cmath>

#include "hoi/errors.hpp"
#include "hoi/rng.hpp"

namespace hoi {

void ModelConfig::validate() const {
    if (image_size <= 0 || patch_size <= 0 || image_size % patch_size != 0)
        throw InvalidConfig("model: image_size must be divisible by patch_size");
    if (dim % enc_heads != 0 || dec_dim % dec_heads != 0)
        throw InvalidConfig("model: width must be divisible by head count");
    if (dim % 4 != 0 || dec_dim % 4 != 0)
        throw InvalidConfig("model: width must be divisible by 4 for sincos tables");
    if (enc_depth <= 0 || dec_depth <= 0 || feat_channels <= 0 || sdf_hidden <= 0 ||
        fourier_bands <= 0)
        throw InvalidConfig("model: sizes must be positive");
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw InvalidShape("unknown parameter: " + name);
    return it->second;
}

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = tensors.find(name);
    if (it == tensors.end()) throw InvalidShape("unknown parameter: " + name);
    return it->second;
}

int Bound::p(const std::string& name) const {
    auto it = id.find(name);
    if (it == id.end()) throw InvalidShape("unbound parameter: " + name);
    return it->second;
}

Bound bind_params(Tape& tape, const ParamStore& store, bool needs_grad) {
    Bound b;
    for (const auto& [name, tensor] : store.tensors)
        b.id[name] = tape.leaf(tensor, needs_grad);
    return b;
}

Tensor sincos_pos_embed(int rows, int cols, int dim) {
    // Half the channels encode the row index, half the column index.
    const int half = dim / 2;
    const int quarter = half / 2;
    Tensor out(rows * cols, dim);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            double* p = &out.at(r * cols + c, 0);
            for (int i = 0; i < quarter; ++i) {
                const double omega = std::pow(10000.0, -static_cast<double>(i) / quarter);
                p[2 * i] = std::sin(r * omega);
                p[2 * i + 1] = std::cos(r * omega);
                p[half + 2 * i] = std::sin(c * omega);
                p[half + 2 * i + 1] = std::cos(c * omega);
            }
        }
    }
    return out;
}

namespace {

constexpr int kManoQueries = kHandRotations + 1;  // 16 rotation queries + 1 shape

void add_matrix(ParamStore& s, Rng& rng, const std::string& name, int fan_in, int fan_out) {
    Tensor t(fan_in, fan_out);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& v : t.v) v = rng.uniform(-limit, limit);
    s.tensors[name] = std::move(t);
}

void add_bias_param(ParamStore& s, const std::string& name, int n, double value = 0.0) {
    Tensor t(1, n);
    for (double& v : t.v) v = value;
    s.tensors[name] = std::move(t);
}

void add_small(ParamStore& s, Rng& rng, const std::string& name, int rows, int cols) {
    Tensor t(rows, cols);
    for (double& v : t.v) v = rng.uniform(-0.02, 0.02);
    s.tensors[name] = std::move(t);
}

void add_linear(ParamStore& s, Rng& rng, const std::string& prefix, int in, int out) {
    add_matrix(s, rng, prefix + ".w", in, out);
    add_bias_param(s, prefix + ".b", out);
}

void add_ln(ParamStore& s, const std::string& prefix, int dim) {
    add_bias_param(s, prefix + ".g", dim, 1.0);
    add_bias_param(s, prefix + ".b", dim, 0.0);
}

void add_block(ParamStore& s, Rng& rng, const std::string& prefix, int dim, int mlp_ratio) {
    add_ln(s, prefix + ".ln1", dim);
    add_linear(s, rng, prefix + ".q", dim, dim);
    add_linear(s, rng, prefix + ".k", dim, dim);
    add_linear(s, rng, prefix + ".v", dim, dim);
    add_linear(s, rng, prefix + ".o", dim, dim);
    add_ln(s, prefix + ".ln2", dim);
    add_linear(s, rng, prefix + ".mlp1", dim, dim * mlp_ratio);
    add_linear(s, rng, prefix + ".mlp2", dim * mlp_ratio, dim);
}

const double kIdentity6D[6] = {1, 0, 0, 0, 1, 0};
constexpr double kInitDepth = 0.45;

}  // namespace

ParamStore init_params(const ModelConfig& cfg) {
    cfg.validate();
    ParamStore s;
    Rng rng(mix_seed(cfg.seed, 0x9a7));

    add_linear(s, rng, "embed", cfg.patch_dim(), cfg.dim);
    for (int i = 0; i < cfg.enc_depth; ++i)
        add_block(s, rng, "enc.b" + std::to_string(i), cfg.dim, cfg.mlp_ratio);
    add_ln(s, "enc.ln", cfg.dim);

    for (const std::string dec : {"dec_h", "dec_o"}) {
        add_linear(s, rng, dec + ".proj", cfg.dim, cfg.dec_dim);
        add_small(s, rng, dec + ".mask", 1, cfg.dec_dim);
        for (int i = 0; i < cfg.dec_depth; ++i)
            add_block(s, rng, dec + ".b" + std::to_string(i), cfg.dec_dim, cfg.mlp_ratio);
        add_ln(s, dec + ".ln", cfg.dec_dim);
    }

    const int hidden = 2 * cfg.feat_channels;
    for (const std::string feat : {"feat_h", "feat_o"}) {
        add_linear(s, rng, feat + ".pre", cfg.dec_dim, hidden);
        add_linear(s, rng, feat + ".s0", hidden, cfg.feat_channels);
        add_linear(s, rng, feat + ".up", hidden, 4 * cfg.feat_channels);
    }

    for (const std::string sdf : {"sdf_h", "sdf_o"}) {
        add_linear(s, rng, sdf + ".l1", cfg.sdf_input_dim(), cfg.sdf_hidden);
        add_linear(s, rng, sdf + ".l2", cfg.sdf_hidden, cfg.sdf_hidden);
        add_linear(s, rng, sdf + ".l3", cfg.sdf_hidden, 1);
    }

    add_linear(s, rng, "seg", 2 * cfg.feat_channels, 3);
    add_linear(s, rng, "hm", cfg.feat_channels, kHandJoints);

    add_linear(s, rng, "pose.l1", cfg.dec_dim, cfg.sdf_hidden);
    add_linear(s, rng, "pose.l2", cfg.sdf_hidden, 9);
    {
        Tensor& b = s.at("pose.l2.b");
        for (int i = 0; i < 6; ++i) b.v[i] = kIdentity6D[i];
        b.v[8] = kInitDepth;
    }

    add_small(s, rng, "mano.queries", kManoQueries, cfg.dec_dim);
    add_block(s, rng, "mano.x", cfg.dec_dim, cfg.mlp_ratio);
    add_linear(s, rng, "mano.rot", cfg.dec_dim, 6);
    {
        Tensor& b = s.at("mano.rot.b");
        for (int i = 0; i < 6; ++i) b.v[i] = kIdentity6D[i];
    }
    add_linear(s, rng, "mano.shape", cfg.dec_dim, kHandShapeDim + 3);
    s.at("mano.shape.b").v[kHandShapeDim + 2] = kInitDepth;

    return s;
}

namespace {

int linear(Tape& t, const Bound& b, int x, const std::string& prefix) {
    return t.add_bias(t.matmul(x, b.p(prefix + ".w")), b.p(prefix + ".b"));
}

// Multi-head scaled dot-product attention; x_q [Nq,D] attends to x_kv [Nk,D].
int attention(Tape& t, const Bound& b, int x_q, int x_kv, const std::string& prefix,
              int heads) {
    const int dim = t.val(x_q).cols;
    const int dh = dim / heads;
    const int q = linear(t, b, x_q, prefix + ".q");
    const int k = linear(t, b, x_kv, prefix + ".k");
    const int v = linear(t, b, x_kv, prefix + ".v");
    std::vector<int> outs;
    outs.reserve(heads);
    for (int h = 0; h < heads; ++h) {
        const int qh = t.slice_cols(q, h * dh, dh);
        const int kh = t.slice_cols(k, h * dh, dh);
        const int vh = t.slice_cols(v, h * dh, dh);
        const int scores = t.scale(t.matmul(qh, kh, false, true), 1.0 / std::sqrt(dh));
        outs.push_back(t.matmul(t.softmax_rows(scores), vh));
    }
    return linear(t, b, t.concat_cols(outs), prefix + ".o");
}

int mlp(Tape& t, const Bound& b, int x, const std::string& prefix) {
    return linear(t, b, t.gelu(linear(t, b, x, prefix + ".mlp1")), prefix + ".mlp2");
}

// Pre-LN transformer block with self-attention.
int block(Tape& t, const Bound& b, int x, const std::string& prefix, int heads) {
    const int n1 = t.layer_norm(x, b.p(prefix + ".ln1.g"), b.p(prefix + ".ln1.b"));
    x = t.add(x, attention(t, b, n1, n1, prefix, heads));
    const int n2 = t.layer_norm(x, b.p(prefix + ".ln2.g"), b.p(prefix + ".ln2.b"));
    return t.add(x, mlp(t, b, n2, prefix));
}

}  // namespace

int encode(Tape& tape, const Bound& b, const ModelConfig& cfg, const Tensor& kept_pixels,
           const std::vector<int>& kept_indices) {
    if (kept_pixels.cols != cfg.patch_dim() ||
        kept_pixels.rows != static_cast<int>(kept_indices.size()))
        throw InvalidShape("encode: kept pixel block shape mismatch");
    const int x = tape.leaf(kept_pixels);
    int tokens = linear(tape, b, x, "embed");
    const int pos = tape.leaf(sincos_pos_embed(cfg.rows(), cfg.cols(), cfg.dim));
    tokens = tape.add(tokens, tape.gather_rows(pos, kept_indices));
    for (int i = 0; i < cfg.enc_depth; ++i)
        tokens = block(tape, b, tokens, "enc.b" + std::to_string(i), cfg.enc_heads);
    return tape.layer_norm(tokens, b.p("enc.ln.g"), b.p("enc.ln.b"));
}

namespace {

int decode_one(Tape& tape, const Bound& b, const ModelConfig& cfg, int encoded,
               const std::vector<int>& kept_indices, const std::string& prefix) {
    const int n = cfg.patches();
    const int n_kept = static_cast<int>(kept_indices.size());
    int tokens = linear(tape, b, encoded, prefix + ".proj");

    // Restore full length: kept tokens keep their content, masked positions
    // receive the learned mask token; order re-established by a gather.
    std::vector<uint8_t> is_kept(n, 0);
    for (int i : kept_indices) is_kept[i] = 1;
    std::vector<int> perm(n);
    {
        std::vector<int> rank(n, -1);
        for (int r = 0; r < n_kept; ++r) rank[kept_indices[r]] = r;
        int masked_rank = 0;
        for (int i = 0; i < n; ++i)
            perm[i] = is_kept[i] ? rank[i] : n_kept + masked_rank++;
    }
    const int n_masked = n - n_kept;
    int full;
    if (n_masked > 0) {
        const int masks =
            tape.gather_rows(b.p(prefix + ".mask"), std::vector<int>(n_masked, 0));
        full = tape.gather_rows(tape.concat_rows({tokens, masks}), perm);
    } else {
        full = tape.gather_rows(tokens, perm);
    }

    const int pos = tape.leaf(sincos_pos_embed(cfg.rows(), cfg.cols(), cfg.dec_dim));
    full = tape.add(full, pos);
    for (int i = 0; i < cfg.dec_depth; ++i)
        full = block(tape, b, full, prefix + ".b" + std::to_string(i), cfg.dec_heads);
    return tape.layer_norm(full, b.p(prefix + ".ln.g"), b.p(prefix + ".ln.b"));
}

}  // namespace

DecodedTokens decode_dual(Tape& tape, const Bound& b, const ModelConfig& cfg, int encoded,
                          const std::vector<int>& kept_indices) {
    DecodedTokens out;
    out.y_h = decode_one(tape, b, cfg, encoded, kept_indices, "dec_h");
    out.y_o = decode_one(tape, b, cfg, encoded, kept_indices, "dec_o");
    return out;
}

FeatureScales feature_head(Tape& tape, const Bound& b, const ModelConfig& cfg, int decoded,
                           const std::string& prefix) {
    const int c = cfg.feat_channels;
    const int h = tape.gelu(linear(tape, b, decoded, prefix + ".pre"));
    FeatureScales f;
    f.s0 = linear(tape, b, h, prefix + ".s0");  // [N, C], token order == grid order

    // Learned 2x upsampling: each token emits a 2x2 block of C-vectors
    // (quadrant-major), rearranged into the fine grid by a gather.
    const int up = linear(tape, b, h, prefix + ".up");  // [N, 4C]
    const int expanded = tape.reshape(up, 4 * cfg.patches(), c);
    const int fine_cols = 2 * cfg.cols();
    std::vector<int> perm(4 * cfg.patches());
    for (int fy = 0; fy < 2 * cfg.rows(); ++fy) {
        for (int fx = 0; fx < fine_cols; ++fx) {
            const int src = (fy / 2 * cfg.cols() + fx / 2) * 4 + (fy % 2) * 2 + fx % 2;
            perm[fy * fine_cols + fx] = src;
        }
    }
    f.s1 = tape.gather_rows(expanded, perm);
    return f;
}

Tensor sdf_point_encoding(const std::vector<Vec3>& normalized_points, int bands) {
    Tensor out(static_cast<int>(normalized_points.size()), 6 * bands + 3);
    for (size_t q = 0; q < normalized_points.size(); ++q) {
        const std::vector<double> enc = fourier_encode(normalized_points[q], bands);
        double* row = &out.at(static_cast<int>(q), 0);
        std::copy(enc.begin(), enc.end(), row);
        row[6 * bands + 0] = normalized_points[q].x();
        row[6 * bands + 1] = normalized_points[q].y();
        row[6 * bands + 2] = normalized_points[q].z();
    }
    return out;
}

std::vector<Vec2> to_feature_coords(const std::vector<Vec2>& image_uv, int image_size,
                                    int grid_w) {
    const double scale = static_cast<double>(grid_w) / image_size;
    std::vector<Vec2> out(image_uv.size());
    for (size_t i = 0; i < image_uv.size(); ++i)
        out[i] = Vec2((image_uv[i].x() + 0.5) * scale - 0.5,
                      (image_uv[i].y() + 0.5) * scale - 0.5);
    return out;
}

int sdf_head(Tape& tape, const Bound& b, const ModelConfig& cfg, const FeatureScales& f,
             const std::string& prefix, const Tensor& point_encodings,
             const std::vector<Vec2>& uv_scale0, const std::vector<Vec2>& uv_scale1) {
    const int s0 = tape.bilinear(f.s0, cfg.rows(), cfg.cols(), uv_scale0);
    const int s1 = tape.bilinear(f.s1, 2 * cfg.rows(), 2 * cfg.cols(), uv_scale1);
    const int enc = tape.leaf(point_encodings);
    int x = tape.concat_cols({enc, s0, s1});
    x = tape.gelu(linear(tape, b, x, prefix + ".l1"));
    x = tape.gelu(linear(tape, b, x, prefix + ".l2"));
    return linear(tape, b, x, prefix + ".l3");
}

int seg_head(Tape& tape, const Bound& b, const ModelConfig& cfg, const FeatureScales& f_h,
             const FeatureScales& f_o) {
    (void)cfg;
    return linear(tape, b, tape.concat_cols({f_h.s1, f_o.s1}), "seg");
}

int heatmap_head(Tape& tape, const Bound& b, const ModelConfig& cfg,
                 const FeatureScales& f_h) {
    (void)cfg;
    return linear(tape, b, f_h.s1, "hm");
}

int pose_head(Tape& tape, const Bound& b, const ModelConfig& cfg, int y_o) {
    (void)cfg;
    const int pooled = tape.mean_rows(y_o);
    return linear(tape, b, tape.gelu(linear(tape, b, pooled, "pose.l1")), "pose.l2");
}

ManoOut mano_head(Tape& tape, const Bound& b, const ModelConfig& cfg, int y_h) {
    // Learned query tokens cross-attend to the decoded hand tokens, then a
    // per-query readout emits the parameters.
    int q = b.p("mano.queries");
    const int n1 = tape.layer_norm(q, b.p("mano.x.ln1.g"), b.p("mano.x.ln1.b"));
    q = tape.add(q, attention(tape, b, n1, y_h, "mano.x", cfg.dec_heads));
    const int n2 = tape.layer_norm(q, b.p("mano.x.ln2.g"), b.p("mano.x.ln2.b"));
    q = tape.add(q, mlp(tape, b, n2, "mano.x"));

    ManoOut out;
    out.rot6 = linear(tape, b, tape.slice_rows(q, 0, kHandRotations), "mano.rot");
    const int shape = linear(tape, b, tape.slice_rows(q, kHandRotations, 1), "mano.shape");
    out.beta = tape.slice_cols(shape, 0, kHandShapeDim);
    out.trans = tape.slice_cols(shape, kHandShapeDim, 3);
    return out;
}

HandParams hand_params_from_tensors(const Tensor& rot6, const Tensor& beta,
                                    const Tensor& trans) {
    if (rot6.rows != kHandRotations || rot6.cols != 6 || beta.size() != kHandShapeDim ||
        trans.size() != 3)
        throw InvalidShape("hand_params_from_tensors: bad shapes");
    HandParams p;
    for (int i = 0; i < kHandRotations; ++i) {
        p.rotations[i].a = Vec3(rot6.at(i, 0), rot6.at(i, 1), rot6.at(i, 2));
        p.rotations[i].b = Vec3(rot6.at(i, 3), rot6.at(i, 4), rot6.at(i, 5));
    }
    for (int i = 0; i < kHandShapeDim; ++i) p.beta[i] = beta.v[i];
    p.root_translation = Vec3(trans.v[0], trans.v[1], trans.v[2]);
    return p;
}

int fk_op(Tape& tape, const HandSkeleton& skel, int rot6, int beta, int trans) {
    const HandParams params =
        hand_params_from_tensors(tape.val(rot6), tape.val(beta), tape.val(trans));
    const HandGeometry geom = forward_kinematics(skel, params);
    const int n_verts = static_cast<int>(geom.verts3d.size());

    Tensor out(kHandJoints + n_verts, 3);
    for (int j = 0; j < kHandJoints; ++j)
        for (int c = 0; c < 3; ++c) out.at(j, c) = geom.joints3d[j][c];
    for (int v = 0; v < n_verts; ++v)
        for (int c = 0; c < 3; ++c) out.at(kHandJoints + v, c) = geom.verts3d[v][c];

    return tape.make_node(
        std::move(out), {rot6, beta, trans},
        [&skel, rot6, beta, trans, n_verts](Tape& t, int self) {
            const Tensor& g = t.grad(self);
            std::array<Vec3, kHandJoints> d_joints;
            for (int j = 0; j < kHandJoints; ++j)
                d_joints[j] = Vec3(g.at(j, 0), g.at(j, 1), g.at(j, 2));
            std::vector<Vec3> d_verts(n_verts);
            for (int v = 0; v < n_verts; ++v)
                d_verts[v] = Vec3(g.at(kHandJoints + v, 0), g.at(kHandJoints + v, 1),
                                  g.at(kHandJoints + v, 2));

            const HandParams params =
                hand_params_from_tensors(t.val(rot6), t.val(beta), t.val(trans));
            const HandParamsGrad pg = fk_gradients(skel, params, d_joints, d_verts);

            if (t.needs_grad(rot6)) {
                Tensor& gr = t.grad(rot6);
                for (int i = 0; i < kHandRotations; ++i)
                    for (int c = 0; c < 6; ++c) gr.at(i, c) += pg.rotations[i][c];
            }
            if (t.needs_grad(beta)) {
                Tensor& gb = t.grad(beta);
                for (int i = 0; i < kHandShapeDim; ++i) gb.v[i] += pg.beta[i];
            }
            if (t.needs_grad(trans)) {
                Tensor& gt = t.grad(trans);
                for (int c = 0; c < 3; ++c) gt.v[c] += pg.root_translation[c];
            }
        });
}

}  // namespace hoi
