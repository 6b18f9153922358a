#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hoi/geometry.hpp"

namespace hoi {

// Dense row-major 2D tensor of doubles. Every quantity in the network is a
// matrix; feature grids are stored position-major as [H*W, C].
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> v;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), v(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int r, int c) { return v[static_cast<size_t>(r) * cols + c]; }
    double at(int r, int c) const { return v[static_cast<size_t>(r) * cols + c]; }
    size_t size() const { return v.size(); }

    static Tensor from_rows(int r, int c, const std::vector<double>& values) {
        Tensor t(r, c);
        t.v = values;
        return t;
    }
};

// Define-by-run reverse-mode tape over a fixed op set: matmul, add,
// layer-norm, GELU, softmax, gather, bilinear-sample, concat, plus fused
// reductions for the losses. Node ids are indices into creation order, which
// is already a topological order for the backward sweep.
class Tape {
public:
    // Creates a leaf; only nodes reachable from a differentiable leaf carry
    // gradient work.
    int leaf(Tensor value, bool needs_grad = false);

    int matmul(int a, int b, bool trans_a = false, bool trans_b = false);
    int add(int a, int b);
    int add_bias(int a, int bias);  // bias [1, C] broadcast over rows
    int scale(int a, double s);
    int gelu(int a);
    int layer_norm(int a, int gain, int bias);  // per-row, learned affine
    int softmax_rows(int a);
    int gather_rows(int a, std::vector<int> idx);
    int concat_cols(const std::vector<int>& xs);
    int concat_rows(const std::vector<int>& xs);
    int slice_cols(int a, int c0, int len);
    int slice_rows(int a, int r0, int len);
    int reshape(int a, int r, int c);  // element order preserved
    int mean_rows(int a);              // [N, C] -> [1, C]

    // Bilinear interpolation into a position-major feature grid [H*W, C] at
    // continuous (u, v) feature coordinates; border-clamped, matching
    // hoi::bilinear_sample. Output [Q, C].
    int bilinear(int fmap, int height, int width, std::vector<Vec2> uv);

    // Fused reductions against constant targets; all return scalars ([1,1]).
    int l1_sum(int pred, Tensor target);
    int l1_mean(int pred, Tensor target);
    int mse_mean(int pred, Tensor target);
    int row_norm_mean(int pred, Tensor target);  // mean_i |row_i - target_i|_2
    int ce_mean(int logits, std::vector<int> labels);

    int weighted_sum(const std::vector<std::pair<double, int>>& terms);

    // Escape hatch for custom differentiable ops (forward kinematics). The
    // closure receives the tape and the node's own id.
    int make_node(Tensor value, std::vector<int> parents,
                  std::function<void(Tape&, int)> backward);

    void backward(int id);  // id must be scalar; seeds with 1

    const Tensor& val(int id) const { return nodes_[id].value; }
    Tensor& grad(int id) { return nodes_[id].grad; }
    bool needs_grad(int id) const { return nodes_[id].needs_grad; }
    size_t node_count() const { return nodes_.size(); }

private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::vector<int> parents;
        std::function<void(Tape&, int)> backward;
        bool needs_grad = false;
    };
    std::vector<Node> nodes_;

    void check(int id) const;
    int push(Tensor value, std::vector<int> parents, std::function<void(Tape&, int)> bw);
};

}  // namespace hoi
