#include "hoi/tensor.hpp"

#include <cmath>

#include "hoi/errors.hpp"

namespace hoi {

namespace {

using EMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Map = Eigen::Map<EMat>;
using CMap = Eigen::Map<const EMat>;

CMap cmap(const Tensor& t) { return CMap(t.v.data(), t.rows, t.cols); }
Map map(Tensor& t) { return Map(t.v.data(), t.rows, t.cols); }

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2Pi = 0.3989422804014327;

}  // namespace

void Tape::check(int id) const {
    if (id < 0 || id >= static_cast<int>(nodes_.size())) throw InvalidShape("bad node id");
}

int Tape::push(Tensor value, std::vector<int> parents,
               std::function<void(Tape&, int)> bw) {
    bool needs = false;
    for (int p : parents) {
        check(p);
        needs |= nodes_[p].needs_grad;
    }
    Node n;
    n.value = std::move(value);
    n.grad = Tensor(n.value.rows, n.value.cols);
    n.parents = std::move(parents);
    if (needs) n.backward = std::move(bw);
    n.needs_grad = needs;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::make_node(Tensor value, std::vector<int> parents,
                    std::function<void(Tape&, int)> backward) {
    return push(std::move(value), std::move(parents), std::move(backward));
}

int Tape::leaf(Tensor value, bool needs_grad) {
    Node n;
    n.value = std::move(value);
    n.grad = Tensor(n.value.rows, n.value.cols);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::backward(int id) {
    check(id);
    if (nodes_[id].value.size() != 1) throw InvalidShape("backward: seed must be scalar");
    nodes_[id].grad.v[0] = 1.0;
    for (int i = id; i >= 0; --i)
        if (nodes_[i].backward) nodes_[i].backward(*this, i);
}

int Tape::matmul(int a, int b, bool trans_a, bool trans_b) {
    check(a);
    check(b);
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    const int m = trans_a ? ta.cols : ta.rows;
    const int k = trans_a ? ta.rows : ta.cols;
    const int k2 = trans_b ? tb.cols : tb.rows;
    const int n = trans_b ? tb.rows : tb.cols;
    if (k != k2) throw InvalidShape("matmul: inner dimensions differ");

    Tensor out(m, n);
    {
        auto A = cmap(ta);
        auto B = cmap(tb);
        auto C = map(out);
        if (!trans_a && !trans_b) C.noalias() = A * B;
        else if (trans_a && !trans_b) C.noalias() = A.transpose() * B;
        else if (!trans_a && trans_b) C.noalias() = A * B.transpose();
        else C.noalias() = A.transpose() * B.transpose();
    }
    return push(std::move(out), {a, b}, [a, b, trans_a, trans_b](Tape& t, int self) {
        auto G = cmap(t.nodes_[self].grad);
        const Tensor& ta = t.nodes_[a].value;
        const Tensor& tb = t.nodes_[b].value;
        if (t.nodes_[a].needs_grad) {
            auto GA = map(t.nodes_[a].grad);
            auto B = cmap(tb);
            if (!trans_a && !trans_b) GA.noalias() += G * B.transpose();
            else if (!trans_a && trans_b) GA.noalias() += G * B;
            else if (trans_a && !trans_b) GA.noalias() += B * G.transpose();
            else GA.noalias() += B.transpose() * G.transpose();
        }
        if (t.nodes_[b].needs_grad) {
            auto GB = map(t.nodes_[b].grad);
            auto A = cmap(ta);
            if (!trans_a && !trans_b) GB.noalias() += A.transpose() * G;
            else if (trans_a && !trans_b) GB.noalias() += A * G;
            else if (!trans_a && trans_b) GB.noalias() += G.transpose() * A;
            else GB.noalias() += G.transpose() * A.transpose();
        }
    });
}

int Tape::add(int a, int b) {
    check(a);
    check(b);
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[b].value;
    if (ta.rows != tb.rows || ta.cols != tb.cols) throw InvalidShape("add: shape mismatch");
    Tensor out = ta;
    for (size_t i = 0; i < out.size(); ++i) out.v[i] += tb.v[i];
    return push(std::move(out), {a, b}, [a, b](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        for (int p : {a, b})
            if (t.nodes_[p].needs_grad)
                for (size_t i = 0; i < g.size(); ++i) t.nodes_[p].grad.v[i] += g.v[i];
    });
}

int Tape::add_bias(int a, int bias) {
    check(a);
    check(bias);
    const Tensor& ta = nodes_[a].value;
    const Tensor& tb = nodes_[bias].value;
    if (tb.rows != 1 || tb.cols != ta.cols) throw InvalidShape("add_bias: bias must be [1,C]");
    Tensor out = ta;
    for (int r = 0; r < out.rows; ++r)
        for (int c = 0; c < out.cols; ++c) out.at(r, c) += tb.v[c];
    return push(std::move(out), {a, bias}, [a, bias](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.nodes_[a].needs_grad)
            for (size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad.v[i] += g.v[i];
        if (t.nodes_[bias].needs_grad) {
            Tensor& gb = t.nodes_[bias].grad;
            for (int r = 0; r < g.rows; ++r)
                for (int c = 0; c < g.cols; ++c) gb.v[c] += g.at(r, c);
        }
    });
}

int Tape::scale(int a, double s) {
    check(a);
    Tensor out = nodes_[a].value;
    for (double& x : out.v) x *= s;
    return push(std::move(out), {a}, [a, s](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        if (t.nodes_[a].needs_grad)
            for (size_t i = 0; i < g.size(); ++i) t.nodes_[a].grad.v[i] += s * g.v[i];
    });
}

int Tape::gelu(int a) {
    check(a);
    Tensor out = nodes_[a].value;
    for (double& x : out.v) x = x * 0.5 * (1.0 + std::erf(x * M_SQRT1_2));
    return push(std::move(out), {a}, [a](Tape& t, int self) {
        if (!t.nodes_[a].needs_grad) return;
        const Tensor& g = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[a].value;
        Tensor& gx = t.nodes_[a].grad;
        for (size_t i = 0; i < g.size(); ++i) {
            const double xi = x.v[i];
            const double phi = 0.5 * (1.0 + std::erf(xi * M_SQRT1_2));
            const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
            gx.v[i] += g.v[i] * (phi + xi * pdf);
        }
    });
}

int Tape::layer_norm(int a, int gain, int bias) {
    check(a);
    check(gain);
    check(bias);
    const Tensor& x = nodes_[a].value;
    const Tensor& g = nodes_[gain].value;
    const Tensor& b = nodes_[bias].value;
    if (g.rows != 1 || g.cols != x.cols || b.rows != 1 || b.cols != x.cols)
        throw InvalidShape("layer_norm: affine params must be [1,C]");
    Tensor out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        double mu = 0.0;
        for (int c = 0; c < x.cols; ++c) mu += x.at(r, c);
        mu /= x.cols;
        double var = 0.0;
        for (int c = 0; c < x.cols; ++c) {
            const double d = x.at(r, c) - mu;
            var += d * d;
        }
        var /= x.cols;
        const double inv = 1.0 / std::sqrt(var + kLnEps);
        for (int c = 0; c < x.cols; ++c)
            out.at(r, c) = (x.at(r, c) - mu) * inv * g.v[c] + b.v[c];
    }
    return push(std::move(out), {a, gain, bias}, [a, gain, bias](Tape& t, int self) {
        const Tensor& go = t.nodes_[self].grad;
        const Tensor& x = t.nodes_[a].value;
        const Tensor& g = t.nodes_[gain].value;
        const int C = x.cols;
        for (int r = 0; r < x.rows; ++r) {
            double mu = 0.0;
            for (int c = 0; c < C; ++c) mu += x.at(r, c);
            mu /= C;
            double var = 0.0;
            for (int c = 0; c < C; ++c) {
                const double d = x.at(r, c) - mu;
                var += d * d;
            }
            var /= C;
            const double inv = 1.0 / std::sqrt(var + kLnEps);
            double sum_dxh = 0.0, sum_dxh_xh = 0.0;
            for (int c = 0; c < C; ++c) {
                const double xh = (x.at(r, c) - mu) * inv;
                const double dxh = go.at(r, c) * g.v[c];
                sum_dxh += dxh;
                sum_dxh_xh += dxh * xh;
                if (t.nodes_[gain].needs_grad) t.nodes_[gain].grad.v[c] += go.at(r, c) * xh;
                if (t.nodes_[bias].needs_grad) t.nodes_[bias].grad.v[c] += go.at(r, c);
            }
            if (t.nodes_[a].needs_grad) {
                for (int c = 0; c < C; ++c) {
                    const double xh = (x.at(r, c) - mu) * inv;
                    const double dxh = go.at(r, c) * g.v[c];
                    t.nodes_[a].grad.at(r, c) +=
                        inv * (dxh - sum_dxh / C - xh * sum_dxh_xh / C);
                }
            }
        }
    });
}

int Tape::softmax_rows(int a) {
    check(a);
    const Tensor& x = nodes_[a].value;
    Tensor out(x.rows, x.cols);
    for (int r = 0; r < x.rows; ++r) {
        double mx = x.at(r, 0);
        for (int c = 1; c < x.cols; ++c) mx = std::max(mx, x.at(r, c));
        double sum = 0.0;
        for (int c = 0; c < x.cols; ++c) {
            out.at(r, c) = std::exp(x.at(r, c) - mx);
            sum += out.at(r, c);
        }
        for (int c = 0; c < x.cols; ++c) out.at(r, c) /= sum;
    }
    return push(std::move(out), {a}, [a](Tape& t, int self) {
        if (!t.nodes_[a].needs_grad) return;
        const Tensor& y = t.nodes_[self].value;
        const Tensor& g = t.nodes_[self].grad;
        for (int r = 0; r < y.rows; ++r) {
            double dot = 0.0;
            for (int c = 0; c < y.cols; ++c) dot += y.at(r, c) * g.at(r, c);
            for (int c = 0; c < y.cols; ++c)
                t.nodes_[a].grad.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
        }
    });
}

int Tape::gather_rows(int a, std::vector<int> idx) {
    check(a);
    const Tensor& x = nodes_[a].value;
    Tensor out(static_cast<int>(idx.size()), x.cols);
    for (size_t r = 0; r < idx.size(); ++r) {
        if (idx[r] < 0 || idx[r] >= x.rows) throw InvalidShape("gather_rows: index out of range");
        for (int c = 0; c < x.cols; ++c) out.at(static_cast<int>(r), c) = x.at(idx[r], c);
    }
    return push(std::move(out), {a}, [a, idx = std::move(idx)](Tape& t, int self) {
        if (!t.nodes_[a].needs_grad) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.nodes_[a].grad;
        for (size_t r = 0; r < idx.size(); ++r)
            for (int c = 0; c < g.cols; ++c)
                gx.at(idx[r], c) += g.at(static_cast<int>(r), c);
    });
}

int Tape::concat_cols(const std::vector<int>& xs) {
    if (xs.empty()) throw InvalidShape("concat_cols: empty input");
    int cols = 0;
    const int rows = nodes_[xs[0]].value.rows;
    for (int x : xs) {
        check(x);
        if (nodes_[x].value.rows != rows) throw InvalidShape("concat_cols: row mismatch");
        cols += nodes_[x].value.cols;
    }
    Tensor out(rows, cols);
    int off = 0;
    for (int x : xs) {
        const Tensor& tx = nodes_[x].value;
        for (int r = 0; r < rows; ++r)
            for (int c = 0; c < tx.cols; ++c) out.at(r, off + c) = tx.at(r, c);
        off += tx.cols;
    }
    return push(std::move(out), xs, [xs](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        int off = 0;
        for (int x : xs) {
            Tensor& gx = t.nodes_[x].grad;
            if (t.nodes_[x].needs_grad)
                for (int r = 0; r < g.rows; ++r)
                    for (int c = 0; c < gx.cols; ++c) gx.at(r, c) += g.at(r, off + c);
            off += gx.cols;
        }
    });
}

int Tape::concat_rows(const std::vector<int>& xs) {
    if (xs.empty()) throw InvalidShape("concat_rows: empty input");
    int rows = 0;
    const int cols = nodes_[xs[0]].value.cols;
    for (int x : xs) {
        check(x);
        if (nodes_[x].value.cols != cols) throw InvalidShape("concat_rows: col mismatch");
        rows += nodes_[x].value.rows;
    }
    Tensor out(rows, cols);
    int off = 0;
    for (int x : xs) {
        const Tensor& tx = nodes_[x].value;
        std::copy(tx.v.begin(), tx.v.end(), out.v.begin() + static_cast<size_t>(off) * cols);
        off += tx.rows;
    }
    return push(std::move(out), xs, [xs](Tape& t, int self) {
        const Tensor& g = t.nodes_[self].grad;
        int off = 0;
        for (int x : xs) {
            Tensor& gx = t.nodes_[x].grad;
            if (t.nodes_[x].needs_grad)
                for (size_t i = 0; i < gx.size(); ++i)
                    gx.v[i] += g.v[static_cast<size_t>(off) * g.cols + i];
            off += gx.rows;
        }
    });
}

int Tape::slice_cols(int a, int c0, int len) {
    check(a);
    const Tensor& x = nodes_[a].value;
    if (c0 < 0 || c0 + len > x.cols) throw InvalidShape("slice_cols: range out of bounds");
    Tensor out(x.rows, len);
    for (int r = 0; r < x.rows; ++r)
        for (int c = 0; c < len; ++c) out.at(r, c) = x.at(r, c0 + c);
    return push(std::move(out), {a}, [a, c0, len](Tape& t, int self) {
        if (!t.nodes_[a].needs_grad) return;
        const Tensor& g = t.nodes_[self].grad;
        for (int r = 0; r < g.rows; ++r)
            for (int c = 0; c < len; ++c) t.nodes_[a].grad.at(r, c0 + c) += g.at(r, c);
    });
}

int Tape::slice_rows(int a, int r0, int len) {
    check(a);
    const Tensor& x = nodes_[a].value;
    if (r0 < 0 || r0 + len > x.rows) throw InvalidShape("slice_rows: range out of bounds");
    Tensor out(len, x.cols);
    std::copy_n(x.v.begin() + static_cast<size_t>(r0) * x.cols,
                static_cast<size_t>(len) * x.cols, out.v.begin());
    return push(std::move(out), {a}, [a, r0, len](Tape& t, int self) {
        if (!t.nodes_[a].needs_grad) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.nodes_[a].grad;
        for (size_t i = 0; i < g.size(); ++i)
            gx.v[static_cast<size_t>(r0) * gx.cols + i] += g.v[i];
    });
}

int Tape::reshape(int a, int r, int c) {
    check(a);
    const Tensor& x = nodes_[a].value;
    if (static_cast<size_t>(r) * c != x.size()) throw InvalidShape("reshape: size mismatch");
    Tensor out(r, c);
    out.v = x.v;
    return push(std::move(out), {a}, [a](Tape& t, int self) {
        if (!t.nodes_[a].needs_grad) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.nodes_[a].grad;
        for (size_t i = 0; i < g.size(); ++i) gx.v[i] += g.v[i];
    });
}

int Tape::mean_rows(int a) {
    check(a);
    const Tensor& x = nodes_[a].value;
    Tensor out(1, x.cols);
    for (int r = 0; r < x.rows; ++r)
        for (int c = 0; c < x.cols; ++c) out.v[c] += x.at(r, c);
    for (double& v : out.v) v /= x.rows;
    return push(std::move(out), {a}, [a](Tape& t, int self) {
        if (!t.nodes_[a].needs_grad) return;
        const Tensor& g = t.nodes_[self].grad;
        Tensor& gx = t.nodes_[a].grad;
        const double inv = 1.0 / gx.rows;
        for (int r = 0; r < gx.rows; ++r)
            for (int c = 0; c < gx.cols; ++c) gx.at(r, c) += g.v[c] * inv;
    });
}

namespace {

struct BilinearTap {
    int cell[4];
    double w[4];
};

BilinearTap bilinear_tap(double u, double v, int width, int height) {
    const double uc = std::clamp(u, 0.0, static_cast<double>(width - 1));
    const double vc = std::clamp(v, 0.0, static_cast<double>(height - 1));
    const int x0 = std::min(static_cast<int>(std::floor(uc)), width - 1);
    const int y0 = std::min(static_cast<int>(std::floor(vc)), height - 1);
    const int x1 = std::min(x0 + 1, width - 1);
    const int y1 = std::min(y0 + 1, height - 1);
    const double fx = uc - x0, fy = vc - y0;
    BilinearTap t;
    t.cell[0] = y0 * width + x0;
    t.cell[1] = y0 * width + x1;
    t.cell[2] = y1 * width + x0;
    t.cell[3] = y1 * width + x1;
    t.w[0] = (1 - fx) * (1 - fy);
    t.w[1] = fx * (1 - fy);
    t.w[2] = (1 - fx) * fy;
    t.w[3] = fx * fy;
    return t;
}

}  // namespace

int Tape::bilinear(int fmap, int height, int width, std::vector<Vec2> uv) {
    check(fmap);
    const Tensor& f = nodes_[fmap].value;
    if (f.rows != height * width || height <= 0 || width <= 0)
        throw InvalidGrid("bilinear: feature grid shape mismatch");
    Tensor out(static_cast<int>(uv.size()), f.cols);
    for (size_t q = 0; q < uv.size(); ++q) {
        const BilinearTap tap = bilinear_tap(uv[q].x(), uv[q].y(), width, height);
        for (int c = 0; c < f.cols; ++c) {
            double acc = 0.0;
            for (int k = 0; k < 4; ++k) acc += tap.w[k] * f.at(tap.cell[k], c);
            out.at(static_cast<int>(q), c) = acc;
        }
    }
    return push(std::move(out), {fmap},
                [fmap, height, width, uv = std::move(uv)](Tape& t, int self) {
                    if (!t.nodes_[fmap].needs_grad) return;
                    const Tensor& g = t.nodes_[self].grad;
                    Tensor& gf = t.nodes_[fmap].grad;
                    for (size_t q = 0; q < uv.size(); ++q) {
                        const BilinearTap tap = bilinear_tap(uv[q].x(), uv[q].y(), width, height);
                        for (int c = 0; c < g.cols; ++c)
                            for (int k = 0; k < 4; ++k)
                                gf.at(tap.cell[k], c) += tap.w[k] * g.at(static_cast<int>(q), c);
                    }
                });
}

int Tape::l1_sum(int pred, Tensor target) {
    check(pred);
    const Tensor& x = nodes_[pred].value;
    if (x.rows != target.rows || x.cols != target.cols) throw InvalidShape("l1_sum: shapes");
    Tensor out(1, 1);
    for (size_t i = 0; i < x.size(); ++i) out.v[0] += std::abs(x.v[i] - target.v[i]);
    return push(std::move(out), {pred}, [pred, target = std::move(target)](Tape& t, int self) {
        if (!t.nodes_[pred].needs_grad) return;
        const double g = t.nodes_[self].grad.v[0];
        const Tensor& x = t.nodes_[pred].value;
        for (size_t i = 0; i < x.size(); ++i) {
            const double d = x.v[i] - target.v[i];
            t.nodes_[pred].grad.v[i] += g * (d > 0 ? 1.0 : (d < 0 ? -1.0 : 0.0));
        }
    });
}

int Tape::l1_mean(int pred, Tensor target) {
    const int n = static_cast<int>(nodes_[pred].value.size());
    return scale(l1_sum(pred, std::move(target)), 1.0 / n);
}

int Tape::mse_mean(int pred, Tensor target) {
    check(pred);
    const Tensor& x = nodes_[pred].value;
    if (x.rows != target.rows || x.cols != target.cols) throw InvalidShape("mse_mean: shapes");
    Tensor out(1, 1);
    for (size_t i = 0; i < x.size(); ++i) {
        const double d = x.v[i] - target.v[i];
        out.v[0] += d * d;
    }
    out.v[0] /= static_cast<double>(x.size());
    return push(std::move(out), {pred}, [pred, target = std::move(target)](Tape& t, int self) {
        if (!t.nodes_[pred].needs_grad) return;
        const double g = t.nodes_[self].grad.v[0];
        const Tensor& x = t.nodes_[pred].value;
        const double inv = 2.0 / static_cast<double>(x.size());
        for (size_t i = 0; i < x.size(); ++i)
            t.nodes_[pred].grad.v[i] += g * inv * (x.v[i] - target.v[i]);
    });
}

int Tape::row_norm_mean(int pred, Tensor target) {
    check(pred);
    const Tensor& x = nodes_[pred].value;
    if (x.rows != target.rows || x.cols != target.cols)
        throw InvalidShape("row_norm_mean: shapes");
    Tensor out(1, 1);
    for (int r = 0; r < x.rows; ++r) {
        double ss = 0.0;
        for (int c = 0; c < x.cols; ++c) {
            const double d = x.at(r, c) - target.at(r, c);
            ss += d * d;
        }
        out.v[0] += std::sqrt(ss);
    }
    out.v[0] /= x.rows;
    return push(std::move(out), {pred}, [pred, target = std::move(target)](Tape& t, int self) {
        if (!t.nodes_[pred].needs_grad) return;
        const double g = t.nodes_[self].grad.v[0];
        const Tensor& x = t.nodes_[pred].value;
        for (int r = 0; r < x.rows; ++r) {
            double ss = 0.0;
            for (int c = 0; c < x.cols; ++c) {
                const double d = x.at(r, c) - target.at(r, c);
                ss += d * d;
            }
            const double norm = std::sqrt(ss);
            if (norm < 1e-12) continue;  // subgradient 0 at the cusp
            for (int c = 0; c < x.cols; ++c)
                t.nodes_[pred].grad.at(r, c) +=
                    g * (x.at(r, c) - target.at(r, c)) / (norm * x.rows);
        }
    });
}

int Tape::ce_mean(int logits, std::vector<int> labels) {
    check(logits);
    const Tensor& x = nodes_[logits].value;
    if (static_cast<int>(labels.size()) != x.rows) throw InvalidShape("ce_mean: label count");
    Tensor out(1, 1);
    for (int r = 0; r < x.rows; ++r) {
        double mx = x.at(r, 0);
        for (int c = 1; c < x.cols; ++c) mx = std::max(mx, x.at(r, c));
        double lse = 0.0;
        for (int c = 0; c < x.cols; ++c) lse += std::exp(x.at(r, c) - mx);
        out.v[0] += mx + std::log(lse) - x.at(r, labels[r]);
    }
    out.v[0] /= x.rows;
    return push(std::move(out), {logits}, [logits, labels = std::move(labels)](Tape& t, int self) {
        if (!t.nodes_[logits].needs_grad) return;
        const double g = t.nodes_[self].grad.v[0];
        const Tensor& x = t.nodes_[logits].value;
        for (int r = 0; r < x.rows; ++r) {
            double mx = x.at(r, 0);
            for (int c = 1; c < x.cols; ++c) mx = std::max(mx, x.at(r, c));
            double lse = 0.0;
            for (int c = 0; c < x.cols; ++c) lse += std::exp(x.at(r, c) - mx);
            for (int c = 0; c < x.cols; ++c) {
                const double p = std::exp(x.at(r, c) - mx) / lse;
                t.nodes_[logits].grad.at(r, c) +=
                    g * (p - (c == labels[r] ? 1.0 : 0.0)) / x.rows;
            }
        }
    });
}

int Tape::weighted_sum(const std::vector<std::pair<double, int>>& terms) {
    Tensor out(1, 1);
    std::vector<int> parents;
    for (const auto& [w, id] : terms) {
        check(id);
        if (nodes_[id].value.size() != 1) throw InvalidShape("weighted_sum: non-scalar term");
        out.v[0] += w * nodes_[id].value.v[0];
        parents.push_back(id);
    }
    return push(std::move(out), std::move(parents), [terms](Tape& t, int self) {
        const double g = t.nodes_[self].grad.v[0];
        for (const auto& [w, id] : terms)
            if (t.nodes_[id].needs_grad) t.nodes_[id].grad.v[0] += w * g;
    });
}

}  // namespace hoi
