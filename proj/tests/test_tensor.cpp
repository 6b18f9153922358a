#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <functional>

#include "hoi/rng.hpp"
#include "hoi/tensor.hpp"
#include "test_oracles.hpp"

using namespace hoi;

namespace {

Tensor random_tensor(Rng& rng, int r, int c, double scale = 1.0) {
    Tensor t(r, c);
    for (double& v : t.v) v = scale * rng.normal();
    return t;
}

// Central finite differences of a scalar-valued graph builder against the
// reverse-mode gradient, on every entry of every input tensor.
void check_gradients(std::vector<Tensor> inputs,
                     const std::function<int(Tape&, const std::vector<int>&)>& build,
                     double h = 1e-6, double tol = 1e-4) {
    Tape tape;
    std::vector<int> ids;
    for (const Tensor& t : inputs) ids.push_back(tape.leaf(t, true));
    const int out = build(tape, ids);
    REQUIRE(tape.val(out).size() == 1);
    tape.backward(out);

    for (size_t which = 0; which < inputs.size(); ++which) {
        for (size_t i = 0; i < inputs[which].size(); ++i) {
            auto eval = [&](double delta) {
                std::vector<Tensor> perturbed = inputs;
                perturbed[which].v[i] += delta;
                Tape t2;
                std::vector<int> ids2;
                for (const Tensor& t : perturbed) ids2.push_back(t2.leaf(t, false));
                return t2.val(build(t2, ids2)).v[0];
            };
            const double fd = (eval(h) - eval(-h)) / (2 * h);
            const double an = tape.grad(ids[which]).v[i];
            CHECK(std::abs(fd - an) <= tol * std::max({1.0, std::abs(fd), std::abs(an)}));
        }
    }
}

}  // namespace

TEST_CASE("matmul forward matches Eigen in all transpose modes") {
    Rng rng(1);
    const Tensor a = random_tensor(rng, 3, 4);
    const Tensor b = random_tensor(rng, 4, 5);
    Tape tape;
    const int ia = tape.leaf(a), ib = tape.leaf(b);
    const Tensor& c = tape.val(tape.matmul(ia, ib));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 5; ++j) {
            double acc = 0;
            for (int k = 0; k < 4; ++k) acc += a.at(i, k) * b.at(k, j);
            CHECK(c.at(i, j) == doctest::Approx(acc).epsilon(1e-14));
        }
    CHECK_THROWS_AS(tape.matmul(ia, ia), InvalidShape);
    // a^T a is legal
    CHECK(tape.val(tape.matmul(ia, ia, true, false)).rows == 4);
}

TEST_CASE("gradients: matmul chains with transposes") {
    Rng rng(2);
    check_gradients({random_tensor(rng, 3, 4), random_tensor(rng, 4, 2),
                     random_tensor(rng, 3, 2)},
                    [](Tape& t, const std::vector<int>& in) {
                        const int prod = t.matmul(in[0], in[1]);               // [3,2]
                        const int tt = t.matmul(prod, in[2], true, false);     // [2,2]
                        const int back = t.matmul(tt, in[1], false, true);     // [2,4]
                        return t.mse_mean(back, Tensor(2, 4));
                    });
}

TEST_CASE("gradients: add, bias, scale, slice, concat, gather, reshape") {
    Rng rng(3);
    check_gradients(
        {random_tensor(rng, 4, 6), random_tensor(rng, 4, 6), random_tensor(rng, 1, 3)},
        [](Tape& t, const std::vector<int>& in) {
            const int sum = t.add(in[0], t.scale(in[1], -1.7));
            const int left = t.slice_cols(sum, 0, 3);
            const int right = t.slice_cols(sum, 3, 3);
            const int biased = t.add_bias(left, in[2]);
            const int cat = t.concat_cols({biased, right});          // [4, 6]
            const int rows = t.concat_rows({cat, t.scale(cat, 2.0)});  // [8, 6]
            const int picked = t.gather_rows(rows, {0, 3, 3, 7, 1});   // repeats
            const int flat = t.reshape(picked, 5 * 6, 1);
            return t.l1_mean(flat, Tensor(30, 1));
        });
}

TEST_CASE("gradients: gelu, layer_norm, softmax") {
    Rng rng(4);
    check_gradients(
        {random_tensor(rng, 5, 8), random_tensor(rng, 1, 8), random_tensor(rng, 1, 8)},
        [](Tape& t, const std::vector<int>& in) {
            const int act = t.gelu(in[0]);
            const int ln = t.layer_norm(act, in[1], in[2]);
            const int sm = t.softmax_rows(ln);
            Tensor target(5, 8);
            target.v.assign(40, 0.1);
            return t.mse_mean(sm, std::move(target));
        },
        1e-6, 2e-4);
}

TEST_CASE("softmax rows sum to one") {
    Rng rng(5);
    Tape tape;
    const int x = tape.leaf(random_tensor(rng, 7, 9, 3.0));
    const Tensor& y = tape.val(tape.softmax_rows(x));
    for (int r = 0; r < 7; ++r) {
        double sum = 0;
        for (int c = 0; c < 9; ++c) {
            sum += y.at(r, c);
            CHECK(y.at(r, c) >= 0.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("gradients: bilinear sampling into a feature grid") {
    Rng rng(6);
    std::vector<Vec2> uv = {{0.5, 0.5}, {-2.0, 1.2}, {3.9, 0.1}, {1.25, 2.75}, {5.0, 9.0}};
    check_gradients({random_tensor(rng, 12, 3)},  // 3x4 grid, 3 channels
                    [uv](Tape& t, const std::vector<int>& in) {
                        const int s = t.bilinear(in[0], 3, 4, uv);
                        return t.mse_mean(s, Tensor(5, 3));
                    });
}

TEST_CASE("bilinear op agrees with the geometry-module sampler") {
    Rng rng(7);
    const int h = 4, w = 5, c = 3;
    const Tensor f = random_tensor(rng, h * w, c);
    FeatureMap grid;
    grid.channels = c;
    grid.height = h;
    grid.width = w;
    grid.data.resize(f.size());
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch) grid.at(y, x, ch) = f.at(y * w + x, ch);

    Tape tape;
    const int id = tape.leaf(f);
    for (int i = 0; i < 200; ++i) {
        const Vec2 uv(rng.uniform(-1, 6), rng.uniform(-1, 5));
        const Tensor& got = tape.val(tape.bilinear(id, h, w, {uv}));
        const auto expected = bilinear_sample(grid, uv);
        for (int ch = 0; ch < c; ++ch)
            CHECK(got.at(0, ch) == doctest::Approx(expected[ch]).epsilon(1e-14));
    }
}

TEST_CASE("gradients: fused losses") {
    Rng rng(8);
    Tensor target = random_tensor(rng, 6, 3);

    check_gradients({random_tensor(rng, 6, 3)},
                    [target](Tape& t, const std::vector<int>& in) {
                        return t.l1_sum(in[0], target);
                    });
    check_gradients({random_tensor(rng, 6, 3)},
                    [target](Tape& t, const std::vector<int>& in) {
                        return t.mse_mean(in[0], target);
                    });
    check_gradients({random_tensor(rng, 6, 3)},
                    [target](Tape& t, const std::vector<int>& in) {
                        return t.row_norm_mean(in[0], target);
                    });
    const std::vector<int> labels = {0, 2, 1, 1, 0, 2};
    check_gradients({random_tensor(rng, 6, 3)},
                    [labels](Tape& t, const std::vector<int>& in) {
                        return t.ce_mean(in[0], labels);
                    });
}

TEST_CASE("gradients: mean_rows and weighted_sum") {
    Rng rng(9);
    check_gradients({random_tensor(rng, 5, 4), random_tensor(rng, 5, 4)},
                    [](Tape& t, const std::vector<int>& in) {
                        const int m1 = t.mse_mean(t.mean_rows(in[0]), Tensor(1, 4));
                        const int m2 = t.l1_mean(in[1], Tensor(5, 4));
                        return t.weighted_sum({{0.3, m1}, {1.7, m2}});
                    });
}

TEST_CASE("fused loss values match scalar recomputation") {
    Rng rng(10);
    const Tensor x = random_tensor(rng, 7, 4);
    const Tensor target = random_tensor(rng, 7, 4);
    Tape tape;
    const int id = tape.leaf(x);

    double l1 = 0, mse = 0, rn = 0;
    for (int r = 0; r < 7; ++r) {
        double ss = 0;
        for (int c = 0; c < 4; ++c) {
            const double d = x.at(r, c) - target.at(r, c);
            l1 += std::abs(d);
            mse += d * d;
            ss += d * d;
        }
        rn += std::sqrt(ss);
    }
    CHECK(tape.val(tape.l1_sum(id, target)).v[0] == doctest::Approx(l1).epsilon(1e-14));
    CHECK(tape.val(tape.mse_mean(id, target)).v[0] ==
          doctest::Approx(mse / 28.0).epsilon(1e-14));
    CHECK(tape.val(tape.row_norm_mean(id, target)).v[0] ==
          doctest::Approx(rn / 7.0).epsilon(1e-14));

    const std::vector<int> labels = {1, 0, 3, 2, 1, 0, 2};
    double ce = 0;
    for (int r = 0; r < 7; ++r) {
        double lse = 0;
        for (int c = 0; c < 4; ++c) lse += std::exp(x.at(r, c));
        ce += std::log(lse) - x.at(r, labels[r]);
    }
    CHECK(tape.val(tape.ce_mean(id, labels)).v[0] == doctest::Approx(ce / 7.0).epsilon(1e-12));
}

TEST_CASE("backward rejects non-scalar seeds and bad ids") {
    Tape tape;
    const int x = tape.leaf(Tensor(2, 2), true);
    CHECK_THROWS_AS(tape.backward(x), InvalidShape);
    CHECK_THROWS_AS(tape.gather_rows(x, {5}), InvalidShape);
    CHECK_THROWS_AS(tape.matmul(x, 99), InvalidShape);
}

TEST_CASE("constant subgraphs carry no backward work") {
    Tape tape;
    const int c = tape.leaf(Tensor(2, 2), false);
    const int w = tape.leaf(Tensor(2, 2), true);
    const int prod = tape.matmul(c, w);
    CHECK(tape.needs_grad(prod));
    const int frozen = tape.matmul(c, c);
    CHECK_FALSE(tape.needs_grad(frozen));
}
