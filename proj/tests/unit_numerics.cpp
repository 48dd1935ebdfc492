#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "naenc/errors.hpp"
#include "naenc/gradcheck.hpp"
#include "naenc/ops.hpp"
#include "naenc/optimizer.hpp"
#include "oracles.hpp"

using namespace naenc;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// scalar loss sum(w .* f(x)) with fixed random weights, for op-level
// gradient checks
VarPtr weighted(const VarPtr& x, std::uint64_t seed) {
    const Tensor w = oracles::random_tensor(x->value.shape(), seed);
    return ops::sum_all(ops::mul(x, Var::leaf(w)));
}

} // namespace

TEST_CASE("matmul identity and annihilator") {
    auto a = Var::leaf(Tensor::identity(2));
    auto b = Var::leaf(Tensor::matrix(2, 2, {3, 4, 5, 6}));
    auto out = ops::matmul(a, b);
    CHECK(out->value.values() == std::vector<real>{3, 4, 5, 6});

    auto z = Var::leaf(Tensor::zeros({2, 3}));
    auto any = Var::leaf(oracles::random_tensor({3, 2}, 7));
    auto zero_out = ops::matmul(z, any);
    for (real v : zero_out->value.values()) CHECK(v == 0.0);
}

TEST_CASE("matmul hand-expanded 2x2") {
    auto a = Var::leaf(Tensor::matrix(2, 2, {1, 2, 3, 4}));
    auto b = Var::leaf(Tensor::matrix(2, 2, {5, 6, 7, 8}));
    auto out = ops::matmul(a, b);
    CHECK(out->value.values() == std::vector<real>{19, 22, 43, 50});
}

TEST_CASE("matmul dimension mismatch names both shapes") {
    auto a = Var::leaf(Tensor::zeros({2, 3}));
    auto b = Var::leaf(Tensor::zeros({2, 2}));
    CHECK_THROWS_WITH_AS(ops::matmul(a, b), doctest::Contains("[2x3]"), ShapeError);
    try {
        ops::matmul(a, b);
    } catch (const ShapeError& e) {
        CHECK(std::string(e.what()).find("[2x2]") != std::string::npos);
    }
}

TEST_CASE("matmul agrees with the naive triple loop up to 8x8") {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        Rng rng(seed * 31 + 5);
        const std::size_t m = 1 + rng.uniform_index(8);
        const std::size_t k = 1 + rng.uniform_index(8);
        const std::size_t n = 1 + rng.uniform_index(8);
        const Tensor a = oracles::random_tensor({m, k}, seed * 3 + 1, 2.0);
        const Tensor b = oracles::random_tensor({k, n}, seed * 3 + 2, 2.0);
        const Tensor expect = oracles::naive_matmul(a, b);
        const Tensor got = ops::matmul(Var::leaf(a), Var::leaf(b))->value;
        for (std::size_t i = 0; i < expect.size(); ++i) {
            CHECK(got.at(i) == doctest::Approx(expect.at(i)).epsilon(0).scale(1).epsilon(1e-10));
        }
    }
}

TEST_CASE("matmul gradient flows to both inputs") {
    std::vector<NamedParam> params = {
        {"a", Var::parameter(oracles::random_tensor({3, 4}, 11))},
        {"b", Var::parameter(oracles::random_tensor({4, 2}, 12))},
    };
    auto loss = [&] { return weighted(ops::matmul(params[0].var, params[1].var), 13); };
    const GradCheckReport report = finite_diff_check(loss, params, 1e-5, 1e-6);
    CHECK(report.ok());
    CHECK(report.coords_checked == 20);
}

TEST_CASE("softmax_rows trivial rows") {
    auto even = ops::softmax_rows(Var::leaf(Tensor::matrix(1, 2, {0, 0})));
    CHECK(even->value.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(even->value.at(0, 1) == doctest::Approx(0.5).epsilon(1e-12));

    // column 2 masked: the only survivor takes everything
    Tensor mask = Tensor::matrix(1, 2, {0, kNegInf});
    auto single = ops::softmax_rows(Var::leaf(Tensor::matrix(1, 2, {5, 123})), &mask);
    CHECK(single->value.at(0, 0) == 1.0);
    CHECK(single->value.at(0, 1) == 0.0);
}

TEST_CASE("softmax_rows high-precision row") {
    auto out = ops::softmax_rows(Var::leaf(Tensor::matrix(1, 3, {1, 2, 3})));
    const std::vector<double> expect = oracles::softmax_row({1, 2, 3});
    CHECK(out->value.at(0, 0) == doctest::Approx(0.09003).epsilon(1e-4));
    CHECK(out->value.at(0, 1) == doctest::Approx(0.24473).epsilon(1e-4));
    CHECK(out->value.at(0, 2) == doctest::Approx(0.66524).epsilon(1e-4));
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(out->value.at(0, j) == doctest::Approx(expect[j]).epsilon(1e-12));
    }
}

TEST_CASE("softmax_rows fully masked row is all zeros, not NaN") {
    Tensor mask = Tensor::matrix(1, 3, {kNegInf, kNegInf, kNegInf});
    auto out = ops::softmax_rows(Var::leaf(Tensor::matrix(1, 3, {1, 2, 3})), &mask);
    for (real v : out->value.values()) CHECK(v == 0.0);
}

TEST_CASE("softmax_rows rows sum to one over 1000 seeded inputs") {
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        Rng rng(seed);
        const std::size_t rows = 1 + rng.uniform_index(6);
        const std::size_t cols = 1 + rng.uniform_index(6);
        const Tensor scores = oracles::random_tensor({rows, cols}, seed ^ 0xabcdef, 8.0);
        const Tensor probs = ops::softmax_rows_value(scores, nullptr);
        for (std::size_t i = 0; i < rows; ++i) {
            double total = 0;
            for (std::size_t j = 0; j < cols; ++j) {
                CHECK(probs.at(i, j) >= 0.0);
                total += probs.at(i, j);
            }
            CHECK(std::fabs(total - 1.0) < 1e-9);
        }
    }
}

TEST_CASE("softmax_rows is shift-invariant per row") {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const Tensor scores = oracles::random_tensor({3, 5}, seed, 4.0);
        Tensor shifted = scores;
        for (std::size_t j = 0; j < 5; ++j) shifted.at(1, j) += 17.25;
        const Tensor a = ops::softmax_rows_value(scores, nullptr);
        const Tensor b = ops::softmax_rows_value(shifted, nullptr);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(std::fabs(a.at(i) - b.at(i)) < 1e-9);
        }
    }
}

TEST_CASE("softmax_rows gradient, with and without mask") {
    Tensor mask({4, 4});
    mask.at(1, 2) = static_cast<real>(kNegInf);
    mask.at(3, 0) = static_cast<real>(kNegInf);
    std::vector<NamedParam> params = {{"scores", Var::parameter(oracles::random_tensor({4, 4}, 21, 3.0))}};
    auto loss = [&] { return weighted(ops::softmax_rows(params[0].var, &mask), 22); };
    CHECK(finite_diff_check(loss, params, 1e-6, 1e-7).ok());
}

TEST_CASE("layer_norm constant row maps to beta") {
    auto gamma = Var::leaf(Tensor::full({4}, 1));
    auto beta = Var::leaf(Tensor::zeros({4}));
    auto out = ops::layer_norm(Var::leaf(Tensor::full({2, 4}, 3.5)), gamma, beta, 1e-12);
    for (real v : out->value.values()) CHECK(std::fabs(v) < 1e-6);

    auto gamma0 = Var::leaf(Tensor::zeros({4}));
    auto beta7 = Var::leaf(Tensor::full({4}, 7));
    auto out2 = ops::layer_norm(Var::leaf(oracles::random_tensor({2, 4}, 5)), gamma0, beta7, 1e-12);
    for (real v : out2->value.values()) CHECK(v == 7.0);
}

TEST_CASE("layer_norm closed form for row [1,3]") {
    auto gamma = Var::leaf(Tensor::full({2}, 1));
    auto beta = Var::leaf(Tensor::zeros({2}));
    auto out = ops::layer_norm(Var::leaf(Tensor::matrix(1, 2, {1, 3})), gamma, beta, 1e-12);
    CHECK(out->value.at(0, 0) == doctest::Approx(-1.0).epsilon(1e-6));
    CHECK(out->value.at(0, 1) == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("layer_norm gradient") {
    std::vector<NamedParam> params = {
        {"x", Var::parameter(oracles::random_tensor({3, 6}, 31))},
        {"gamma", Var::parameter(oracles::random_tensor({6}, 32))},
        {"beta", Var::parameter(oracles::random_tensor({6}, 33))},
    };
    auto loss = [&] {
        return weighted(ops::layer_norm(params[0].var, params[1].var, params[2].var, 1e-8), 34);
    };
    CHECK(finite_diff_check(loss, params, 1e-6, 1e-6).ok());
}

TEST_CASE("gelu values") {
    CHECK(ops::gelu_value(0.0) == 0.0);
    CHECK(std::fabs(ops::gelu_value(10.0) - 10.0) < 1e-6);
    CHECK(ops::gelu_value(1.0) == doctest::Approx(0.84134).epsilon(1e-4));
    // high-precision normal-CDF oracle
    const long double phi = 0.5L * (1.0L + erfl(1.0L / sqrtl(2.0L)));
    CHECK(ops::gelu_value(1.0) == doctest::Approx(static_cast<double>(phi)).epsilon(1e-12));
}

TEST_CASE("gelu gradient") {
    std::vector<NamedParam> params = {{"x", Var::parameter(oracles::random_tensor({4, 3}, 41, 2.0))}};
    auto loss = [&] { return weighted(ops::gelu(params[0].var), 42); };
    CHECK(finite_diff_check(loss, params, 1e-6, 1e-7).ok());
}

TEST_CASE("cross_entropy_masked trivial cases") {
    // huge margin on the correct class
    Tensor confident({2, 4});
    confident.at(0, 2) = 50;
    confident.at(1, 1) = 50;
    auto loss = ops::cross_entropy_masked(Var::leaf(confident), {2, 1}, {0, 1});
    CHECK(loss->value.at(0) < 1e-6);

    // uniform logits: ln(V)
    auto uniform = ops::cross_entropy_masked(Var::leaf(Tensor::zeros({1, 7})), {3}, {0});
    CHECK(uniform->value.at(0) == doctest::Approx(std::log(7.0)).epsilon(1e-12));

    // empty predict set
    auto empty = ops::cross_entropy_masked(Var::leaf(Tensor::zeros({1, 7})), {3}, {});
    CHECK(empty->value.at(0) == 0.0);
}

TEST_CASE("cross_entropy_masked matches the softmax oracle") {
    auto loss = ops::cross_entropy_masked(Var::leaf(Tensor::matrix(1, 3, {1, 2, 3})), {0}, {0});
    CHECK(loss->value.at(0) == doctest::Approx(2.40761).epsilon(1e-4));
    const std::vector<double> probs = oracles::softmax_row({1, 2, 3});
    CHECK(loss->value.at(0) == doctest::Approx(-std::log(probs[0])).epsilon(1e-12));
}

TEST_CASE("cross_entropy_masked rejects out-of-range targets") {
    CHECK_THROWS_AS(ops::cross_entropy_masked(Var::leaf(Tensor::zeros({1, 3})), {3}, {0}), IndexError);
    CHECK_THROWS_AS(ops::cross_entropy_masked(Var::leaf(Tensor::zeros({1, 3})), {0}, {5}), IndexError);
}

TEST_CASE("cross_entropy_masked gradient") {
    std::vector<NamedParam> params = {{"logits", Var::parameter(oracles::random_tensor({5, 6}, 51, 2.0))}};
    const std::vector<std::int64_t> targets = {2, -1, 0, 5, -1};
    const std::vector<std::size_t> positions = {0, 2, 3};
    auto loss = [&] { return ops::cross_entropy_masked(params[0].var, targets, positions); };
    CHECK(finite_diff_check(loss, params, 1e-6, 1e-7).ok());
}

TEST_CASE("elementwise and slicing gradients") {
    std::vector<NamedParam> params = {
        {"a", Var::parameter(oracles::random_tensor({4, 6}, 61))},
        {"b", Var::parameter(oracles::random_tensor({4, 6}, 62))},
        {"row", Var::parameter(oracles::random_tensor({6}, 63))},
    };
    auto loss = [&] {
        VarPtr x = ops::add(params[0].var, params[1].var);
        x = ops::add_row_broadcast(x, params[2].var);
        x = ops::mul(x, params[0].var);
        x = ops::scale(x, 0.7);
        VarPtr left = ops::slice_cols(x, 0, 3);
        VarPtr right = ops::slice_cols(x, 3, 3);
        VarPtr joined = ops::concat_cols({left, ops::transpose(ops::matmul_nt(right, right))});
        return weighted(ops::slice_rows(joined, 1, 3), 64);
    };
    CHECK(finite_diff_check(loss, params, 1e-6, 1e-6).ok());
}

TEST_CASE("embedding gather gradient scatters into the table") {
    std::vector<NamedParam> params = {{"table", Var::parameter(oracles::random_tensor({7, 4}, 71))}};
    const std::vector<std::size_t> ids = {3, 1, 3, 6, 0};
    auto loss = [&] { return weighted(ops::embedding_rows(params[0].var, ids), 72); };
    CHECK(finite_diff_check(loss, params, 1e-6, 1e-7).ok());
    CHECK_THROWS_AS(ops::embedding_rows(params[0].var, {9}), IndexError);
}

TEST_CASE("relative position term gradients") {
    std::vector<NamedParam> params = {
        {"q", Var::parameter(oracles::random_tensor({5, 3}, 81))},
        {"table", Var::parameter(oracles::random_tensor({5, 3}, 82))}, // max distance 2
        {"probs", Var::parameter(oracles::random_tensor({5, 5}, 83))},
    };
    auto loss_scores = [&] { return weighted(ops::relative_scores(params[0].var, params[1].var, 2), 84); };
    CHECK(finite_diff_check(loss_scores, params, 1e-6, 1e-6).ok());
    auto loss_context = [&] { return weighted(ops::relative_context(params[2].var, params[1].var, 2), 85); };
    CHECK(finite_diff_check(loss_context, params, 1e-6, 1e-6).ok());

    // table too small for the configured distance
    CHECK_THROWS_AS(ops::relative_scores(params[0].var, params[1].var, 3), ConfigError);
}

TEST_CASE("adam zero gradient with zero decay is the identity") {
    std::vector<NamedParam> params = {{"p", Var::parameter(oracles::random_tensor({3, 3}, 91))}};
    const std::vector<real> before = params[0].var->value.values();
    params[0].var->value.zero_grad();
    OptimizerState state;
    AdamConfig config;
    config.learning_rate = 0.1;
    config.weight_decay = 0.0;
    adam_step(params, state, config);
    CHECK(params[0].var->value.values() == before);
    CHECK(state.step_count == 1);
}

TEST_CASE("adam first step has closed form -lr") {
    std::vector<NamedParam> params = {{"p", Var::parameter(Tensor::scalar(2.0))}};
    params[0].var->value.grad()[0] = 1.0;
    OptimizerState state;
    AdamConfig config;
    config.learning_rate = 0.1;
    config.beta1 = 0.9;
    config.beta2 = 0.999;
    config.epsilon = 0.0;
    config.weight_decay = 0.0;
    adam_step(params, state, config);
    CHECK(params[0].var->value.at(0) == doctest::Approx(1.9).epsilon(1e-15));
}

TEST_CASE("adam trajectory matches the scalar oracle") {
    std::vector<NamedParam> params = {{"p", Var::parameter(Tensor::scalar(0.5))}};
    OptimizerState state;
    AdamConfig config;
    config.learning_rate = 0.05;
    config.beta1 = 0.9;
    config.beta2 = 0.999;
    config.epsilon = 1e-6;
    config.weight_decay = 0.01;

    oracles::ScalarAdam oracle;
    double reference = 0.5;
    for (double grad : {1.0, 0.5}) {
        params[0].var->value.zero_grad();
        params[0].var->value.grad()[0] = static_cast<real>(grad);
        adam_step(params, state, config);
        oracle.step(reference, grad, config.learning_rate, config.beta1, config.beta2,
                    config.epsilon, config.weight_decay);
        CHECK(params[0].var->value.at(0) == doctest::Approx(reference).epsilon(1e-15));
    }
    CHECK(state.step_count == 2);
}

TEST_CASE("adam rejects non-finite gradients, naming the parameter") {
    std::vector<NamedParam> params = {{"block0.sa1.w_query", Var::parameter(Tensor::scalar(1.0))}};
    params[0].var->value.grad()[0] = std::numeric_limits<real>::quiet_NaN();
    OptimizerState state;
    CHECK_THROWS_WITH_AS(adam_step(params, state, AdamConfig{}),
                         doctest::Contains("block0.sa1.w_query"), TrainError);
}

TEST_CASE("finite_diff_check on quadratic and linear losses") {
    std::vector<NamedParam> params = {{"x", Var::parameter(Tensor::scalar(3.0))}};
    auto quadratic = [&] { return ops::scale(ops::mul(params[0].var, params[0].var), 0.5); };
    const GradCheckReport q = finite_diff_check(quadratic, params, 1e-5, 1e-8);
    CHECK(q.ok());
    CHECK(q.max_relative_error < 1e-8);

    auto linear = [&] { return ops::scale(params[0].var, 4.0); };
    const GradCheckReport l = finite_diff_check(linear, params, 1e-5, 1e-10);
    CHECK(l.ok());
}

TEST_CASE("tensor invariants") {
    CHECK_THROWS_AS(Tensor({2, 2}, {1, 2, 3}), ShapeError);
    Tensor t({2, 3});
    CHECK(t.size() == 6);
    CHECK(t.shape_string() == "[2x3]");
    CHECK(t.all_finite());
    t.at(1, 2) = std::numeric_limits<real>::infinity();
    CHECK(!t.all_finite());

    Tensor g({2});
    CHECK(!g.has_grad());
    g.grad()[0] = 1;
    CHECK(g.has_grad());
    g.zero_grad();
    CHECK(g.grad()[0] == 0);
}

TEST_CASE("reused nodes accumulate gradients once per use") {
    // loss = sum(x*x) + sum(x): d/dx = 2x + 1
    auto x = Var::parameter(Tensor::matrix(1, 2, {1.5, -2.0}), "x");
    VarPtr loss = ops::mean_of({ops::sum_all(ops::mul(x, x)), ops::sum_all(x)});
    backward(loss);
    CHECK(x->value.grad()[0] == doctest::Approx(0.5 * (2 * 1.5 + 1)).epsilon(1e-12));
    CHECK(x->value.grad()[1] == doctest::Approx(0.5 * (2 * -2.0 + 1)).epsilon(1e-12));
}
