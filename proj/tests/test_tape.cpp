#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bridge/rng.hpp"
#include "bridge/tape.hpp"
#include "test_util.hpp"

using bridge::Reduction;
using bridge::Rng;
using bridge::Tape;
using bridge::Tensor;

namespace {

Tensor<double> random_tensor(Rng& rng, std::vector<std::size_t> shape, double scale = 1.0) {
    Tensor<double> t(std::move(shape));
    for (auto& v : t.values) v = rng.next_normal() * scale;
    return t;
}

}  // namespace

TEST_CASE("matmul basics") {
    Tape<double> tape;
    auto eye = tape.constant(Tensor<double>::matrix(2, 2, {1, 0, 0, 1}));
    auto a = tape.constant(Tensor<double>::matrix(2, 2, {1, 2, 3, 4}));
    auto r = tape.matmul(eye, a);
    CHECK(tape.value(r).values == std::vector<double>{1, 2, 3, 4});

    auto z = tape.constant(Tensor<double>::matrix(2, 1, {0, 0}));
    auto rz = tape.matmul(eye, z);
    CHECK(tape.value(rz).values == std::vector<double>{0, 0});

    auto row = tape.constant(Tensor<double>::matrix(1, 2, {1, 2}));
    auto col = tape.constant(Tensor<double>::matrix(2, 1, {3, 4}));
    CHECK(tape.value(tape.matmul(row, col)).item() == doctest::Approx(11.0));

    CHECK_THROWS_AS(tape.matmul(row, row), bridge::DimensionError);
}

TEST_CASE("log_softmax symmetry, stability, normalization") {
    const auto sym = bridge::log_softmax(Tensor<double>::row({0.0, 0.0}));
    CHECK(sym[0] == doctest::Approx(-std::log(2.0)));
    CHECK(sym[1] == doctest::Approx(-std::log(2.0)));

    const auto big = bridge::log_softmax(Tensor<double>::row({1000.0, 0.0}));
    CHECK(big.all_finite());
    CHECK(big[0] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(big[1] == doctest::Approx(-1000.0));

    Rng rng(7);
    Tensor<double> v({5});
    for (auto& x : v.values) x = rng.next_normal() * 3.0;
    const auto ls = bridge::log_softmax(v);
    double total = 0.0;
    for (double x : ls.values) total += std::exp(x);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("softmax normalization holds for magnitudes up to 1e3") {
    Rng rng(11);
    for (int rep = 0; rep < 20; ++rep) {
        Tensor<double> v({8});
        for (auto& x : v.values) x = (rng.next_double() * 2.0 - 1.0) * 1e3;
        const auto ls = bridge::log_softmax(v);
        REQUIRE(ls.all_finite());
        double total = 0.0;
        for (double x : ls.values) total += std::exp(x);
        CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
    }
}

TEST_CASE("cross_entropy analytic values") {
    // logits forcing probability ~1 on each target
    {
        Tape<double> tape;
        Tensor<double> logits({2, 4}, 0.0);
        logits.at(0, 1) = 60.0;
        logits.at(1, 2) = 60.0;
        auto l = tape.cross_entropy(tape.constant(logits), {1, 2}, Reduction::Sum);
        CHECK(tape.value(l).item() == doctest::Approx(0.0).epsilon(1e-9));
    }
    // uniform logits: sum -> L ln V, mean -> ln V
    {
        Tape<double> tape;
        auto logits = tape.constant(Tensor<double>({2, 4}, 0.0));
        auto l = tape.cross_entropy(logits, {3, 0}, Reduction::Sum);
        CHECK(tape.value(l).item() == doctest::Approx(2.0 * std::log(4.0)));
    }
    {
        Tape<double> tape;
        auto logits = tape.constant(Tensor<double>({2, 4}, 0.0));
        auto l = tape.cross_entropy(logits, {3, 0}, Reduction::Mean);
        CHECK(tape.value(l).item() == doctest::Approx(std::log(4.0)));
    }
    // out-of-range target
    {
        Tape<double> tape;
        auto logits = tape.constant(Tensor<double>({1, 4}, 0.0));
        CHECK_THROWS_AS(tape.cross_entropy(logits, {4}, Reduction::Sum), bridge::IndexError);
    }
}

TEST_CASE("backward basics") {
    // d(sum(x*x))/dx = 2x
    {
        Tape<double> tape;
        auto x = tape.leaf(Tensor<double>::row({3.0}));
        auto loss = tape.sum(tape.mul(x, x));
        auto grads = tape.backward(loss);
        CHECK(grads.at(x)[0] == doctest::Approx(6.0));
        CHECK(tape.size() == 0);  // tape cleared
    }
    // unused parameter gets a zero gradient
    {
        Tape<double> tape;
        auto x = tape.leaf(Tensor<double>::row({2.0}));
        auto w = tape.leaf(Tensor<double>::row({5.0}));
        auto loss = tape.sum(tape.mul(x, x));
        auto grads = tape.backward(loss);
        CHECK(grads.at(w)[0] == 0.0);
    }
    // non-scalar loss is rejected
    {
        Tape<double> tape;
        auto x = tape.leaf(Tensor<double>::row({1.0, 2.0}));
        CHECK_THROWS_AS(tape.backward(x), bridge::ContractError);
    }
}

// Finite-difference oracle over composite graphs touching every exported op.
TEST_CASE("gradients match central finite differences on random graphs") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed);
        std::vector<Tensor<double>> params = {
            random_tensor(rng, {3, 4}, 0.5),  // a
            random_tensor(rng, {4, 4}, 0.5),  // b
            random_tensor(rng, {4}, 0.5),     // bias
            random_tensor(rng, {4}, 0.5),     // gain
        };
        const std::vector<int> targets = {1, 0, 3};

        auto f = [&](const std::vector<Tensor<double>>& p) {
            Tape<double> tape;
            auto a = tape.leaf(p[0]);
            auto b = tape.leaf(p[1]);
            auto bias = tape.leaf(p[2]);
            auto gain = tape.leaf(p[3]);
            auto h = tape.add_rowvec(tape.matmul(a, b), bias);
            h = tape.gelu(h);
            h = tape.rmsnorm(h, gain);
            auto sm = tape.softmax_rows(h);
            auto mixed = tape.add(tape.mul(h, sm), tape.scale(h, 0.25));
            auto ce = tape.cross_entropy(mixed, targets, Reduction::Mean);
            auto extra = tape.mean(tape.exp(tape.scale(tape.sub(h, mixed), 0.5)));
            auto loss = tape.add(ce, extra);
            return tape.value(loss).item();
        };

        // reverse-mode gradients
        Tape<double> tape;
        auto a = tape.leaf(params[0]);
        auto b = tape.leaf(params[1]);
        auto bias = tape.leaf(params[2]);
        auto gain = tape.leaf(params[3]);
        auto h = tape.add_rowvec(tape.matmul(a, b), bias);
        h = tape.gelu(h);
        h = tape.rmsnorm(h, gain);
        auto sm = tape.softmax_rows(h);
        auto mixed = tape.add(tape.mul(h, sm), tape.scale(h, 0.25));
        auto ce = tape.cross_entropy(mixed, targets, Reduction::Mean);
        auto extra = tape.mean(tape.exp(tape.scale(tape.sub(h, mixed), 0.5)));
        auto loss = tape.add(ce, extra);
        auto grads = tape.backward(loss);

        const std::vector<Tensor<double>> ad = {grads.at(a), grads.at(b), grads.at(bias),
                                                grads.at(gain)};
        const auto fd = testutil::finite_difference_grads(f, params);
        CHECK(testutil::max_grad_error(ad, fd) < 1e-4);
    }
}

TEST_CASE("gather, slice, min, clip gradients") {
    Rng rng(99);
    std::vector<Tensor<double>> params = {
        random_tensor(rng, {5, 3}, 0.8),  // table
        random_tensor(rng, {4, 3}, 0.8),  // other
    };
    const std::vector<int> ids = {4, 0, 2, 2};

    auto f = [&](const std::vector<Tensor<double>>& p) {
        Tape<double> tape;
        auto table = tape.leaf(p[0]);
        auto other = tape.leaf(p[1]);
        auto g = tape.gather_rows(table, ids);
        auto m = tape.min_elem(g, other);
        auto c = tape.clip(m, -0.5, 0.5);
        auto s = tape.slice_rows(c, 1, 2);
        auto lsm = tape.log_softmax_rows(s);
        return tape.value(tape.mean(lsm)).item();
    };

    Tape<double> tape;
    auto table = tape.leaf(params[0]);
    auto other = tape.leaf(params[1]);
    auto g = tape.gather_rows(table, ids);
    auto m = tape.min_elem(g, other);
    auto c = tape.clip(m, -0.5, 0.5);
    auto s = tape.slice_rows(c, 1, 2);
    auto lsm = tape.log_softmax_rows(s);
    auto loss = tape.mean(lsm);
    auto grads = tape.backward(loss);

    const std::vector<Tensor<double>> ad = {grads.at(table), grads.at(other)};
    const auto fd = testutil::finite_difference_grads(f, params);
    CHECK(testutil::max_grad_error(ad, fd) < 1e-4);
}

TEST_CASE("gather_logprobs matches cross_entropy") {
    Rng rng(5);
    const auto logits = random_tensor(rng, {4, 6}, 1.0);
    const std::vector<int> targets = {5, 2, 0, 3};

    Tape<double> tape;
    auto l1 = tape.constant(logits);
    auto lp = tape.gather_logprobs(l1, targets);
    auto ce = tape.cross_entropy(tape.constant(logits), targets, Reduction::Sum);
    double total = 0.0;
    for (double v : tape.value(lp).values) total += v;
    CHECK(-total == doctest::Approx(tape.value(ce).item()).epsilon(1e-12));
}

TEST_CASE("exported ops keep finite values on finite inputs") {
    Rng rng(123);
    for (int rep = 0; rep < 10; ++rep) {
        Tape<double> tape;
        auto a = tape.constant(random_tensor(rng, {4, 4}, 100.0));
        auto b = tape.constant(random_tensor(rng, {4, 4}, 100.0));
        auto gain = tape.constant(random_tensor(rng, {4}, 1.0));
        CHECK(tape.value(tape.softmax_rows(tape.matmul(a, b))).all_finite());
        CHECK(tape.value(tape.log_softmax_rows(a)).all_finite());
        CHECK(tape.value(tape.rmsnorm(a, gain)).all_finite());
        CHECK(tape.value(tape.gelu(a)).all_finite());
        CHECK(tape.value(tape.exp(tape.scale(a, 0.01)))
                  .all_finite());
    }
}

TEST_CASE("determinism: same inputs give bitwise-identical results") {
    auto run = [] {
        Rng rng(42);
        Tape<double> tape;
        auto a = tape.leaf(random_tensor(rng, {3, 3}, 1.0));
        auto gain = tape.leaf(random_tensor(rng, {3}, 1.0));
        auto loss = tape.mean(tape.rmsnorm(tape.gelu(a), gain));
        auto grads = tape.backward(loss);
        return std::make_pair(grads.at(0).values, grads.at(1).values);
    };
    const auto first = run();
    const auto second = run();
    CHECK(first.first == second.first);
    CHECK(first.second == second.second);
}
