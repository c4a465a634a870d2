#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bridge/adam.hpp"
#include "bridge/rng.hpp"

using bridge::AdamState;
using bridge::Rng;
using bridge::Tensor;

TEST_CASE("zero gradient and zero weight decay leave parameters unchanged") {
    Tensor<double> p({3}, std::vector<double>{1.0, -2.0, 0.5});
    const auto original = p.values;
    std::vector<Tensor<double>*> params = {&p};
    std::vector<Tensor<double>> grads = {Tensor<double>({3}, 0.0)};
    AdamState<double> state;
    state.weight_decay = 0.0;
    bridge::adam_step(params, grads, state);
    bridge::adam_step(params, grads, state);
    CHECK(p.values == original);
}

TEST_CASE("first step moves opposite the gradient at unit rate") {
    // bias-corrected mhat/sqrt(vhat) = g/|g| on step 1
    Tensor<double> p({2}, std::vector<double>{0.0, 0.0});
    std::vector<Tensor<double>*> params = {&p};
    std::vector<Tensor<double>> grads = {Tensor<double>({2}, std::vector<double>{0.3, -7.0})};
    AdamState<double> state;
    state.lr = 0.01;
    state.weight_decay = 0.0;
    state.eps = 0.0;  // exact sign identity without the epsilon offset
    bridge::adam_step(params, grads, state);
    CHECK(p[0] == doctest::Approx(-0.01));
    CHECK(p[1] == doctest::Approx(0.01));
}

TEST_CASE("two steps bitwise-match an independent recurrence evaluation") {
    Rng rng(2024);
    Tensor<double> p({4});
    for (auto& v : p.values) v = rng.next_normal();
    Tensor<double> g1({4}), g2({4});
    for (auto& v : g1.values) v = rng.next_normal();
    for (auto& v : g2.values) v = rng.next_normal();

    const double lr = 1e-5, b1 = 0.9, b2 = 0.95, eps = 1e-8, wd = 1e-4;

    // oracle: plain recurrences, written out independently
    std::vector<double> x = p.values, m(4, 0.0), v(4, 0.0);
    const std::vector<const Tensor<double>*> gs = {&g1, &g2};
    for (int t = 1; t <= 2; ++t) {
        const double bc1 = 1.0 - std::pow(b1, t);
        const double bc2 = 1.0 - std::pow(b2, t);
        for (int i = 0; i < 4; ++i) {
            const double g = (*gs[t - 1])[static_cast<std::size_t>(i)];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            x[i] = x[i] - lr * (mhat / (std::sqrt(vhat) + eps) + wd * x[i]);
        }
    }

    std::vector<Tensor<double>*> params = {&p};
    AdamState<double> state;
    state.lr = lr;
    state.beta1 = b1;
    state.beta2 = b2;
    state.eps = eps;
    state.weight_decay = wd;
    std::vector<Tensor<double>> grads1 = {g1};
    bridge::adam_step(params, grads1, state);
    std::vector<Tensor<double>> grads2 = {g2};
    bridge::adam_step(params, grads2, state);

    CHECK(p.values == x);  // bitwise in 64-bit mode
}

TEST_CASE("shape mismatches are rejected") {
    Tensor<double> p({3});
    std::vector<Tensor<double>*> params = {&p};
    std::vector<Tensor<double>> grads = {Tensor<double>({2})};
    AdamState<double> state;
    CHECK_THROWS_AS(bridge::adam_step(params, grads, state), bridge::DimensionError);
}
