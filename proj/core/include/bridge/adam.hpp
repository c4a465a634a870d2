#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "bridge/tensor.hpp"

namespace bridge {

// Adam with bias correction and decoupled weight decay. Defaults follow the
// training configuration this project ships with; epsilon is the usual 1e-8.
template <typename S>
struct AdamState {
    double lr = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.95;
    double eps = 1e-8;
    double weight_decay = 1e-4;

    std::int64_t step = 0;
    std::vector<Tensor<S>> m;  // first moments, one per parameter
    std::vector<Tensor<S>> v;  // second moments

    void reset_moments() {
        m.clear();
        v.clear();
        step = 0;
    }
};

// One update over an ordered parameter list. Moments are allocated on first
// use and must keep matching shapes afterwards.
//
// Per parameter x with gradient g, in this exact order:
//   m   <- b1*m + (1-b1)*g
//   v   <- b2*v + (1-b2)*g^2
//   x   <- x - lr*( (m/(1-b1^t)) / (sqrt(v/(1-b2^t)) + eps) + wd*x )
template <typename S>
void adam_step(std::vector<Tensor<S>*>& params, const std::vector<Tensor<S>>& grads,
               AdamState<S>& state) {
    if (params.size() != grads.size())
        throw DimensionError("adam_step: " + std::to_string(params.size()) + " params vs " +
                             std::to_string(grads.size()) + " grads");
    if (state.m.empty()) {
        for (auto* p : params) {
            state.m.emplace_back(p->shape);
            state.v.emplace_back(p->shape);
        }
    }
    if (state.m.size() != params.size())
        throw DimensionError("adam_step: moment count does not match parameter count");

    state.step += 1;
    const S b1 = static_cast<S>(state.beta1);
    const S b2 = static_cast<S>(state.beta2);
    const S lr = static_cast<S>(state.lr);
    const S eps = static_cast<S>(state.eps);
    const S wd = static_cast<S>(state.weight_decay);
    const S bc1 = S(1) - static_cast<S>(std::pow(state.beta1, static_cast<double>(state.step)));
    const S bc2 = S(1) - static_cast<S>(std::pow(state.beta2, static_cast<double>(state.step)));

    for (std::size_t k = 0; k < params.size(); ++k) {
        Tensor<S>& x = *params[k];
        const Tensor<S>& g = grads[k];
        Tensor<S>& m = state.m[k];
        Tensor<S>& v = state.v[k];
        if (!x.same_shape(g) || !x.same_shape(m))
            throw DimensionError("adam_step: parameter " + std::to_string(k) +
                                 " shape mismatch with gradient or moment");
        for (std::size_t i = 0; i < x.size(); ++i) {
            m[i] = b1 * m[i] + (S(1) - b1) * g[i];
            v[i] = b2 * v[i] + (S(1) - b2) * g[i] * g[i];
            const S mhat = m[i] / bc1;
            const S vhat = v[i] / bc2;
            x[i] = x[i] - lr * (mhat / (std::sqrt(vhat) + eps) + wd * x[i]);
        }
    }
}

}  // namespace bridge
