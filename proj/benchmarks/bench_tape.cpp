#include <benchmark/benchmark.h>

#include "bridge/rng.hpp"
#include "bridge/tape.hpp"

using bridge::Rng;
using bridge::Tape;
using bridge::Tensor;

namespace {

template <typename S>
Tensor<S> random_tensor(Rng& rng, std::vector<std::size_t> shape) {
    Tensor<S> t(std::move(shape));
    for (auto& v : t.values) v = static_cast<S>(rng.next_normal());
    return t;
}

void BM_matmul_forward(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const auto a = random_tensor<float>(rng, {n, n});
    const auto b = random_tensor<float>(rng, {n, n});
    for (auto _ : state) {
        Tape<float> tape;
        auto r = tape.matmul(tape.constant(a), tape.constant(b));
        benchmark::DoNotOptimize(tape.value(r).values.data());
    }
}
BENCHMARK(BM_matmul_forward)->Arg(32)->Arg(64)->Arg(128);

void BM_cross_entropy_backward(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    const auto logits = random_tensor<float>(rng, {rows, 260});
    std::vector<int> targets(rows);
    for (auto& t : targets) t = static_cast<int>(rng.next_below(260));
    for (auto _ : state) {
        Tape<float> tape;
        auto leaf = tape.leaf(logits);
        auto loss = tape.cross_entropy(leaf, targets, bridge::Reduction::Sum);
        auto grads = tape.backward(loss);
        benchmark::DoNotOptimize(grads.at(leaf).values.data());
    }
}
BENCHMARK(BM_cross_entropy_backward)->Arg(32)->Arg(128);

}  // namespace
