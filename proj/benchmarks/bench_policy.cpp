#include <benchmark/benchmark.h>

#include "bridge/policy.hpp"
#include "bridge/tape.hpp"

using bridge::Policy;
using bridge::PolicyConfig;
using bridge::PolicyGraph;
using bridge::Tape;

namespace {

PolicyConfig bench_config(int dim) {
    PolicyConfig c;
    c.model_dim = dim;
    c.n_layers = 1;
    c.n_heads = 4;
    c.context_length = 160;
    c.seed = 5;
    return c;
}

void BM_policy_forward(benchmark::State& state) {
    auto policy = bridge::init_policy<float>(bench_config(static_cast<int>(state.range(0))));
    std::vector<int> tokens(128);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        tokens[i] = static_cast<int>(i % 200);
    for (auto _ : state) {
        Tape<float> tape;
        PolicyGraph<float> graph(tape, policy, false);
        auto logits = graph.forward(tokens);
        benchmark::DoNotOptimize(tape.value(logits).values.data());
    }
}
BENCHMARK(BM_policy_forward)->Arg(16)->Arg(32)->Arg(64);

void BM_policy_train_step(benchmark::State& state) {
    auto policy = bridge::init_policy<float>(bench_config(32));
    std::vector<int> tokens(96);
    for (std::size_t i = 0; i < tokens.size(); ++i)
        tokens[i] = static_cast<int>((i * 7) % 200);
    const std::vector<int> targets(tokens.begin() + 1, tokens.end());
    for (auto _ : state) {
        Tape<float> tape;
        PolicyGraph<float> graph(tape, policy, true);
        auto logits = graph.forward(tokens);
        auto rows = tape.slice_rows(logits, 0, targets.size());
        auto loss = tape.cross_entropy(rows, targets, bridge::Reduction::Sum);
        auto grads = tape.backward(loss);
        benchmark::DoNotOptimize(grads.size());
    }
}
BENCHMARK(BM_policy_train_step);

void BM_policy_sample(benchmark::State& state) {
    auto policy = bridge::init_policy<float>(bench_config(32));
    const std::vector<int> prompt = {10, 20, 30, 40, bridge::tok::kPromptEnd};
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto r = bridge::sample(policy, prompt, 24, 1.0, bridge::tok::kStop, seed++);
        benchmark::DoNotOptimize(r.tokens.data());
    }
}
BENCHMARK(BM_policy_sample);

}  // namespace
