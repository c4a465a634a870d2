#include <benchmark/benchmark.h>

#include "bridge/langid.hpp"
#include "bridge/synthlingua.hpp"

namespace {

void BM_identify(benchmark::State& state) {
    const auto world = bridge::make_world(bridge::WorldConfig{});
    const auto id = bridge::Identifier::train(bridge::identifier_corpora(world, 40, 1));
    const auto records = bridge::generate_factual(world, 25, 2);
    std::size_t i = 0;
    for (auto _ : state) {
        const auto r = id.identify(records[i % records.size()].reasoning);
        benchmark::DoNotOptimize(r.margin);
        ++i;
    }
}
BENCHMARK(BM_identify);

void BM_train_profiles(benchmark::State& state) {
    const auto world = bridge::make_world(bridge::WorldConfig{});
    const auto corpora = bridge::identifier_corpora(world, 40, 1);
    for (auto _ : state) {
        const auto id = bridge::Identifier::train(corpora);
        benchmark::DoNotOptimize(id.profiles().size());
    }
}
BENCHMARK(BM_train_profiles);

void BM_translate_record(benchmark::State& state) {
    const auto world = bridge::make_world(bridge::WorldConfig{});
    const auto records = bridge::generate_factual(world, 25, 3);
    const auto codes = world.language_codes();
    std::size_t i = 0;
    for (auto _ : state) {
        const auto t =
            bridge::translate(world, records[i % records.size()], codes[i % codes.size()]);
        benchmark::DoNotOptimize(t.question.data());
        ++i;
    }
}
BENCHMARK(BM_translate_record);

}  // namespace
