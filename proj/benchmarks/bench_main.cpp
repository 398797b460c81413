#include <benchmark/benchmark.h>

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "cascadelab/cascade.hpp"
#include "cascadelab/measure.hpp"
#include "cascadelab/parallel.hpp"
#include "cascadelab/rng.hpp"

using namespace cascadelab;

namespace {

IfsSpec dense_planar() {
    std::vector<Similarity> maps;
    const double angles[] = {1.0, 2.0, 0.0};
    for (int i = 0; i < 3; ++i) {
        const double t = 2.0 * 3.141592653589793 * i / 3.0;
        maps.push_back(Similarity::planar(0.45, angles[i], 0.55 * std::cos(t), 0.55 * std::sin(t)));
    }
    return IfsSpec(maps);
}

void BM_KeyedStream(benchmark::State& state) {
    KeyedStream s(7, std::uint64_t{3});
    for (auto _ : state) benchmark::DoNotOptimize(s.next_u64());
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_KeyedStream);

void BM_CascadeMeasure(benchmark::State& state) {
    set_thread_count(1);
    const auto ifs = dense_planar();
    const auto model = std::make_shared<const WeightModel>(bernoulli_weights(ifs));
    const int level = static_cast<int>(state.range(0));
    std::uint64_t seed = 0;
    for (auto _ : state) {
        auto nu = cascade_measure(CascadeRealization(model, ++seed), ifs, level);
        benchmark::DoNotOptimize(nu.size());
    }
}
BENCHMARK(BM_CascadeMeasure)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_BallQuery(benchmark::State& state) {
    const auto ifs = dense_planar();
    const auto model = std::make_shared<const WeightModel>(bernoulli_weights(ifs));
    const auto nu = cascade_measure(CascadeRealization(model, 1), ifs, 10);
    const double r = 1.0 / static_cast<double>(state.range(0));
    const BallIndex index(nu, r);
    KeyedStream pick(5, std::uint64_t{0});
    for (auto _ : state) {
        const auto i = static_cast<std::size_t>(pick.below(nu.size()));
        benchmark::DoNotOptimize(index.mass(nu.point(i), r));
    }
    state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_BallQuery)->Arg(16)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
