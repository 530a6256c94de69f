#include <random>

#include <benchmark/benchmark.h>

#include "icbpl/geometry.hpp"
#include "icbpl/head.hpp"
#include "icbpl/losses.hpp"
#include "icbpl/metrics.hpp"
#include "icbpl/neighbors.hpp"

namespace {

using namespace icbpl;

Matrix unit_rows(Index rows, Index cols, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    m.rowwise().normalize();
    return m;
}

void BM_GeneratePedcc(benchmark::State& state) {
    const int c = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(generate_pedcc(c, 64));
}
BENCHMARK(BM_GeneratePedcc)->Arg(10)->Arg(50)->Arg(65);

void BM_GeneratePedccRotated(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(generate_pedcc(10, 64, 1));
}
BENCHMARK(BM_GeneratePedccRotated);

void BM_BuildNeighbors(benchmark::State& state) {
    const Matrix x = unit_rows(state.range(0), 128, 1);
    for (auto _ : state) benchmark::DoNotOptimize(build_neighbors(x, 4));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildNeighbors)->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);

void BM_CombinedLoss(benchmark::State& state) {
    const Index n = state.range(0);
    const auto pedcc = generate_pedcc(10, 64);
    LatentBatch b{unit_rows(n, 64, 1), unit_rows(n, 64, 2), unit_rows(4 * n, 64, 3), 4};
    for (auto _ : state)
        benchmark::DoNotOptimize(combined_loss(b, pedcc, LossWeights{}, KernelConfig::median()));
}
BENCHMARK(BM_CombinedLoss)->Arg(100)->Arg(400)->Unit(benchmark::kMicrosecond);

void BM_HeadForwardBackward(benchmark::State& state) {
    const ProjectionHead head({2048, 512, 64}, 1);
    const Matrix x = unit_rows(600, 2048, 2);
    const Matrix g = unit_rows(600, 64, 3);
    for (auto _ : state) {
        const auto cache = head.forward(x);
        benchmark::DoNotOptimize(head.backward(cache, g));
    }
}
BENCHMARK(BM_HeadForwardBackward)->Unit(benchmark::kMillisecond);

void BM_Hungarian(benchmark::State& state) {
    const Index k = state.range(0);
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<int> count(0, 500);
    Matrix cost(k, k);
    for (Index i = 0; i < cost.size(); ++i) cost.data()[i] = -count(rng);
    for (auto _ : state) benchmark::DoNotOptimize(hungarian(cost));
}
BENCHMARK(BM_Hungarian)->Arg(10)->Arg(50)->Arg(100);

}  // namespace
BENCHMARK_MAIN();
