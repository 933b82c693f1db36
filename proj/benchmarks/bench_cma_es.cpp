#include <benchmark/benchmark.h>

#include <cmath>

#include "paems/cma_es.hpp"

using namespace paems;

namespace {

// Optimizer overhead on a cheap objective; dominated by the eigendecomposition at large dims.
void BM_CmaEsSphere(benchmark::State &state) {
    const auto dim = static_cast<std::size_t>(state.range(0));
    auto sphere = [](std::span<const double> x) {
        double s = 0;
        for (double v : x) s += v * v;
        return s;
    };
    CmaConfig cfg;
    cfg.budget = 2000;
    std::vector<double> x0(dim, 1.0);
    for (auto _ : state) benchmark::DoNotOptimize(cma_es(sphere, x0, cfg).f_best);
}
BENCHMARK(BM_CmaEsSphere)->Arg(10)->Arg(50)->Arg(188)->Unit(benchmark::kMillisecond);

}  // namespace
