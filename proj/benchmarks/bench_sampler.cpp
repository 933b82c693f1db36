#include <benchmark/benchmark.h>

#include "paems/noise_model.hpp"
#include "paems/sampler.hpp"

using namespace paems;

namespace {

NoiseModel bench_model(std::uint32_t n) {
    QubitParams q;
    q.t1_us = 30;
    q.t2_us = 25;
    q.f1q = 0.9995;
    q.p_init = 0.005;
    q.p_reset = 0.005;
    q.p_readout = 0.015;
    q.p_leak = 5e-4;
    q.p_seep = 0.05;
    return NoiseModel::uniform(n, q, 0.99);
}

// Shots per second on a 30-round memory experiment; range(0) is the chain length.
void BM_SampleMemory(benchmark::State &state) {
    const auto n = static_cast<std::uint32_t>(state.range(0));
    Circuit c = build_repetition_code(n, 30, Basis::Z, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c, bench_model(n));
    SamplerConfig cfg;
    cfg.shots = 4096;
    cfg.master_seed = 1;
    for (auto _ : state) {
        Dataset d = sample(c, s, cfg);
        benchmark::DoNotOptimize(d.bits().rows());
        cfg.master_seed++;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.shots));
}
BENCHMARK(BM_SampleMemory)->Arg(11)->Arg(21)->Arg(41)->Arg(81)->Unit(benchmark::kMillisecond);

void BM_SampleStreaming(benchmark::State &state) {
    Circuit c = build_repetition_code(21, 30, Basis::X, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c, bench_model(21));
    SamplerConfig cfg;
    cfg.shots = 16384;
    cfg.batch_size = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        std::size_t bytes = 0;
        sample_streaming(c, s, cfg, [&](const ShotBatch &b) { bytes += b.rows.size(); });
        benchmark::DoNotOptimize(bytes);
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.shots));
}
BENCHMARK(BM_SampleStreaming)->Arg(256)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_CompileSchedule(benchmark::State &state) {
    Circuit c = build_repetition_code(21, 30, Basis::Z, GateTimingTable{});
    NoiseModel m = bench_model(21);
    for (auto _ : state) benchmark::DoNotOptimize(compile_schedule(c, m).layers.size());
}
BENCHMARK(BM_CompileSchedule)->Unit(benchmark::kMicrosecond);

}  // namespace
