#include <benchmark/benchmark.h>

#include "paems/analysis.hpp"
#include "paems/sampler.hpp"

using namespace paems;

namespace {

DetectionTensor detections(std::uint32_t n, std::size_t shots) {
    Circuit c = build_repetition_code(n, 30, Basis::Z, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c, NoiseModel::baseline(ModelKind::SI1000, 0.01));
    SamplerConfig cfg;
    cfg.shots = shots;
    return extract_detections(sample(c, s, cfg), c);
}

void BM_CorrelationMatrix(benchmark::State &state) {
    DetectionTensor t = detections(21, 4096);
    auto scope = state.range(0) ? CorrelationScope::Sectors : CorrelationScope::Full;
    for (auto _ : state) benchmark::DoNotOptimize(correlation_matrix(t, scope).p.data());
    state.SetLabel(state.range(0) ? "sectors" : "full");
}
BENCHMARK(BM_CorrelationMatrix)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ExtractDetections(benchmark::State &state) {
    Circuit c = build_repetition_code(21, 30, Basis::Z, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c, NoiseModel::baseline(ModelKind::SI1000, 0.01));
    SamplerConfig cfg;
    cfg.shots = 4096;
    Dataset d = sample(c, s, cfg);
    for (auto _ : state) benchmark::DoNotOptimize(extract_detections(d, c).n_shots);
}
BENCHMARK(BM_ExtractDetections)->Unit(benchmark::kMicrosecond);

}  // namespace
