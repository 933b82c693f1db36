#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "paems/circuit.hpp"
#include "paems/dataset.hpp"
#include "paems/noise_model.hpp"

namespace paems {

/// Shots are simulated in blocks of this many lanes. The randomness of shot s
/// is drawn from Philox stream (master_seed, s / kBlockLanes), so outputs are
/// independent of batch size and thread count.
inline constexpr std::size_t kBlockLanes = 256;

struct SamplerConfig {
    std::uint64_t shots = 1;
    std::uint64_t master_seed = 0;
    /// Shots per delivered batch (streaming only).
    std::size_t batch_size = 4096;
    unsigned threads = 1;
};

/// Pauli-frame Monte Carlo with per-qubit leakage flags.
///
/// Per layer: seepage/leakage trials; ideal gates (a CX with a leaked endpoint
/// is skipped and the other endpoint's frame is fully depolarized); Pauli
/// errors; measurements (leaked qubits give uniform random bits, others
/// x-frame XOR readout flip). Seepage returns a qubit in a random state.
Dataset sample(const Circuit &circuit, const ErrorSchedule &schedule, const SamplerConfig &cfg);

struct StreamSummary {
    std::uint64_t shots_delivered = 0;
    bool completed = false;
    std::string error;
};

/// Like sample(), but hands shot-major batches to `sink` and never holds more
/// than one batch plus one simulation group in memory. A throwing sink stops
/// the run; the summary reports what was delivered before the failure.
StreamSummary sample_streaming(const Circuit &circuit, const ErrorSchedule &schedule, const SamplerConfig &cfg,
                               const std::function<void(const ShotBatch &)> &sink);

/// Bytes of per-block simulator state for this circuit (frames, leak flags, record).
std::size_t sampler_state_bytes(const Circuit &circuit);

}  // namespace paems
