#pragma once

#include <cstdint>

#include "paems/circuit.hpp"
#include "paems/dataset.hpp"
#include "paems/noise_model.hpp"

namespace paems {

inline constexpr std::uint32_t kOracleMaxQubits = 10;

/// Slow reference simulator: one full state vector per shot.
///
/// Leakage is modelled by collapsing the qubit, parking it in |0> and raising
/// a flag; flagged qubits skip gates and errors and read out uniformly at
/// random. Seepage clears the flag and applies X with probability 1/2. A CX
/// with a flagged endpoint is skipped and the other endpoint receives an X and
/// a Z with probability 1/2 each. Shares no code with the frame sampler
/// beyond the circuit and schedule types.
Dataset oracle_sample(const Circuit &circuit, const ErrorSchedule &schedule, std::uint64_t shots,
                      std::uint64_t seed);

}  // namespace paems
