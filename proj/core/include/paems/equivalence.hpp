#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "paems/circuit.hpp"
#include "paems/noise_model.hpp"

namespace paems {

/// One sampler-vs-oracle comparison: a small circuit under a model that
/// enables a single channel class (or the full model).
struct EquivalenceCase {
    std::string name;
    Circuit circuit;
    NoiseModel model;
};

/// n in {3, 5, 7}, rounds in {1, 2, 3}, both bases; each channel class alone
/// (decoherence, 1q gate, 2q gate, init, reset, readout, leakage+seepage)
/// and the full model. Circuits carry final data-parity detectors.
std::vector<EquivalenceCase> equivalence_suite();

struct EquivalenceResult {
    std::string name;
    std::size_t n_tests = 0;
    std::size_t n_failures = 0;
    /// Largest z-score over all compared statistics, and which one it was.
    double max_z = 0;
    std::string worst;

    bool passed() const { return n_failures == 0; }
};

/// Compares every detector marginal and every pairwise joint firing
/// probability between the frame sampler and the state-vector oracle.
///
/// Each statistic is a difference of two independent binomial proportions;
/// it fails when |a - b| exceeds z_tolerance standard deviations of the
/// pooled estimate. Equal counts always pass.
EquivalenceResult check_equivalence(const EquivalenceCase &c, std::uint64_t shots, std::uint64_t seed,
                                    double z_tolerance = 3.0, unsigned threads = 1);

}  // namespace paems
