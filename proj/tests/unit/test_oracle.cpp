#include <gtest/gtest.h>

#include <cmath>

#include "paems/analysis.hpp"
#include "paems/errors.hpp"
#include "paems/oracle.hpp"

using namespace paems;

namespace {

Dataset oracle(const Circuit &c, const NoiseModel &m, std::uint64_t shots, std::uint64_t seed) {
    return oracle_sample(c, compile_schedule(c, m), shots, seed);
}

}  // namespace

TEST(Oracle, NoiselessIsZero) {
    for (Basis b : {Basis::X, Basis::Z}) {
        Circuit c = build_repetition_code(5, 2, b, GateTimingTable{}, {.final_detectors = true});
        Dataset d = oracle(c, NoiseModel::uniform(5, QubitParams{}, 1.0), 200, 1);
        for (std::size_t m = 0; m < d.n_measurements(); m++) EXPECT_EQ(d.bits().row_popcount(m), 0u);
    }
}

TEST(Oracle, XBasisDataReadoutIsUniformWithoutFinalRotation) {
    // The data qubits end in |+> only if the final H is skipped; with it they
    // return to |0>. Removing the last H layer exposes the Born rule.
    Circuit full = build_repetition_code(3, 1, Basis::X, GateTimingTable{});
    std::vector<Layer> layers = full.layers();
    layers.erase(layers.end() - 2);
    Circuit c(3, Basis::X, 1, layers, full.detectors());
    const std::size_t shots = 20000;
    Dataset d = oracle(c, NoiseModel::uniform(3, QubitParams{}, 1.0), shots, 3);
    double ones = static_cast<double>(d.bits().row_popcount(c.final_measurement(0))) / shots;
    EXPECT_NEAR(ones, 0.5, 4 * std::sqrt(0.25 / shots));
}

TEST(Oracle, ReadoutFlipRate) {
    Circuit c = build_repetition_code(3, 1, Basis::Z, GateTimingTable{});
    QubitParams q;
    q.p_readout = 0.1;
    const std::size_t shots = 20000;
    Dataset d = oracle(c, NoiseModel::uniform(3, q, 1.0), shots, 9);
    for (std::size_t m = 0; m < d.n_measurements(); m++) {
        EXPECT_NEAR(static_cast<double>(d.bits().row_popcount(m)) / shots, 0.1, 4 * std::sqrt(0.09 / shots));
    }
}

TEST(Oracle, DeterministicPerSeed) {
    Circuit c = build_repetition_code(5, 2, Basis::X, GateTimingTable{});
    QubitParams q;
    q.t1_us = 10;
    q.t2_us = 8;
    q.p_leak = 0.02;
    q.p_seep = 0.1;
    NoiseModel m = NoiseModel::uniform(5, q, 0.98);
    EXPECT_EQ(oracle(c, m, 500, 4), oracle(c, m, 500, 4));
    EXPECT_NE(oracle(c, m, 500, 4), oracle(c, m, 500, 5));
}

TEST(Oracle, RejectsLargeCircuitsAndMismatchedSchedules) {
    Circuit big = build_repetition_code(kOracleMaxQubits + 1, 1, Basis::Z, GateTimingTable{});
    EXPECT_THROW(oracle(big, NoiseModel::uniform(kOracleMaxQubits + 1, QubitParams{}, 1.0), 1, 1), ValidationError);
    Circuit c = build_repetition_code(3, 1, Basis::Z, GateTimingTable{});
    Circuit c2 = build_repetition_code(3, 2, Basis::Z, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c2, NoiseModel::uniform(3, QubitParams{}, 1.0));
    EXPECT_THROW(oracle_sample(c, s, 1, 1), ValidationError);
}
