#include "paems/equivalence.hpp"

#include <bit>
#include <cmath>
#include <functional>

#include "paems/analysis.hpp"
#include "paems/oracle.hpp"
#include "paems/rng.hpp"
#include "paems/sampler.hpp"
#include "text_util.hpp"

namespace paems {

namespace {

struct ChannelClass {
    const char *name;
    std::function<void(QubitParams &, std::uint32_t)> qubit;
    double f2q;
    LeakSites leak_sites = LeakSites::TwoQubitGates;
};

std::vector<ChannelClass> channel_classes() {
    return {
        {"decoherence", [](QubitParams &q, std::uint32_t) { q.t1_us = 15, q.t2_us = 9; }, 1.0},
        {"gate1q", [](QubitParams &q, std::uint32_t) { q.f1q = 0.97; }, 1.0},
        {"gate2q", [](QubitParams &, std::uint32_t) {}, 0.97},
        {"init", [](QubitParams &q, std::uint32_t) { q.p_init = 0.04; }, 1.0},
        {"reset", [](QubitParams &q, std::uint32_t) { q.p_reset = 0.04; }, 1.0},
        {"readout", [](QubitParams &q, std::uint32_t) { q.p_readout = 0.04; }, 1.0},
        {"leakage", [](QubitParams &q, std::uint32_t) { q.p_leak = 0.02, q.p_seep = 0.1; }, 1.0},
        {"leakage-all-gates", [](QubitParams &q, std::uint32_t) { q.p_leak = 0.02, q.p_seep = 0.1; }, 1.0,
         LeakSites::AllGates},
        {"full",
         [](QubitParams &q, std::uint32_t i) {
             double s = 1 + 0.25 * (i % 3);
             q.t1_us = 20 / s;
             q.t2_us = 14 / s;
             q.f1q = 1 - 0.004 * s;
             q.p_init = 0.01 * s;
             q.p_reset = 0.012 * s;
             q.p_readout = 0.015 * s;
             q.p_leak = 0.005 * s;
             q.p_seep = 0.08;
         },
         0.985},
    };
}

NoiseModel class_model(const ChannelClass &cls, std::uint32_t n) {
    NoiseModel m = NoiseModel::uniform(n, QubitParams{}, 1.0);
    for (std::uint32_t i = 0; i < n; i++) cls.qubit(m.qubits[i], i);
    for (CouplerParams &c : m.couplers) c.f2q = cls.f2q;
    m.leak_sites = cls.leak_sites;
    return m;
}

/// z-score of the gap between two binomial counts over the same shot count.
double binomial_z(std::uint64_t a, std::uint64_t b, std::uint64_t shots) {
    if (a == b) return 0;
    double n = static_cast<double>(shots);
    double pooled = static_cast<double>(a + b) / (2 * n);
    double sd = std::sqrt(2 * pooled * (1 - pooled) / n);
    double gap = std::abs(static_cast<double>(a) - static_cast<double>(b)) / n;
    return sd > 0 ? gap / sd : INFINITY;
}

std::uint64_t joint_count(const BitTable &t, std::size_t i, std::size_t j) {
    auto a = t.row(i);
    auto b = t.row(j);
    std::uint64_t n = 0;
    for (std::size_t w = 0; w < a.size(); w++) n += static_cast<std::uint64_t>(std::popcount(a[w] & b[w]));
    return n;
}

}  // namespace

std::vector<EquivalenceCase> equivalence_suite() {
    std::vector<EquivalenceCase> out;
    RepetitionCodeOptions opts;
    opts.final_detectors = true;
    for (std::uint32_t n : {3u, 5u, 7u}) {
        for (std::uint32_t rounds : {1u, 2u, 3u}) {
            for (Basis basis : {Basis::Z, Basis::X}) {
                Circuit c = build_repetition_code(n, rounds, basis, GateTimingTable{}, opts);
                for (const ChannelClass &cls : channel_classes()) {
                    std::string name = std::string(cls.name) + "/n" + std::to_string(n) + "/r" +
                                       std::to_string(rounds) + (basis == Basis::Z ? "/Z" : "/X");
                    out.push_back({std::move(name), c, class_model(cls, n)});
                }
            }
        }
    }
    return out;
}

EquivalenceResult check_equivalence(const EquivalenceCase &c, std::uint64_t shots, std::uint64_t seed,
                                    double z_tolerance, unsigned threads) {
    ErrorSchedule schedule = compile_schedule(c.circuit, c.model);
    SamplerConfig cfg;
    cfg.shots = shots;
    cfg.master_seed = derive_seed(seed, 1);
    cfg.threads = threads;
    DetectionTensor frame = extract_detections(sample(c.circuit, schedule, cfg), c.circuit);
    DetectionTensor oracle =
        extract_detections(oracle_sample(c.circuit, schedule, shots, derive_seed(seed, 2)), c.circuit);

    EquivalenceResult r;
    r.name = c.name;
    const std::size_t n = frame.detectors.size();
    auto label = [&](std::size_t i) {
        const DetectorId &d = frame.detectors[i];
        return "D(" + std::to_string(d.ancilla) + "," + std::to_string(d.round) + ")";
    };
    auto record = [&](double z, const std::function<std::string()> &what) {
        r.n_tests++;
        if (z > z_tolerance) r.n_failures++;
        if (z > r.max_z) {
            r.max_z = z;
            r.worst = what();
        }
    };
    for (std::size_t i = 0; i < n; i++) {
        double z = binomial_z(frame.events.row_popcount(i), oracle.events.row_popcount(i), shots);
        record(z, [&] { return "marginal " + label(i); });
        for (std::size_t j = i + 1; j < n; j++) {
            double zj = binomial_z(joint_count(frame.events, i, j), joint_count(oracle.events, i, j), shots);
            record(zj, [&] { return "joint " + label(i) + " " + label(j); });
        }
    }
    if (!r.worst.empty()) r.worst += " z=" + format_double(r.max_z);
    return r;
}

}  // namespace paems
