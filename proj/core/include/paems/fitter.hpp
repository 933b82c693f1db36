#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "paems/analysis.hpp"
#include "paems/circuit.hpp"
#include "paems/cma_es.hpp"
#include "paems/dataset.hpp"
#include "paems/noise_model.hpp"

namespace paems {

/// Weights of the loss terms; a term with weight 0 is not evaluated.
struct LossWeights {
    double time = 0;
    double space = 0;
    double spacetime = 0;
    double leak = 0;
    /// RMS gap of the per-round detection fraction curves.
    double fraction = 0;
    /// Mismatch of the late-round fraction slope, scaled to the late window length.
    double fraction_slope = 0;
    /// Mean |gap| of the round-1 per-detector event probabilities.
    double round1 = 0;

    bool any() const;
};

struct LossTerms {
    double timelike = 0;
    double spacelike = 0;
    double spacetime = 0;
    double leakage_tail = 0;
    double fraction_rms = 0;
    double fraction_slope = 0;
    double round1 = 0;

    double combined() const { return timelike + spacelike + spacetime; }
    double weighted(const LossWeights &w) const;
};

/// Statistics the multi-round losses compare: run-averaged correlations,
/// pooled fraction curve, round-1 detector marginals.
struct MultiroundStats {
    CorrelationReport correlations;
    std::vector<double> fraction;
    std::vector<double> round1;
    std::size_t n_runs = 0;
    std::size_t run_shots = 0;
};

MultiroundStats multiround_stats(std::span<const Dataset> runs, const Circuit &circuit,
                                 CorrelationScope scope = CorrelationScope::Full);
LossTerms compare_stats(const MultiroundStats &model, const MultiroundStats &target);

/// Late-round slope of a fraction curve (least squares over the second half of the rounds).
double late_fraction_slope(std::span<const double> fraction);

/// Simulates `n_runs` runs of `run_shots` shots each (one dataset, split into runs).
std::vector<Dataset> simulate_runs(const Circuit &circuit, const NoiseModel &model, std::size_t n_runs,
                                   std::size_t run_shots, std::uint64_t seed, unsigned threads = 1);

struct StageConfig {
    std::size_t budget = 300;
    double sigma0 = 0.3;
    std::size_t lambda = 0;
    /// Simulated runs per evaluation; 0 matches the target.
    std::size_t sim_runs = 0;
    LossWeights weights;
};

struct FitConfig {
    std::uint64_t seed = 1;
    /// Parallel candidate evaluations; never changes results.
    unsigned threads = 1;
    std::vector<int> stages{1, 2, 3};
    /// Starting point of leakage and seepage probabilities in Stage 1
    /// (zero has no finite logit).
    double initial_leak = 1e-4;
    double initial_seep = 1e-4;
    StageConfig stage1;
    StageConfig coherence;
    StageConfig gates;
    StageConfig spam;
    StageConfig stage3;
    bool per_run_refine = false;
    StageConfig per_run;
    StageConfig single_round;
    std::size_t stagnation_generations = 30;

    static FitConfig defaults();
    /// Key-value text ("key = value", '#' comments) applied over defaults().
    static FitConfig parse(std::istream &in);
    static FitConfig load(const std::filesystem::path &path);
    /// Every setting as canonical strings; `threads` is listed separately
    /// because it must not enter the config hash.
    std::map<std::string, std::string> resolved() const;
};

struct StageReport {
    std::string name;
    std::vector<std::string> parameters;
    LossWeights weights;
    std::uint64_t sim_seed = 0;
    std::uint64_t cma_seed = 0;
    std::size_t evaluations = 0;
    double initial_loss = 0;
    double best_loss = 0;
    /// Best-so-far loss after each generation (non-increasing).
    std::vector<double> trace;
    CmaStatus status = CmaStatus::BudgetExhausted;
    bool budget_exhausted = false;
    std::string message;
};

struct FitReport {
    std::string mode;
    NoiseModel initial;
    NoiseModel fitted;
    std::vector<StageReport> stages;
    std::vector<NoiseModel> per_run;
    std::uint64_t seed = 0;
    std::size_t total_evaluations = 0;
    /// Any stage stopped on its evaluation budget or an optimizer abort.
    bool warning = false;
    std::map<std::string, std::string> config;

    std::string to_json() const;
};

/// Three-stage calibration against multi-round data:
/// 1. leakage and seepage only, against the leakage-tail sector and the late-round fraction slope;
/// 2. three independent branches (coherence times, gate fidelities, SPAM), then
///    the subset of branch results that scores best on the Stage-3 loss is adopted;
/// 3. every parameter against the combined loss.
FitReport fit_multiround(std::span<const Dataset> runs, const Circuit &circuit, const NoiseModel &init,
                         const FitConfig &cfg);

/// Single-round fit of coherence, 1q/2q fidelity, p_init and p_readout against the
/// TVD of full output distributions. Leakage is fixed at zero.
FitReport fit_singleround(const Dataset &dataset, const Circuit &circuit, const NoiseModel &init, const FitConfig &cfg);

/// Parameter mask of a named stage ("stage1", "coherence", "gates", "spam",
/// "stage3", "per_run", "single"), restricted to what the circuit can observe.
ParamMask stage_mask(const std::string &stage, const Circuit &circuit);

/// Drops parameters that cannot influence any detector of the circuit: T2 in
/// the Z basis, 1q fidelity without 1q gates, and late data-qubit resets and
/// readout when no final data-parity detectors exist.
ParamMask observable_subset(ParamMask mask, const Circuit &circuit);

struct BaselineSelection {
    ModelKind kind = ModelKind::SI1000;
    double p = 0;
    std::vector<double> grid;
    std::vector<double> losses;
};

/// Evaluates every grid point with the same simulation seed and returns the
/// argmin (combined sector difference for multi-round, TVD for single-round);
/// ties go to the smaller p.
BaselineSelection select_baseline_p(ModelKind kind, std::span<const Dataset> runs, const Circuit &circuit,
                                    std::span<const double> grid, std::uint64_t seed, unsigned threads = 1);

}  // namespace paems
