#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace paems {

struct CmaConfig {
    double sigma0 = 0.3;
    /// Maximum objective evaluations, including the initial point.
    std::size_t budget = 1000;
    std::uint64_t seed = 0;
    /// 0 selects 4 + floor(3 ln dim).
    std::size_t lambda = 0;
    /// Restart (with doubled population) after this many generations whose
    /// best-so-far improved by no more than stagnation_tol relative.
    std::size_t stagnation_generations = 30;
    double stagnation_tol = 1e-9;
    int max_restarts = 1;
    /// Stop as soon as the best value drops to this.
    double target = -std::numeric_limits<double>::infinity();
    /// Workers for the per-generation evaluation of a scalar objective.
    unsigned threads = 1;
};

struct CmaTraceEntry {
    std::size_t generation = 0;
    std::size_t evaluations = 0;
    double best = 0;
    double generation_best = 0;
    double sigma = 0;
};

enum class CmaStatus : std::uint8_t { BudgetExhausted, TargetReached, Stagnated, AllInfinite };
const char *cma_status_name(CmaStatus s);

struct CmaResult {
    std::vector<double> x_best;
    double f_best = std::numeric_limits<double>::infinity();
    std::size_t evaluations = 0;
    std::size_t generations = 0;
    int restarts = 0;
    CmaStatus status = CmaStatus::BudgetExhausted;
    std::string message;
    std::vector<CmaTraceEntry> trace;
};

using ScalarObjective = std::function<double(std::span<const double>)>;
/// Evaluates a whole generation at once; `generation` is 0 for the initial point.
using BatchObjective =
    std::function<std::vector<double>(const std::vector<std::vector<double>> &candidates, std::size_t generation)>;

/// (mu/mu_w, lambda)-CMA-ES with rank-one and rank-mu covariance updates and
/// cumulative step-size adaptation. Returns the best point ever evaluated.
/// Non-finite objective values are treated as +inf. Deterministic given the
/// seed; thread count only changes wall time.
CmaResult cma_es(const ScalarObjective &objective, std::span<const double> x0, const CmaConfig &cfg);
CmaResult cma_es_batch(const BatchObjective &objective, std::span<const double> x0, const CmaConfig &cfg);

}  // namespace paems
