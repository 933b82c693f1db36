#include "paems/cma_es.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "paems/errors.hpp"
#include "paems/rng.hpp"

namespace paems {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Normal {
   public:
    Normal(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

    double next() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = rng_.next_open_unit();
        double u2 = rng_.next_unit();
        double r = std::sqrt(-2 * std::log(u1));
        spare_ = r * std::sin(2 * M_PI * u2);
        has_spare_ = true;
        return r * std::cos(2 * M_PI * u2);
    }

   private:
    PhiloxStream rng_;
    double spare_ = 0;
    bool has_spare_ = false;
};

double sanitize(double f) { return std::isfinite(f) ? f : std::numeric_limits<double>::infinity(); }

std::size_t default_lambda(std::size_t n) {
    return 4 + static_cast<std::size_t>(std::floor(3 * std::log(static_cast<double>(n))));
}

}  // namespace

const char *cma_status_name(CmaStatus s) {
    switch (s) {
        case CmaStatus::BudgetExhausted:
            return "budget-exhausted";
        case CmaStatus::TargetReached:
            return "target-reached";
        case CmaStatus::Stagnated:
            return "stagnated";
        case CmaStatus::AllInfinite:
            return "all-infinite";
    }
    return "?";
}

CmaResult cma_es_batch(const BatchObjective &objective, std::span<const double> x0_span, const CmaConfig &cfg) {
    const std::size_t n = x0_span.size();
    if (n == 0) {
        throw ValidationError("CMA-ES needs at least one dimension");
    }
    if (!(cfg.sigma0 > 0)) {
        throw ValidationError("CMA-ES initial step size must be positive");
    }
    std::size_t lambda = cfg.lambda ? cfg.lambda : default_lambda(n);
    if (lambda < 2) lambda = 2;
    if (cfg.budget < lambda + 1) {
        throw ValidationError("CMA-ES budget " + std::to_string(cfg.budget) + " is smaller than one generation (" +
                              std::to_string(lambda + 1) + " evaluations)");
    }

    CmaResult res;
    res.x_best.assign(x0_span.begin(), x0_span.end());
    {
        std::vector<std::vector<double>> first{res.x_best};
        std::vector<double> f = objective(first, 0);
        res.f_best = sanitize(f.at(0));
        res.evaluations = 1;
    }
    if (res.f_best <= cfg.target) {
        res.status = CmaStatus::TargetReached;
        return res;
    }

    std::size_t generation = 0;
    Vec start = Eigen::Map<const Vec>(x0_span.data(), static_cast<Eigen::Index>(n));
    const double nd = static_cast<double>(n);
    const double chi_n = std::sqrt(nd) * (1 - 1 / (4 * nd) + 1 / (21 * nd * nd));

    for (int restart = 0;; restart++) {
        res.restarts = restart;
        const std::size_t mu = lambda / 2;
        Vec w(static_cast<Eigen::Index>(mu));
        for (std::size_t i = 0; i < mu; i++) {
            w[static_cast<Eigen::Index>(i)] = std::log(static_cast<double>(mu) + 0.5) - std::log(static_cast<double>(i + 1));
        }
        w /= w.sum();
        const double mueff = 1 / w.squaredNorm();
        const double cs = (mueff + 2) / (nd + mueff + 5);
        const double ds = 1 + 2 * std::max(0.0, std::sqrt((mueff - 1) / (nd + 1)) - 1) + cs;
        const double cc = (4 + mueff / nd) / (nd + 4 + 2 * mueff / nd);
        const double c1 = 2 / ((nd + 1.3) * (nd + 1.3) + mueff);
        const double cmu = std::min(1 - c1, 2 * (mueff - 2 + 1 / mueff) / ((nd + 2) * (nd + 2) + mueff));

        Vec mean = start;
        double sigma = cfg.sigma0;
        Mat C = Mat::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        Mat B = C;
        Vec D = Vec::Ones(static_cast<Eigen::Index>(n));
        Vec ps = Vec::Zero(static_cast<Eigen::Index>(n));
        Vec pc = Vec::Zero(static_cast<Eigen::Index>(n));
        Normal normal(cfg.seed, static_cast<std::uint64_t>(restart));

        double window_best = res.f_best;
        std::size_t window_gens = 0;
        std::size_t local_gen = 0;
        bool stagnated = false;

        while (true) {
            if (res.evaluations + lambda > cfg.budget) {
                res.status = CmaStatus::BudgetExhausted;
                res.generations = generation;
                return res;
            }
            generation++;
            local_gen++;
            std::vector<Vec> ys(lambda);
            std::vector<std::vector<double>> xs(lambda, std::vector<double>(n));
            for (std::size_t k = 0; k < lambda; k++) {
                Vec z(static_cast<Eigen::Index>(n));
                for (std::size_t i = 0; i < n; i++) z[static_cast<Eigen::Index>(i)] = normal.next();
                ys[k] = B * D.asDiagonal() * z;
                Vec x = mean + sigma * ys[k];
                for (std::size_t i = 0; i < n; i++) xs[k][i] = x[static_cast<Eigen::Index>(i)];
            }
            std::vector<double> f = objective(xs, generation);
            if (f.size() != lambda) {
                throw ValidationError("batch objective returned " + std::to_string(f.size()) + " values for " +
                                      std::to_string(lambda) + " candidates");
            }
            res.evaluations += lambda;
            bool all_inf = true;
            for (double &v : f) {
                v = sanitize(v);
                if (std::isfinite(v)) all_inf = false;
            }
            if (all_inf) {
                res.status = CmaStatus::AllInfinite;
                res.message = "every candidate of generation " + std::to_string(generation) +
                              " had a non-finite objective value";
                res.generations = generation;
                return res;
            }
            std::vector<std::size_t> order(lambda);
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return f[a] < f[b]; });
            if (f[order[0]] < res.f_best) {
                res.f_best = f[order[0]];
                res.x_best = xs[order[0]];
            }
            res.trace.push_back({generation, res.evaluations, res.f_best, f[order[0]], sigma});
            if (res.f_best <= cfg.target) {
                res.status = CmaStatus::TargetReached;
                res.generations = generation;
                return res;
            }

            Vec yw = Vec::Zero(static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < mu; i++) yw += w[static_cast<Eigen::Index>(i)] * ys[order[i]];
            mean += sigma * yw;

            Vec inv_sqrt_c_yw = B * (B.transpose() * yw).cwiseQuotient(D);
            ps = (1 - cs) * ps + std::sqrt(cs * (2 - cs) * mueff) * inv_sqrt_c_yw;
            double ps_norm = ps.norm();
            double hs_denom = std::sqrt(1 - std::pow(1 - cs, 2.0 * static_cast<double>(local_gen)));
            bool hsig = ps_norm / hs_denom < (1.4 + 2 / (nd + 1)) * chi_n;
            pc = (1 - cc) * pc + (hsig ? std::sqrt(cc * (2 - cc) * mueff) : 0.0) * yw;

            Mat rank_mu = Mat::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
            for (std::size_t i = 0; i < mu; i++) {
                const Vec &y = ys[order[i]];
                rank_mu += w[static_cast<Eigen::Index>(i)] * y * y.transpose();
            }
            double delta_h = hsig ? 0.0 : cc * (2 - cc);
            C = (1 - c1 - cmu) * C + c1 * (pc * pc.transpose() + delta_h * C) + cmu * rank_mu;
            sigma *= std::exp((cs / ds) * (ps_norm / chi_n - 1));

            C = 0.5 * (C + C.transpose());
            Eigen::SelfAdjointEigenSolver<Mat> eig(C);
            Vec ev = eig.eigenvalues();
            double floor = std::max(1e-300, ev.maxCoeff() * 1e-14);
            bool repaired = false;
            for (Eigen::Index i = 0; i < ev.size(); i++) {
                if (!(ev[i] > floor)) {
                    ev[i] = floor;
                    repaired = true;
                }
            }
            B = eig.eigenvectors();
            D = ev.cwiseSqrt();
            if (repaired) C = B * ev.asDiagonal() * B.transpose();

            if (window_best - res.f_best > cfg.stagnation_tol * std::abs(window_best)) {
                window_best = res.f_best;
                window_gens = 0;
            } else if (++window_gens >= cfg.stagnation_generations) {
                stagnated = true;
            }
            bool collapsed = sigma * D.maxCoeff() < 1e-15 * (1 + mean.cwiseAbs().maxCoeff()) || !std::isfinite(sigma);
            if (stagnated || collapsed) break;
        }

        if (restart >= cfg.max_restarts) {
            res.status = CmaStatus::Stagnated;
            res.generations = generation;
            return res;
        }
        lambda *= 2;
        if (res.evaluations + lambda > cfg.budget) {
            res.status = CmaStatus::BudgetExhausted;
            res.generations = generation;
            return res;
        }
        start = Eigen::Map<const Vec>(res.x_best.data(), static_cast<Eigen::Index>(n));
    }
}

CmaResult cma_es(const ScalarObjective &objective, std::span<const double> x0, const CmaConfig &cfg) {
    unsigned threads = std::max(1u, cfg.threads);
    BatchObjective batch = [&](const std::vector<std::vector<double>> &xs, std::size_t) {
        std::vector<double> f(xs.size());
        unsigned t = static_cast<unsigned>(std::min<std::size_t>(threads, xs.size()));
        if (t <= 1) {
            for (std::size_t k = 0; k < xs.size(); k++) f[k] = objective(xs[k]);
            return f;
        }
        std::vector<std::thread> pool;
        std::vector<std::exception_ptr> errors(t);
        for (unsigned i = 0; i < t; i++) {
            pool.emplace_back([&, i] {
                try {
                    for (std::size_t k = i; k < xs.size(); k += t) f[k] = objective(xs[k]);
                } catch (...) {
                    errors[i] = std::current_exception();
                }
            });
        }
        for (auto &th : pool) th.join();
        for (auto &e : errors) {
            if (e) std::rethrow_exception(e);
        }
        return f;
    };
    return cma_es_batch(batch, x0, cfg);
}

}  // namespace paems
