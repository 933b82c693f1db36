#include "paems/fitter.hpp"

#include <algorithm>
#include <exception>
#include <fstream>
#include <istream>
#include <json.hpp>
#include <limits>
#include <thread>

#include "numeric.hpp"
#include "paems/errors.hpp"
#include "paems/io.hpp"
#include "paems/rng.hpp"
#include "paems/sampler.hpp"
#include "text_util.hpp"

namespace paems {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Tags that decorrelate the seeds of the individual fit stages.
enum SeedTag : std::uint64_t {
    kTagStage1 = 1,
    kTagCoherence = 2,
    kTagGates = 3,
    kTagSpam = 4,
    kTagStage3 = 5,
    kTagPerRun = 6,
    kTagSingle = 7,
    kTagMerge = 8,
    kTagOptimizer = 1000,
};

template <typename Q>
auto &qubit_field(Q &q, Param p) {
    switch (p) {
        case Param::T1:
            return q.t1_us;
        case Param::T2:
            return q.t2_us;
        case Param::F1q:
            return q.f1q;
        case Param::PInit:
            return q.p_init;
        case Param::PReset:
            return q.p_reset;
        case Param::PReadout:
            return q.p_readout;
        case Param::PLeak:
            return q.p_leak;
        case Param::PSeep:
            return q.p_seep;
    }
    return q.t1_us;
}

/// Copies the mask-selected parameters of `src` into `dst` exactly.
void copy_masked(NoiseModel &dst, const NoiseModel &src, const ParamMask &mask) {
    for (std::uint32_t q = 0; q < dst.qubits.size(); q++) {
        for (std::size_t k = 0; k < kNumQubitParams; k++) {
            auto p = static_cast<Param>(k);
            if (mask.selects(p, q)) qubit_field(dst.qubits[q], p) = qubit_field(src.qubits[q], p);
        }
    }
    if (mask.f2q) {
        for (std::size_t c = 0; c < dst.couplers.size(); c++) dst.couplers[c].f2q = src.couplers[c].f2q;
    }
}

/// Evaluates fn(i) for i in [0, n) over `threads` workers, rethrowing the first failure.
template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn fn) {
    unsigned t = static_cast<unsigned>(std::min<std::size_t>(std::max(1u, threads), n));
    if (t <= 1) {
        for (std::size_t i = 0; i < n; i++) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    for (unsigned w = 0; w < t; w++) {
        pool.emplace_back([&, w] {
            try {
                for (std::size_t i = w; i < n; i += t) fn(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto &th : pool) th.join();
    for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

double mean_abs_gap(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw ValidationError("statistic vectors differ in length");
    if (a.empty()) return 0;
    CompensatedSum s;
    for (std::size_t i = 0; i < a.size(); i++) s.add(std::abs(a[i] - b[i]));
    return s.value() / static_cast<double>(a.size());
}

using ModelLoss = std::function<double(const NoiseModel &)>;

struct StageOutcome {
    NoiseModel model;
    StageReport report;
};

StageOutcome run_stage(const std::string &name, const NoiseModel &base, const ParamMask &mask, const StageConfig &sc,
                       std::uint64_t sim_seed, std::uint64_t cma_seed, const FitConfig &cfg, const ModelLoss &loss) {
    StageOutcome out{base, {}};
    StageReport &rep = out.report;
    rep.name = name;
    rep.parameters = parameter_names(base, mask);
    rep.weights = sc.weights;
    rep.sim_seed = sim_seed;
    rep.cma_seed = cma_seed;
    std::vector<double> x0 = parameter_vector(base, mask);
    if (x0.empty()) {
        rep.initial_loss = rep.best_loss = loss(base);
        rep.evaluations = 1;
        rep.status = CmaStatus::Stagnated;
        rep.message = "empty parameter mask";
        return out;
    }
    auto eval = [&](std::span<const double> x) {
        try {
            return loss(apply_vector(base, mask, x));
        } catch (const ValidationError &) {
            return kInf;
        }
    };
    BatchObjective batch = [&](const std::vector<std::vector<double>> &xs, std::size_t generation) {
        std::vector<double> f(xs.size());
        parallel_for(xs.size(), cfg.threads, [&](std::size_t i) { f[i] = eval(xs[i]); });
        if (generation == 0) rep.initial_loss = f[0];
        return f;
    };
    CmaConfig cc;
    cc.sigma0 = sc.sigma0;
    cc.budget = sc.budget;
    cc.seed = cma_seed;
    cc.lambda = sc.lambda;
    cc.stagnation_generations = cfg.stagnation_generations;
    CmaResult res = cma_es_batch(batch, x0, cc);
    out.model = apply_vector(base, mask, res.x_best);
    rep.best_loss = res.f_best;
    rep.evaluations = res.evaluations;
    rep.status = res.status;
    rep.message = res.message;
    rep.budget_exhausted = res.status == CmaStatus::BudgetExhausted;
    rep.trace.reserve(res.trace.size() + 1);
    rep.trace.push_back(rep.initial_loss);
    for (const CmaTraceEntry &t : res.trace) rep.trace.push_back(t.best);
    return out;
}

nlohmann::json weights_json(const LossWeights &w) {
    return {{"time", w.time},         {"space", w.space},   {"spacetime", w.spacetime},
            {"leak", w.leak},         {"fraction", w.fraction}, {"fraction_slope", w.fraction_slope},
            {"round1", w.round1}};
}

nlohmann::json finite_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string join_ints(const std::vector<int> &v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); i++) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

bool has_final_detectors(const Circuit &circuit) {
    return std::any_of(circuit.detectors().begin(), circuit.detectors().end(),
                       [](const DetectorId &d) { return d.is_final; });
}

}  // namespace

bool LossWeights::any() const {
    return time > 0 || space > 0 || spacetime > 0 || leak > 0 || fraction > 0 || fraction_slope > 0 || round1 > 0;
}

double LossTerms::weighted(const LossWeights &w) const {
    return w.time * timelike + w.space * spacelike + w.spacetime * spacetime + w.leak * leakage_tail +
           w.fraction * fraction_rms + w.fraction_slope * fraction_slope + w.round1 * round1;
}

MultiroundStats multiround_stats(std::span<const Dataset> runs, const Circuit &circuit, CorrelationScope scope) {
    if (runs.empty()) throw ValidationError("no runs to analyse");
    MultiroundStats st;
    st.n_runs = runs.size();
    st.run_shots = runs[0].n_shots();
    std::vector<CorrelationReport> reports;
    reports.reserve(runs.size());
    std::vector<double> fired;
    std::size_t total_shots = 0;
    for (const Dataset &run : runs) {
        DetectionTensor t = extract_detections(run, circuit);
        reports.push_back(correlation_matrix(t, scope));
        std::vector<double> f = detection_fraction(t);
        if (fired.empty()) fired.assign(f.size(), 0.0);
        for (std::size_t r = 0; r < f.size(); r++) fired[r] += f[r] * static_cast<double>(run.n_shots());
        total_shots += run.n_shots();
    }
    st.correlations = average_reports(reports);
    st.fraction = fired;
    for (double &v : st.fraction) v /= static_cast<double>(total_shots);
    for (std::size_t i = 0; i < st.correlations.n_detectors(); i++) {
        const DetectorId &d = st.correlations.detectors[i];
        if (d.round == 1 && !d.is_final) st.round1.push_back(st.correlations.at(i, i));
    }
    return st;
}

double late_fraction_slope(std::span<const double> fraction) {
    std::size_t n = fraction.size();
    std::size_t start = n / 2;
    std::size_t m = n - start;
    if (m < 2) return 0;
    double mx = 0, my = 0;
    for (std::size_t i = start; i < n; i++) {
        mx += static_cast<double>(i);
        my += fraction[i];
    }
    mx /= static_cast<double>(m);
    my /= static_cast<double>(m);
    double sxy = 0, sxx = 0;
    for (std::size_t i = start; i < n; i++) {
        double dx = static_cast<double>(i) - mx;
        sxy += dx * (fraction[i] - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

LossTerms compare_stats(const MultiroundStats &model, const MultiroundStats &target) {
    LossTerms t;
    SectorDiff d = sector_difference(model.correlations, target.correlations);
    t.timelike = d.timelike();
    t.spacelike = d.spacelike();
    t.spacetime = d.spacetime();
    t.leakage_tail = d.leakage_tail();
    t.fraction_rms = rms_difference(model.fraction, target.fraction);
    std::size_t late = model.fraction.size() - model.fraction.size() / 2;
    t.fraction_slope =
        std::abs(late_fraction_slope(model.fraction) - late_fraction_slope(target.fraction)) * static_cast<double>(late);
    t.round1 = mean_abs_gap(model.round1, target.round1);
    return t;
}

std::vector<Dataset> simulate_runs(const Circuit &circuit, const NoiseModel &model, std::size_t n_runs,
                                   std::size_t run_shots, std::uint64_t seed, unsigned threads) {
    SamplerConfig sc;
    sc.shots = n_runs * run_shots;
    sc.master_seed = seed;
    sc.threads = threads;
    Dataset all = sample(circuit, compile_schedule(circuit, model), sc);
    std::vector<Dataset> runs;
    runs.reserve(n_runs);
    for (std::size_t r = 0; r < n_runs; r++) runs.push_back(all.slice(r * run_shots, run_shots));
    return runs;
}

// Configuration ---------------------------------------------------------------

FitConfig FitConfig::defaults() {
    FitConfig c;
    // Budgets and simulation sizes tuned on a 21-qubit, 30-round synthetic
    // recovery (about 10 min single-threaded). The partial stages run on 10
    // simulated runs; Stage 3 matches the target.
    c.stage1.budget = 800;
    c.stage1.sigma0 = 1.0;
    c.stage1.sim_runs = 10;
    c.stage1.weights.leak = 1;
    c.stage1.weights.fraction_slope = 1;

    c.coherence.budget = 500;
    c.coherence.sigma0 = 0.3;
    c.coherence.sim_runs = 10;
    c.coherence.weights.time = 1;
    c.coherence.weights.space = 1;
    c.coherence.weights.spacetime = 1;
    c.coherence.weights.fraction = 0.1;

    c.gates.budget = 300;
    c.gates.sigma0 = 0.3;
    c.gates.sim_runs = 10;
    c.gates.weights.space = 1;
    c.gates.weights.spacetime = 1;

    c.spam.budget = 500;
    c.spam.sigma0 = 0.3;
    c.spam.sim_runs = 10;
    c.spam.weights.time = 1;
    c.spam.weights.round1 = 1;

    c.stage3.budget = 800;
    c.stage3.sigma0 = 0.15;
    c.stage3.weights = {1, 1, 1, 1, 0.5, 0, 0};

    c.per_run.budget = 100;
    c.per_run.sigma0 = 0.05;
    c.per_run.weights = {1, 1, 1, 1, 0.5, 0, 0};

    c.single_round.budget = 1500;
    c.single_round.sigma0 = 0.3;
    return c;
}

namespace {

struct StageKeys {
    const char *prefix;
    StageConfig FitConfig::*member;
};

const StageKeys kStageKeys[] = {
    {"stage1", &FitConfig::stage1},   {"coherence", &FitConfig::coherence}, {"gates", &FitConfig::gates},
    {"spam", &FitConfig::spam},       {"stage3", &FitConfig::stage3},       {"per_run", &FitConfig::per_run},
    {"single", &FitConfig::single_round},
};

const std::pair<const char *, double LossWeights::*> kWeightKeys[] = {
    {"w_time", &LossWeights::time},         {"w_space", &LossWeights::space},
    {"w_spacetime", &LossWeights::spacetime}, {"w_leak", &LossWeights::leak},
    {"w_fraction", &LossWeights::fraction}, {"w_fraction_slope", &LossWeights::fraction_slope},
    {"w_round1", &LossWeights::round1},
};

bool parse_bool(std::string_view v, const std::string &key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ValidationError("fit config: " + key + " must be true or false");
}

void set_stage_key(StageConfig &sc, std::string_view field, std::string_view value, const std::string &key) {
    if (field == "budget") {
        sc.budget = parse_uint(value, key.c_str());
    } else if (field == "sigma0") {
        sc.sigma0 = parse_double(value, key.c_str());
        if (!(sc.sigma0 > 0) || std::isinf(sc.sigma0)) throw ValidationError("fit config: " + key + " must be positive");
    } else if (field == "lambda") {
        sc.lambda = parse_uint(value, key.c_str());
    } else if (field == "sim_runs") {
        sc.sim_runs = parse_uint(value, key.c_str());
    } else {
        for (auto [name, member] : kWeightKeys) {
            if (field == name) {
                double w = parse_double(value, key.c_str());
                if (!(w >= 0) || std::isinf(w)) throw ValidationError("fit config: " + key + " must be >= 0");
                sc.weights.*member = w;
                return;
            }
        }
        throw ValidationError("fit config: unknown key '" + key + "'");
    }
}

}  // namespace

FitConfig FitConfig::parse(std::istream &in) {
    FitConfig c = defaults();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        line_no++;
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto eq = t.find('=');
        if (eq == std::string_view::npos) {
            throw ValidationError("fit config line " + std::to_string(line_no) + ": expected 'key = value'");
        }
        std::string key(trim(t.substr(0, eq)));
        std::string_view value = trim(t.substr(eq + 1));
        if (key == "seed") {
            c.seed = parse_uint(value, "seed");
        } else if (key == "threads") {
            c.threads = static_cast<unsigned>(parse_uint(value, "threads"));
        } else if (key == "stages") {
            c.stages.clear();
            for (auto s : split(value, ',')) {
                auto v = parse_uint(s, "stage");
                if (v < 1 || v > 3) throw ValidationError("fit config: stages must be drawn from 1,2,3");
                c.stages.push_back(static_cast<int>(v));
            }
        } else if (key == "initial_leak") {
            c.initial_leak = parse_double(value, "initial_leak");
        } else if (key == "initial_seep") {
            c.initial_seep = parse_double(value, "initial_seep");
        } else if (key == "per_run_refine") {
            c.per_run_refine = parse_bool(value, key);
        } else if (key == "stagnation_generations") {
            c.stagnation_generations = parse_uint(value, key.c_str());
        } else {
            auto dot = key.find('.');
            bool matched = false;
            if (dot != std::string::npos) {
                std::string prefix = key.substr(0, dot);
                for (const StageKeys &sk : kStageKeys) {
                    if (prefix == sk.prefix) {
                        set_stage_key(c.*(sk.member), std::string_view(key).substr(dot + 1), value, key);
                        matched = true;
                    }
                }
            }
            if (!matched) throw ValidationError("fit config: unknown key '" + key + "'");
        }
    }
    if (!(c.initial_leak > 0 && c.initial_leak < 1) || !(c.initial_seep > 0 && c.initial_seep < 1)) {
        throw ValidationError("fit config: initial_leak and initial_seep must lie in (0, 1)");
    }
    return c;
}

FitConfig FitConfig::load(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return parse(in);
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

std::map<std::string, std::string> FitConfig::resolved() const {
    std::map<std::string, std::string> m;
    m["seed"] = std::to_string(seed);
    m["stages"] = join_ints(stages);
    m["initial_leak"] = format_double(initial_leak);
    m["initial_seep"] = format_double(initial_seep);
    m["per_run_refine"] = per_run_refine ? "true" : "false";
    m["stagnation_generations"] = std::to_string(stagnation_generations);
    for (const StageKeys &sk : kStageKeys) {
        const StageConfig &sc = this->*(sk.member);
        std::string p = std::string(sk.prefix) + ".";
        m[p + "budget"] = std::to_string(sc.budget);
        m[p + "sigma0"] = format_double(sc.sigma0);
        m[p + "lambda"] = std::to_string(sc.lambda);
        m[p + "sim_runs"] = std::to_string(sc.sim_runs);
        for (auto [name, member] : kWeightKeys) m[p + name] = format_double(sc.weights.*member);
    }
    return m;
}

// Fitting -------------------------------------------------------------------

ParamMask stage_mask(const std::string &stage, const Circuit &circuit) {
    ParamMask m;
    if (stage == "stage1") {
        m.set(Param::PLeak, QubitSelect::All).set(Param::PSeep, QubitSelect::All);
    } else if (stage == "coherence") {
        m.set(Param::T1, QubitSelect::All).set(Param::T2, QubitSelect::All);
    } else if (stage == "gates") {
        m.set(Param::F1q, QubitSelect::All);
        m.f2q = true;
    } else if (stage == "spam") {
        m.set(Param::PInit, QubitSelect::All).set(Param::PReset, QubitSelect::All).set(Param::PReadout, QubitSelect::All);
    } else if (stage == "stage3" || stage == "per_run") {
        m = ParamMask::full();
    } else if (stage == "single") {
        m.set(Param::T1, QubitSelect::All)
            .set(Param::T2, QubitSelect::All)
            .set(Param::F1q, QubitSelect::All)
            .set(Param::PInit, QubitSelect::All)
            .set(Param::PReadout, QubitSelect::All);
        m.f2q = true;
    } else {
        throw ValidationError("unknown fit stage '" + stage + "'");
    }
    return observable_subset(m, circuit);
}

ParamMask observable_subset(ParamMask mask, const Circuit &circuit) {
    bool has_h = false;
    for (const Layer &layer : circuit.layers()) {
        for (const Operation &op : layer.operations) has_h = has_h || op.kind == OpKind::Hadamard;
    }
    // Z-basis circuits never turn phase errors into detectable bit flips.
    if (circuit.basis() == Basis::Z) mask.set(Param::T2, QubitSelect::None);
    if (!has_h) mask.set(Param::F1q, QubitSelect::None);
    // Data readout and data resets after preparation only reach detectors
    // through the final data measurement.
    if (circuit.rounds() > 1 && !has_final_detectors(circuit)) {
        for (Param p : {Param::PReset, Param::PReadout}) {
            if (mask.get(p) == QubitSelect::All) mask.set(p, QubitSelect::Ancilla);
            if (mask.get(p) == QubitSelect::Data) mask.set(p, QubitSelect::None);
        }
    }
    return mask;
}

FitReport fit_multiround(std::span<const Dataset> runs, const Circuit &circuit, const NoiseModel &init,
                         const FitConfig &cfg) {
    if (init.kind != ModelKind::PAEMS) throw ValidationError("fits start from a PAEMS model");
    init.validate_for(circuit);
    // Parameters of qubits outside the circuit would be free dimensions with no effect on the loss.
    if (init.qubits.size() != circuit.n_qubits()) {
        throw ValidationError("initial model has " + std::to_string(init.qubits.size()) + " qubits, circuit has " +
                              std::to_string(circuit.n_qubits()));
    }
    if (runs.empty()) throw ValidationError("fit needs at least one run");
    for (const Dataset &r : runs) {
        if (r.n_measurements() != circuit.n_measurements()) {
            throw ValidationError("dataset does not match the circuit's measurement layout");
        }
        if (r.n_shots() != runs[0].n_shots()) throw ValidationError("all runs must have the same shot count");
    }
    const std::size_t run_shots = runs[0].n_shots();
    const MultiroundStats target = multiround_stats(runs, circuit, CorrelationScope::Sectors);

    FitReport report;
    report.mode = "multiround";
    report.initial = init;
    report.seed = cfg.seed;
    report.config = cfg.resolved();

    auto make_loss = [&](const StageConfig &sc, const MultiroundStats &tgt, std::size_t default_runs,
                         std::uint64_t sim_seed) -> ModelLoss {
        std::size_t n_runs = sc.sim_runs ? sc.sim_runs : default_runs;
        LossWeights w = sc.weights;
        if (!w.any()) throw ValidationError("every fit stage needs at least one positive loss weight");
        return [&circuit, &tgt, n_runs, run_shots, sim_seed, w](const NoiseModel &m) {
            std::vector<Dataset> sim = simulate_runs(circuit, m, n_runs, run_shots, sim_seed);
            return compare_stats(multiround_stats(sim, circuit, CorrelationScope::Sectors), tgt).weighted(w);
        };
    };
    auto seeds = [&](std::uint64_t tag) {
        return std::pair{derive_seed(cfg.seed, tag), derive_seed(cfg.seed, kTagOptimizer + tag)};
    };
    auto record = [&](StageOutcome &&o) {
        report.total_evaluations += o.report.evaluations;
        if (o.report.budget_exhausted || o.report.status == CmaStatus::AllInfinite) report.warning = true;
        report.stages.push_back(std::move(o.report));
        return std::move(o.model);
    };
    auto wants = [&](int s) { return std::find(cfg.stages.begin(), cfg.stages.end(), s) != cfg.stages.end(); };

    NoiseModel model = init;
    if (wants(1)) {
        ParamMask mask = stage_mask("stage1", circuit);
        for (QubitParams &q : model.qubits) {
            if (q.p_leak <= kProbabilityFloor) q.p_leak = cfg.initial_leak;
            if (q.p_seep <= kProbabilityFloor) q.p_seep = cfg.initial_seep;
        }
        auto [sim_seed, cma_seed] = seeds(kTagStage1);
        model = record(run_stage("stage1", model, mask, cfg.stage1, sim_seed, cma_seed, cfg,
                                 make_loss(cfg.stage1, target, runs.size(), sim_seed)));
    }
    if (wants(2)) {
        const std::tuple<const char *, const StageConfig *, std::uint64_t> branches[] = {
            {"coherence", &cfg.coherence, kTagCoherence},
            {"gates", &cfg.gates, kTagGates},
            {"spam", &cfg.spam, kTagSpam},
        };
        std::vector<std::pair<NoiseModel, ParamMask>> fitted_branches;
        for (auto [name, sc, tag] : branches) {
            ParamMask mask = stage_mask(name, circuit);
            auto [sim_seed, cma_seed] = seeds(tag);
            NoiseModel branch = record(run_stage(std::string("stage2.") + name, model, mask, *sc, sim_seed, cma_seed,
                                                 cfg, make_loss(*sc, target, runs.size(), sim_seed)));
            fitted_branches.emplace_back(std::move(branch), mask);
        }
        // Branches fitted in isolation can each absorb the same discrepancy
        // (e.g. readout error and T1 both raise timelike correlations), so
        // adopting all of them can overshoot. Every subset of branch results
        // is scored on the global loss; the full merge wins ties.
        auto [merge_seed, unused] = seeds(kTagMerge);
        (void)unused;
        ModelLoss merge_loss = make_loss(cfg.stage3, target, runs.size(), merge_seed);
        const std::size_t n_subsets = std::size_t{1} << fitted_branches.size();
        std::vector<NoiseModel> candidates(n_subsets, model);
        std::vector<double> losses(n_subsets, kInf);
        for (std::size_t bits = 0; bits < n_subsets; bits++) {
            for (std::size_t k = 0; k < fitted_branches.size(); k++) {
                if (bits & (std::size_t{1} << k)) {
                    copy_masked(candidates[bits], fitted_branches[k].first, fitted_branches[k].second);
                }
            }
        }
        parallel_for(n_subsets, cfg.threads, [&](std::size_t i) { losses[i] = merge_loss(candidates[i]); });
        std::size_t best = n_subsets - 1;
        for (std::size_t i = n_subsets - 1; i-- > 0;) {
            if (losses[i] < losses[best]) best = i;
        }
        StageReport merge;
        merge.name = "stage2.merge";
        for (std::size_t k = 0; k < fitted_branches.size(); k++) {
            if (best & (std::size_t{1} << k)) merge.parameters.push_back(std::get<0>(branches[k]));
        }
        merge.weights = cfg.stage3.weights;
        merge.sim_seed = merge_seed;
        merge.evaluations = n_subsets;
        merge.initial_loss = losses[n_subsets - 1];
        merge.best_loss = losses[best];
        double running = kInf;
        for (std::size_t i = n_subsets; i-- > 0;) {
            running = std::min(running, losses[i]);
            merge.trace.push_back(running);
        }
        merge.status = CmaStatus::Stagnated;
        merge.message = "adopted branch subset scored on the global loss";
        report.total_evaluations += n_subsets;
        report.stages.push_back(std::move(merge));
        model = candidates[best];
    }
    if (wants(3)) {
        auto [sim_seed, cma_seed] = seeds(kTagStage3);
        model = record(run_stage("stage3", model, stage_mask("stage3", circuit), cfg.stage3, sim_seed, cma_seed, cfg,
                                 make_loss(cfg.stage3, target, runs.size(), sim_seed)));
    }
    report.fitted = model;

    if (cfg.per_run_refine) {
        for (std::size_t r = 0; r < runs.size(); r++) {
            const MultiroundStats run_target = multiround_stats(runs.subspan(r, 1), circuit, CorrelationScope::Sectors);
            auto [sim_seed, cma_seed] = seeds(kTagPerRun + 16 * (r + 1));
            StageOutcome o = run_stage("per_run." + std::to_string(r), model, stage_mask("per_run", circuit),
                                       cfg.per_run, sim_seed, cma_seed, cfg,
                                       make_loss(cfg.per_run, run_target, 1, sim_seed));
            report.per_run.push_back(record(std::move(o)));
        }
    }
    return report;
}

FitReport fit_singleround(const Dataset &dataset, const Circuit &circuit, const NoiseModel &init,
                          const FitConfig &cfg) {
    if (circuit.rounds() != 1) throw ValidationError("single-round fitting needs a 1-round circuit");
    if (init.kind != ModelKind::PAEMS) throw ValidationError("fits start from a PAEMS model");
    init.validate_for(circuit);
    // Parameters of qubits outside the circuit would be free dimensions with no effect on the loss.
    if (init.qubits.size() != circuit.n_qubits()) {
        throw ValidationError("initial model has " + std::to_string(init.qubits.size()) + " qubits, circuit has " +
                              std::to_string(circuit.n_qubits()));
    }
    if (dataset.n_measurements() != circuit.n_measurements()) {
        throw ValidationError("dataset does not match the circuit's measurement layout");
    }
    if (!cfg.single_round.sim_runs && dataset.n_shots() == 0) throw ValidationError("empty dataset");
    const StateDistribution target = state_distribution(dataset);
    const std::size_t shots = dataset.n_shots() * std::max<std::size_t>(1, cfg.single_round.sim_runs);

    FitReport report;
    report.mode = "singleround";
    report.initial = init;
    report.seed = cfg.seed;
    report.config = cfg.resolved();

    NoiseModel model = init;
    for (QubitParams &q : model.qubits) {
        q.p_leak = 0;
        q.p_seep = 0;
    }
    const std::uint64_t sim_seed = derive_seed(cfg.seed, kTagSingle);
    ModelLoss loss = [&](const NoiseModel &m) {
        SamplerConfig sc;
        sc.shots = shots;
        sc.master_seed = sim_seed;
        return tvd(state_distribution(sample(circuit, compile_schedule(circuit, m), sc)), target);
    };
    StageOutcome o = run_stage("single", model, stage_mask("single", circuit), cfg.single_round, sim_seed,
                               derive_seed(cfg.seed, kTagOptimizer + kTagSingle), cfg, loss);
    report.total_evaluations = o.report.evaluations;
    report.warning = o.report.budget_exhausted || o.report.status == CmaStatus::AllInfinite;
    report.fitted = o.model;
    report.stages.push_back(std::move(o.report));
    return report;
}

BaselineSelection select_baseline_p(ModelKind kind, std::span<const Dataset> runs, const Circuit &circuit,
                                    std::span<const double> grid, std::uint64_t seed, unsigned threads) {
    if (grid.empty()) throw ValidationError("baseline p grid is empty");
    if (runs.empty()) throw ValidationError("no target data");
    BaselineSelection sel;
    sel.kind = kind;
    sel.grid.assign(grid.begin(), grid.end());
    std::sort(sel.grid.begin(), sel.grid.end());
    sel.losses.assign(sel.grid.size(), kInf);
    const std::size_t run_shots = runs[0].n_shots();
    if (circuit.rounds() > 1) {
        const MultiroundStats target = multiround_stats(runs, circuit, CorrelationScope::Sectors);
        parallel_for(sel.grid.size(), threads, [&](std::size_t i) {
            NoiseModel m = NoiseModel::baseline(kind, sel.grid[i]);
            auto sim = simulate_runs(circuit, m, runs.size(), run_shots, seed);
            sel.losses[i] = compare_stats(multiround_stats(sim, circuit, CorrelationScope::Sectors), target).combined();
        });
    } else {
        Dataset pooled = runs.size() == 1 ? runs[0] : Dataset::concat(runs);
        const StateDistribution target = state_distribution(pooled);
        parallel_for(sel.grid.size(), threads, [&](std::size_t i) {
            SamplerConfig sc;
            sc.shots = pooled.n_shots();
            sc.master_seed = seed;
            NoiseModel m = NoiseModel::baseline(kind, sel.grid[i]);
            sel.losses[i] = tvd(state_distribution(sample(circuit, compile_schedule(circuit, m), sc)), target);
        });
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < sel.grid.size(); i++) {
        if (sel.losses[i] < sel.losses[best]) best = i;
    }
    sel.p = sel.grid[best];
    return sel;
}

std::string FitReport::to_json() const {
    nlohmann::json j;
    j["mode"] = mode;
    j["seed"] = seed;
    j["total_evaluations"] = total_evaluations;
    j["warning"] = warning;
    j["initial_model"] = model_to_string(initial);
    j["fitted_model"] = model_to_string(fitted);
    nlohmann::json stages_j = nlohmann::json::array();
    for (const StageReport &s : stages) {
        nlohmann::json sj;
        sj["name"] = s.name;
        sj["parameters"] = s.parameters;
        sj["weights"] = weights_json(s.weights);
        sj["sim_seed"] = s.sim_seed;
        sj["optimizer_seed"] = s.cma_seed;
        sj["evaluations"] = s.evaluations;
        sj["initial_loss"] = finite_or_null(s.initial_loss);
        sj["best_loss"] = finite_or_null(s.best_loss);
        nlohmann::json trace = nlohmann::json::array();
        for (double v : s.trace) trace.push_back(finite_or_null(v));
        sj["trace"] = trace;
        sj["status"] = cma_status_name(s.status);
        sj["budget_exhausted"] = s.budget_exhausted;
        if (!s.message.empty()) sj["message"] = s.message;
        stages_j.push_back(sj);
    }
    j["stages"] = stages_j;
    nlohmann::json per_run_j = nlohmann::json::array();
    for (const NoiseModel &m : per_run) per_run_j.push_back(model_to_string(m));
    j["per_run_models"] = per_run_j;
    j["config"] = config;
    return j.dump(2) + "\n";
}

}  // namespace paems
