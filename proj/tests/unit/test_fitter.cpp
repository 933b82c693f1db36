#include <gtest/gtest.h>

#include <sstream>

#include "paems/errors.hpp"
#include "paems/fitter.hpp"
#include "paems/sampler.hpp"

using namespace paems;

namespace {

NoiseModel small_truth(std::uint32_t n) {
    NoiseModel m = NoiseModel::uniform(n, QubitParams{}, 0.985);
    for (std::uint32_t q = 0; q < n; q++) {
        QubitParams &p = m.qubits[q];
        p.t1_us = 15 + 5 * q;
        p.t2_us = 12 + 3 * q;
        p.f1q = 0.999;
        p.p_init = 0.01;
        p.p_reset = 0.015;
        p.p_readout = 0.02;
        p.p_leak = q == 3 ? 4e-3 : 0;
        p.p_seep = 0.05;
    }
    return m;
}

FitConfig small_config() {
    FitConfig cfg = FitConfig::defaults();
    cfg.seed = 11;
    for (StageConfig *s : {&cfg.stage1, &cfg.coherence, &cfg.gates, &cfg.spam, &cfg.stage3}) s->budget = 60;
    return cfg;
}

double held_out_loss(const NoiseModel &m, const Circuit &c, const MultiroundStats &target) {
    std::vector<Dataset> sim = simulate_runs(c, m, 4, 2048, 777);
    return compare_stats(multiround_stats(sim, c), target).weighted(FitConfig::defaults().stage3.weights);
}

}  // namespace

TEST(StageMask, PrunesUnobservableParameters) {
    Circuit z = build_repetition_code(5, 4, Basis::Z, GateTimingTable{});
    Circuit x = build_repetition_code(5, 4, Basis::X, GateTimingTable{});
    Circuit xf = build_repetition_code(5, 4, Basis::X, GateTimingTable{}, {.final_detectors = true});

    ParamMask coh_z = stage_mask("coherence", z);
    EXPECT_EQ(coh_z.get(Param::T1), QubitSelect::All);
    EXPECT_EQ(coh_z.get(Param::T2), QubitSelect::None);
    EXPECT_EQ(stage_mask("coherence", x).get(Param::T2), QubitSelect::All);

    // The Z-basis chain has no Hadamards, so single-qubit fidelities are invisible.
    EXPECT_EQ(stage_mask("gates", z).get(Param::F1q), QubitSelect::None);
    EXPECT_TRUE(stage_mask("gates", z).f2q);
    EXPECT_EQ(stage_mask("gates", x).get(Param::F1q), QubitSelect::All);

    ParamMask spam_x = stage_mask("spam", x);
    EXPECT_EQ(spam_x.get(Param::PInit), QubitSelect::All);
    EXPECT_EQ(spam_x.get(Param::PReadout), QubitSelect::Ancilla);
    EXPECT_EQ(spam_x.get(Param::PReset), QubitSelect::Ancilla);
    EXPECT_EQ(stage_mask("spam", xf).get(Param::PReadout), QubitSelect::All);

    ParamMask s1 = stage_mask("stage1", z);
    EXPECT_EQ(s1.get(Param::PLeak), QubitSelect::All);
    EXPECT_EQ(s1.get(Param::PSeep), QubitSelect::All);
    EXPECT_EQ(s1.get(Param::T1), QubitSelect::None);
    EXPECT_FALSE(s1.f2q);

    EXPECT_EQ(stage_mask("stage3", xf), ParamMask::full());
    EXPECT_THROW(stage_mask("stage4", z), ValidationError);
}

TEST(FitConfigText, ParsesOverDefaults) {
    std::istringstream in(
        "# tuned\n"
        "seed = 5\n"
        "stages = 1,3\n"
        "stage3.budget = 42\n"
        "gates.w_spacetime = 2.5\n"
        "per_run_refine = yes\n");
    FitConfig c = FitConfig::parse(in);
    EXPECT_EQ(c.seed, 5u);
    EXPECT_EQ(c.stages, (std::vector<int>{1, 3}));
    EXPECT_EQ(c.stage3.budget, 42u);
    EXPECT_EQ(c.gates.weights.spacetime, 2.5);
    EXPECT_TRUE(c.per_run_refine);
    EXPECT_EQ(c.coherence.budget, FitConfig::defaults().coherence.budget);

    auto bad = [](const char *text) {
        std::istringstream s(text);
        return FitConfig::parse(s);
    };
    EXPECT_THROW(bad("stage3.budgett = 1\n"), ValidationError);
    EXPECT_THROW(bad("stages = 4\n"), ValidationError);
    EXPECT_THROW(bad("gates.w_time = -1\n"), ValidationError);
    EXPECT_THROW(bad("no equals sign\n"), ValidationError);

    FitConfig a = FitConfig::defaults();
    FitConfig b = a;
    b.threads = 8;
    EXPECT_EQ(a.resolved(), b.resolved());
    EXPECT_EQ(a.resolved().count("threads"), 0u);
    b.stage1.sigma0 = 0.7;
    EXPECT_NE(a.resolved(), b.resolved());
}

TEST(MultiroundFit, ReducesLossWithMonotoneTraces) {
    const std::uint32_t n = 7;
    Circuit c = build_repetition_code(n, 8, Basis::Z, GateTimingTable{});
    NoiseModel truth = small_truth(n);
    std::vector<Dataset> target = simulate_runs(c, truth, 4, 1024, 2024);
    NoiseModel init = truth;
    for (QubitParams &q : init.qubits) {
        q.t1_us *= 3;
        q.p_leak = 0;
    }
    FitReport r = fit_multiround(target, c, init, small_config());
    EXPECT_EQ(r.mode, "multiround");
    EXPECT_EQ(r.initial, init);
    std::vector<std::string> names;
    for (const StageReport &s : r.stages) {
        names.push_back(s.name);
        EXPECT_LE(s.best_loss, s.initial_loss) << s.name;
        for (std::size_t i = 1; i < s.trace.size(); i++) EXPECT_LE(s.trace[i], s.trace[i - 1]) << s.name;
    }
    EXPECT_EQ(names, (std::vector<std::string>{"stage1", "stage2.coherence", "stage2.gates", "stage2.spam",
                                               "stage2.merge", "stage3"}));
    // Leakage was zero in the initial model; Stage 1 must have switched it on.
    EXPECT_GT(r.fitted.qubits[3].p_leak, 0.0);

    MultiroundStats tstats = multiround_stats(target, c);
    EXPECT_LT(held_out_loss(r.fitted, c, tstats), 0.8 * held_out_loss(init, c, tstats));

    std::string json = r.to_json();
    for (const char *field : {"\"stages\"", "\"trace\"", "\"sim_seed\"", "\"fitted_model\"", "\"config\"",
                              "\"total_evaluations\""}) {
        EXPECT_NE(json.find(field), std::string::npos) << field;
    }
}

TEST(MultiroundFit, ResultsDoNotDependOnThreads) {
    const std::uint32_t n = 5;
    Circuit c = build_repetition_code(n, 4, Basis::X, GateTimingTable{});
    NoiseModel truth = small_truth(n);
    std::vector<Dataset> target = simulate_runs(c, truth, 2, 512, 3);
    NoiseModel init = truth;
    for (QubitParams &q : init.qubits) q.t1_us *= 2;
    FitConfig cfg = small_config();
    for (StageConfig *s : {&cfg.stage1, &cfg.coherence, &cfg.gates, &cfg.spam, &cfg.stage3}) s->budget = 30;
    FitReport one = fit_multiround(target, c, init, cfg);
    cfg.threads = 3;
    FitReport three = fit_multiround(target, c, init, cfg);
    EXPECT_EQ(one.fitted, three.fitted);
    EXPECT_EQ(one.to_json(), three.to_json());
}

TEST(MultiroundFit, RejectsMismatchedInputs) {
    Circuit c = build_repetition_code(5, 3, Basis::Z, GateTimingTable{});
    NoiseModel m = small_truth(5);
    std::vector<Dataset> wrong{Dataset(c.n_measurements() + 1, 10)};
    EXPECT_THROW(fit_multiround(wrong, c, m, small_config()), ValidationError);
    std::vector<Dataset> none;
    EXPECT_THROW(fit_multiround(none, c, m, small_config()), ValidationError);
    std::vector<Dataset> ok = simulate_runs(c, m, 1, 64, 1);
    EXPECT_THROW(fit_multiround(ok, c, small_truth(7), small_config()), ValidationError);
}

TEST(SingleroundFit, ImprovesTvd) {
    Circuit c = build_repetition_code(5, 1, Basis::X, GateTimingTable{}, {.final_detectors = true});
    NoiseModel truth = small_truth(5);
    for (QubitParams &q : truth.qubits) q.p_leak = 0;
    Dataset target = simulate_runs(c, truth, 1, 8192, 41)[0];
    NoiseModel init = NoiseModel::uniform(5, QubitParams{60, 60, 0.999, 0.001, 0.001, 0.001, 0, 0}, 0.999);
    FitConfig cfg = FitConfig::defaults();
    cfg.single_round.budget = 200;
    FitReport r = fit_singleround(target, c, init, cfg);
    ASSERT_EQ(r.stages.size(), 1u);
    EXPECT_LT(r.stages[0].best_loss, 0.7 * r.stages[0].initial_loss);
    for (const QubitParams &q : r.fitted.qubits) EXPECT_EQ(q.p_leak, 0);
}

TEST(BaselineSelection, RecoversGeneratingRate) {
    Circuit c = build_repetition_code(9, 6, Basis::Z, GateTimingTable{});
    std::vector<Dataset> target = simulate_runs(c, NoiseModel::baseline(ModelKind::SI1000, 0.01), 4, 2048, 8);
    std::vector<double> grid{0.004, 0.006, 0.008, 0.01, 0.012, 0.014, 0.016};
    BaselineSelection s = select_baseline_p(ModelKind::SI1000, target, c, grid, 99);
    EXPECT_EQ(s.p, 0.01);
    ASSERT_EQ(s.losses.size(), grid.size());
    EXPECT_EQ(s.grid, grid);
    EXPECT_EQ(select_baseline_p(ModelKind::SI1000, target, c, grid, 99, 2).losses, s.losses);
    std::vector<double> empty;
    EXPECT_THROW(select_baseline_p(ModelKind::SI1000, target, c, empty, 1), ValidationError);
}
