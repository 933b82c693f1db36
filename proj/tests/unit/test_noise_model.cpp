#include <gtest/gtest.h>

#include <cmath>

#include "paems/circuit.hpp"
#include "paems/errors.hpp"
#include "paems/noise_model.hpp"

using namespace paems;

namespace {

NoiseModel sample_paems(std::uint32_t n) {
    QubitParams q;
    q.t1_us = 20;
    q.t2_us = 15;
    q.f1q = 0.999;
    q.p_init = 0.01;
    q.p_reset = 0.02;
    q.p_readout = 0.03;
    q.p_leak = 1e-3;
    q.p_seep = 0.05;
    return NoiseModel::uniform(n, q, 0.99);
}

std::size_t count_source(const ErrorSchedule &s, EventSource src) {
    std::size_t n = 0;
    for (const LayerEvents &l : s.layers) {
        for (const auto *v : {&l.transitions, &l.errors, &l.readout}) {
            for (const ErrorEvent &e : *v) n += e.source == src;
        }
    }
    return n;
}

}  // namespace

// Reference values from the closed form evaluated in double precision outside this code base.
TEST(Adc, TwirledRates) {
    PauliRates r = adc_from_decoherence(20, 15, 600);
    EXPECT_DOUBLE_EQ(r.px, 0.007388616612872955);
    EXPECT_DOUBLE_EQ(r.py, r.px);
    EXPECT_DOUBLE_EQ(r.pz, 0.01221666381096544);
}

TEST(Adc, ClampsPhaseTermWhenT2ExceedsTwiceT1) {
    PauliRates r = adc_from_decoherence(30, 90, 68);
    EXPECT_DOUBLE_EQ(r.px, 0.0005660249294041707);
    EXPECT_EQ(r.pz, 0.0);
}

TEST(Adc, InfiniteTimesAreNoiseless) {
    PauliRates r = adc_from_decoherence(INFINITY, INFINITY, 1000);
    EXPECT_EQ(r.px + r.py + r.pz, 0.0);
    EXPECT_THROW(adc_from_decoherence(0, 10, 1), ValidationError);
    EXPECT_THROW(adc_from_decoherence(10, 10, -1), ValidationError);
}

TEST(Sdc, FidelityConversion) {
    EXPECT_NEAR(sdc_from_fidelity(0.99, 1), 0.015, 1e-15);
    EXPECT_NEAR(sdc_from_fidelity(0.99, 2), 0.0125, 1e-15);
    EXPECT_DOUBLE_EQ(sdc_from_fidelity(1.0, 2), 0.0);
    EXPECT_DOUBLE_EQ(sdc_from_fidelity(0.1, 1), 0.75);
    EXPECT_DOUBLE_EQ(sdc_from_fidelity(0.1, 2), 15.0 / 16.0);
    EXPECT_THROW(sdc_from_fidelity(0, 1), ValidationError);
    EXPECT_THROW(sdc_from_fidelity(1.1, 1), ValidationError);
    EXPECT_THROW(sdc_from_fidelity(0.9, 3), ValidationError);
}

TEST(ModelKind, NamesAndAliases) {
    EXPECT_EQ(parse_model_kind("si1000"), ModelKind::SI1000);
    EXPECT_EQ(parse_model_kind("SD6"), ModelKind::SD6);
    EXPECT_EQ(parse_model_kind("cc"), ModelKind::CodeCapacity);
    EXPECT_EQ(parse_model_kind("phe"), ModelKind::Phenomenological);
    EXPECT_EQ(parse_model_kind("Circuit"), ModelKind::Circuit);
    EXPECT_EQ(parse_model_kind(model_kind_name(ModelKind::PAEMS)), ModelKind::PAEMS);
    EXPECT_THROW(parse_model_kind("ibm"), ValidationError);
    EXPECT_THROW(NoiseModel::baseline(ModelKind::PAEMS, 0.01), ValidationError);
}

TEST(Validation, NamesOffendingQubit) {
    NoiseModel m = sample_paems(5);
    m.qubits[3].p_readout = 1.5;
    try {
        m.validate();
        FAIL() << "expected ValidationError";
    } catch (const ValidationError &e) {
        EXPECT_NE(std::string(e.what()).find("3"), std::string::npos);
    }
    NoiseModel short_model = sample_paems(3);
    Circuit c = build_repetition_code(5, 1, Basis::Z, {});
    EXPECT_THROW(short_model.validate_for(c), ValidationError);
}

TEST(PaemsSchedule, EventCounts) {
    const std::uint32_t n = 5, rounds = 3;
    Circuit c = build_repetition_code(n, rounds, Basis::Z, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c, sample_paems(n));
    ASSERT_EQ(s.layers.size(), c.layers().size());
    const std::size_t layers = c.layers().size();
    const std::size_t cx = 4 * rounds;
    const std::size_t resets = n + 2 * rounds;
    EXPECT_EQ(s.count(Channel::SDC2), cx);
    EXPECT_EQ(s.count(Channel::SDC1), 0u);
    EXPECT_EQ(s.count(Channel::ADC), layers * n);
    EXPECT_EQ(s.count(Channel::FlipX), resets);
    EXPECT_EQ(count_source(s, EventSource::Init), n);
    // flips at the re-resets, seep trials at every reset (initial ones included)
    EXPECT_EQ(count_source(s, EventSource::Reset), 2 * rounds + resets);
    EXPECT_EQ(s.count(Channel::LeakTrial), 2 * cx);
    EXPECT_EQ(s.count(Channel::SeepTrial), layers * n + resets);
    EXPECT_EQ(s.count(Channel::ReadoutFlip), c.n_measurements());
}

TEST(PaemsSchedule, LeakSitesAndSeepSites) {
    Circuit c = build_repetition_code(3, 1, Basis::X, GateTimingTable{});
    NoiseModel m = sample_paems(3);
    std::size_t h = 0;
    for (const Layer &l : c.layers()) {
        for (const Operation &op : l.operations) h += op.kind == OpKind::Hadamard;
    }
    std::size_t leak_2q = compile_schedule(c, m).count(Channel::LeakTrial);
    m.leak_sites = LeakSites::AllGates;
    EXPECT_EQ(compile_schedule(c, m).count(Channel::LeakTrial), leak_2q + h);
    std::size_t seep = compile_schedule(c, m).count(Channel::SeepTrial);
    m.seep_sites = SeepSites::LayerBoundary;
    EXPECT_EQ(compile_schedule(c, m).count(Channel::SeepTrial), seep - (3 + 1));
}

TEST(PaemsSchedule, PerQubitParametersReachTheirEvents) {
    Circuit c = build_repetition_code(3, 1, Basis::Z, GateTimingTable{});
    NoiseModel m = sample_paems(3);
    m.qubits[1].p_readout = 0.2;
    m.coupler(2, 1)->f2q = 0.9;
    ErrorSchedule s = compile_schedule(c, m);
    for (const LayerEvents &l : s.layers) {
        for (const ErrorEvent &e : l.readout) EXPECT_DOUBLE_EQ(e.p, e.q0 == 1 ? 0.2 : 0.03);
        for (const ErrorEvent &e : l.errors) {
            if (e.channel == Channel::SDC2) EXPECT_NEAR(e.p, e.q0 == 2 ? 1.25 * 0.1 : 1.25 * 0.01, 1e-15);
            if (e.channel == Channel::ADC) EXPECT_DOUBLE_EQ(e.p, e.rates.px + e.rates.py + e.rates.pz);
        }
    }
}

TEST(PaemsSchedule, DumpIsStable) {
    Circuit c = build_repetition_code(3, 2, Basis::X, GateTimingTable{});
    EXPECT_EQ(compile_schedule(c, sample_paems(3)).dump(), compile_schedule(c, sample_paems(3)).dump());
}

TEST(Si1000Schedule, RatesAndIdles) {
    const double p = 0.01;
    Circuit c = build_repetition_code(5, 2, Basis::Z, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c, NoiseModel::baseline(ModelKind::SI1000, p));
    bool saw_res_idle = false, saw_idle = false;
    for (const LayerEvents &l : s.layers) {
        for (const ErrorEvent &e : l.readout) EXPECT_DOUBLE_EQ(e.p, 5 * p);
        for (const ErrorEvent &e : l.errors) {
            switch (e.source) {
                case EventSource::Gate2:
                    EXPECT_DOUBLE_EQ(e.p, p);
                    break;
                case EventSource::Reset:
                case EventSource::Init:
                    EXPECT_DOUBLE_EQ(e.p, 2 * p);
                    break;
                case EventSource::ResonatorIdle:
                    saw_res_idle = true;
                    EXPECT_DOUBLE_EQ(e.p, 2 * p);
                    break;
                case EventSource::Idle:
                    saw_idle = true;
                    EXPECT_DOUBLE_EQ(e.p, p / 10);
                    break;
                default:
                    ADD_FAILURE() << "unexpected source " << event_source_name(e.source);
            }
        }
    }
    EXPECT_TRUE(saw_res_idle);
    // Each CX layer leaves one end data qubit idle.
    EXPECT_TRUE(saw_idle);
    EXPECT_EQ(s.count(Channel::ADC), 0u);
    EXPECT_EQ(s.count(Channel::LeakTrial), 0u);
}

TEST(CircuitBaseline, NoIdleNoise) {
    Circuit c = build_repetition_code(5, 2, Basis::Z, GateTimingTable{});
    ErrorSchedule s = compile_schedule(c, NoiseModel::baseline(ModelKind::Circuit, 0.01));
    EXPECT_EQ(count_source(s, EventSource::Idle) + count_source(s, EventSource::ResonatorIdle), 0u);
    EXPECT_EQ(s.count(Channel::SDC2), 8u);
}

TEST(DataBaselines, OneDataFlipPerRound) {
    const std::uint32_t rounds = 4;
    Circuit z = build_repetition_code(7, rounds, Basis::Z, GateTimingTable{});
    ErrorSchedule cc = compile_schedule(z, NoiseModel::baseline(ModelKind::CodeCapacity, 0.02));
    EXPECT_EQ(count_source(cc, EventSource::DataRound), rounds * 4);
    EXPECT_EQ(cc.count(Channel::FlipX), rounds * 4);
    for (const LayerEvents &l : cc.layers) {
        for (const ErrorEvent &e : l.readout) EXPECT_EQ(e.p, 0.0);
    }
    ErrorSchedule phe = compile_schedule(z, NoiseModel::baseline(ModelKind::Phenomenological, 0.02));
    std::size_t noisy_readout = 0;
    for (const LayerEvents &l : phe.layers) {
        for (const ErrorEvent &e : l.readout) noisy_readout += e.p > 0;
    }
    EXPECT_EQ(noisy_readout, rounds * 3);
    Circuit x = build_repetition_code(7, rounds, Basis::X, GateTimingTable{});
    ErrorSchedule ccx = compile_schedule(x, NoiseModel::baseline(ModelKind::CodeCapacity, 0.02));
    for (const LayerEvents &l : ccx.layers) {
        for (const ErrorEvent &e : l.errors) {
            EXPECT_EQ(e.channel, Channel::ADC);
            EXPECT_DOUBLE_EQ(e.rates.pz, 0.02);
            EXPECT_EQ(e.rates.px, 0.0);
        }
    }
}

TEST(ParamVector, RoundTripsThroughOptimizerCoordinates) {
    NoiseModel m = sample_paems(5);
    m.qubits[2].p_leak = 0;
    m.qubits[4].t1_us = INFINITY;
    ParamMask full = ParamMask::full();
    std::vector<double> v = parameter_vector(m, full);
    EXPECT_EQ(v.size(), parameter_count(m, full));
    EXPECT_EQ(v.size(), parameter_names(m, full).size());
    NoiseModel back = apply_vector(m, full, v);
    for (std::size_t q = 0; q < 5; q++) {
        EXPECT_NEAR(back.qubits[q].p_readout, m.qubits[q].p_readout, 1e-15);
        EXPECT_NEAR(back.qubits[q].f1q, m.qubits[q].f1q, 1e-15);
    }
    EXPECT_EQ(back.qubits[2].p_leak, 0.0);
    EXPECT_NEAR(back.qubits[0].t1_us, 20, 1e-12);
    EXPECT_GE(back.qubits[4].t1_us, 1e8);
}

TEST(ParamVector, MaskSelectsRoles) {
    NoiseModel m = sample_paems(7);
    ParamMask anc;
    anc.set(Param::PReadout, QubitSelect::Ancilla);
    EXPECT_EQ(parameter_count(m, anc), 3u);
    ParamMask data;
    data.set(Param::T1, QubitSelect::Data);
    data.f2q = true;
    EXPECT_EQ(parameter_count(m, data), 4u + 6u);
    std::vector<double> v = parameter_vector(m, anc);
    v[1] = encode_probability(0.25);
    NoiseModel changed = apply_vector(m, anc, v);
    EXPECT_NEAR(changed.qubits[3].p_readout, 0.25, 1e-12);
    EXPECT_EQ(changed.qubits[1].p_readout, m.qubits[1].p_readout);
    EXPECT_THROW(apply_vector(m, anc, std::vector<double>(2, 0.0)), ValidationError);
}

TEST(ProbabilityCoding, LogitWithFloor) {
    EXPECT_NEAR(decode_probability(encode_probability(0.3)), 0.3, 1e-15);
    EXPECT_DOUBLE_EQ(encode_probability(0.5), 0.0);
    EXPECT_EQ(decode_probability(encode_probability(0.0)), 0.0);
    EXPECT_EQ(decode_probability(-1e6), 0.0);
    EXPECT_LT(decode_probability(1e6), 1.0);
}
