#include "paems/noise_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "paems/errors.hpp"
#include "text_util.hpp"

namespace paems {

const char *model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::PAEMS:
            return "PAEMS";
        case ModelKind::Circuit:
            return "Circuit";
        case ModelKind::CodeCapacity:
            return "CodeCapacity";
        case ModelKind::Phenomenological:
            return "Phenomenological";
        case ModelKind::SD6:
            return "SD6";
        case ModelKind::SI1000:
            return "SI1000";
    }
    return "?";
}

ModelKind parse_model_kind(std::string_view name) {
    std::string s(name);
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
    if (s == "paems") return ModelKind::PAEMS;
    if (s == "circuit") return ModelKind::Circuit;
    if (s == "codecapacity" || s == "cc") return ModelKind::CodeCapacity;
    if (s == "phenomenological" || s == "phe") return ModelKind::Phenomenological;
    if (s == "sd6") return ModelKind::SD6;
    if (s == "si1000") return ModelKind::SI1000;
    throw ValidationError("unknown model kind '" + std::string(name) + "'");
}

NoiseModel NoiseModel::baseline(ModelKind kind, double p) {
    if (kind == ModelKind::PAEMS) {
        throw ValidationError("PAEMS is not a baseline kind");
    }
    NoiseModel m;
    m.kind = kind;
    m.p = p;
    m.validate();
    return m;
}

NoiseModel NoiseModel::uniform(std::uint32_t n_qubits, const QubitParams &qubit, double f2q) {
    NoiseModel m;
    m.kind = ModelKind::PAEMS;
    m.qubits.assign(n_qubits, qubit);
    for (std::uint32_t q = 0; q + 1 < n_qubits; q++) {
        m.couplers.push_back({q, q + 1, f2q});
    }
    return m;
}

const CouplerParams *NoiseModel::coupler(std::uint32_t a, std::uint32_t b) const {
    for (const CouplerParams &c : couplers) {
        if ((c.a == a && c.b == b) || (c.a == b && c.b == a)) {
            return &c;
        }
    }
    return nullptr;
}

CouplerParams *NoiseModel::coupler(std::uint32_t a, std::uint32_t b) {
    return const_cast<CouplerParams *>(std::as_const(*this).coupler(a, b));
}

namespace {

bool is_probability(double p, bool allow_one) { return p >= 0 && (allow_one ? p <= 1 : p < 1); }

}  // namespace

void NoiseModel::validate() const {
    if (kind != ModelKind::PAEMS) {
        if (!is_probability(p, false)) {
            throw ValidationError(std::string(model_kind_name(kind)) + " needs p in [0,1), got " + format_double(p));
        }
        return;
    }
    for (std::size_t q = 0; q < qubits.size(); q++) {
        const QubitParams &qp = qubits[q];
        auto fail = [&](const char *field) {
            throw ValidationError("qubit " + std::to_string(q) + ": invalid " + field);
        };
        if (!(qp.t1_us > 0)) fail("t1");
        if (!(qp.t2_us > 0)) fail("t2");
        if (!(qp.f1q > 0 && qp.f1q <= 1)) fail("f1q");
        if (!is_probability(qp.p_init, false)) fail("p_init");
        if (!is_probability(qp.p_reset, false)) fail("p_reset");
        if (!is_probability(qp.p_readout, false)) fail("p_readout");
        if (!is_probability(qp.p_leak, false)) fail("p_leak");
        if (!is_probability(qp.p_seep, true)) fail("p_seep");
    }
    for (const CouplerParams &c : couplers) {
        std::string name = "coupler " + std::to_string(c.a) + "-" + std::to_string(c.b);
        if ((c.a > c.b ? c.a - c.b : c.b - c.a) != 1) {
            throw ValidationError(name + ": endpoints are not chain-adjacent");
        }
        if (!(c.f2q > 0 && c.f2q <= 1)) {
            throw ValidationError(name + ": invalid f2q");
        }
    }
}

void NoiseModel::validate_for(const Circuit &circuit) const {
    validate();
    if (kind != ModelKind::PAEMS) {
        return;
    }
    if (qubits.size() < circuit.n_qubits()) {
        throw ValidationError("model has no parameters for qubit " + std::to_string(qubits.size()) + " (circuit has " +
                              std::to_string(circuit.n_qubits()) + " qubits)");
    }
    for (std::uint32_t q = 0; q + 1 < circuit.n_qubits(); q++) {
        if (coupler(q, q + 1) == nullptr) {
            throw ValidationError("model has no coupler for qubits " + std::to_string(q) + "-" +
                                  std::to_string(q + 1));
        }
    }
}

PauliRates adc_from_decoherence(double t1_us, double t2_us, double t_ns) {
    if (!(t1_us > 0) || !(t2_us > 0)) {
        throw ValidationError("T1 and T2 must be positive");
    }
    if (!(t_ns >= 0)) {
        throw ValidationError("duration must be non-negative");
    }
    double t_us = t_ns * 1e-3;
    double e1 = -std::expm1(-t_us / t1_us);
    double e2 = -std::expm1(-t_us / t2_us);
    double pxy = e1 / 4;
    double pz = std::max(0.0, e2 / 2 - e1 / 4);
    return {pxy, pxy, pz};
}

double sdc_from_fidelity(double f, int arity) {
    if (!(f > 0) || f > 1) {
        throw ValidationError("gate fidelity must be in (0, 1]");
    }
    if (arity == 1) {
        return std::clamp(1.5 * (1 - f), 0.0, 0.75);
    }
    if (arity == 2) {
        return std::clamp(1.25 * (1 - f), 0.0, 15.0 / 16.0);
    }
    throw ValidationError("arity must be 1 or 2");
}

const char *channel_name(Channel c) {
    switch (c) {
        case Channel::ADC:
            return "ADC";
        case Channel::SDC1:
            return "SDC1";
        case Channel::SDC2:
            return "SDC2";
        case Channel::FlipX:
            return "FlipX";
        case Channel::LeakTrial:
            return "LeakTrial";
        case Channel::SeepTrial:
            return "SeepTrial";
        case Channel::ReadoutFlip:
            return "ReadoutFlip";
    }
    return "?";
}

const char *event_source_name(EventSource s) {
    switch (s) {
        case EventSource::Decoherence:
            return "decoherence";
        case EventSource::Gate1:
            return "gate1";
        case EventSource::Gate2:
            return "gate2";
        case EventSource::Idle:
            return "idle";
        case EventSource::ResonatorIdle:
            return "resonator_idle";
        case EventSource::Init:
            return "init";
        case EventSource::Reset:
            return "reset";
        case EventSource::Measure:
            return "measure";
        case EventSource::DataRound:
            return "data_round";
        case EventSource::Leak:
            return "leak";
        case EventSource::Seep:
            return "seep";
    }
    return "?";
}

std::size_t ErrorSchedule::count(Channel c) const {
    std::size_t n = 0;
    for (const LayerEvents &layer : layers) {
        for (const auto *list : {&layer.transitions, &layer.errors, &layer.readout}) {
            n += static_cast<std::size_t>(
                std::count_if(list->begin(), list->end(), [c](const ErrorEvent &e) { return e.channel == c; }));
        }
    }
    return n;
}

std::string ErrorSchedule::dump() const {
    std::ostringstream out;
    for (std::size_t li = 0; li < layers.size(); li++) {
        out << "layer " << li << "\n";
        auto emit = [&](const char *phase, const std::vector<ErrorEvent> &events) {
            for (const ErrorEvent &e : events) {
                out << "  " << phase << " " << channel_name(e.channel) << " " << event_source_name(e.source) << " "
                    << e.q0;
                if (e.q1 != kNoQubit) out << "," << e.q1;
                out << " p=" << format_double(e.p);
                if (e.channel == Channel::ADC) {
                    out << " px=" << format_double(e.rates.px) << " py=" << format_double(e.rates.py)
                        << " pz=" << format_double(e.rates.pz);
                }
                out << "\n";
            }
        };
        emit("T", layers[li].transitions);
        emit("E", layers[li].errors);
        emit("M", layers[li].readout);
    }
    return out.str();
}

namespace {

ErrorEvent simple(Channel c, EventSource s, std::uint32_t q, double p) {
    ErrorEvent e;
    e.channel = c;
    e.source = s;
    e.q0 = q;
    e.p = p;
    return e;
}

ErrorEvent adc_event(EventSource s, std::uint32_t q, PauliRates r) {
    ErrorEvent e = simple(Channel::ADC, s, q, r.px + r.py + r.pz);
    e.rates = r;
    return e;
}

struct LayerShape {
    bool has_measure_or_reset = false;
    std::vector<bool> busy;
};

LayerShape shape_of(const Layer &layer, std::uint32_t n) {
    LayerShape s;
    s.busy.assign(n, false);
    for (const Operation &op : layer.operations) {
        if (op.kind == OpKind::Measure || op.kind == OpKind::Reset) {
            s.has_measure_or_reset = true;
        }
        if (op.kind != OpKind::Idle) {
            for (const QubitId &q : op.targets) s.busy[q.index] = true;
        }
    }
    return s;
}

/// Index of the layer after which per-round data errors are injected: the
/// layer right before each round's first entangling (or basis-change) layer.
std::vector<std::size_t> round_injection_layers(const Circuit &circuit) {
    std::vector<std::size_t> first_cx;
    bool previous_was_cx = false;
    const auto &layers = circuit.layers();
    for (std::size_t li = 0; li < layers.size(); li++) {
        bool is_cx = !layers[li].operations.empty() &&
                     layers[li].operations.front().kind == OpKind::TwoQubitEntangler;
        if (is_cx && !previous_was_cx) first_cx.push_back(li);
        previous_was_cx = is_cx;
    }
    std::vector<std::size_t> out;
    for (std::size_t li : first_cx) {
        std::size_t start = li;
        if (circuit.basis() == Basis::X && start > 0) start--;
        out.push_back(start == 0 ? 0 : start - 1);
    }
    return out;
}

void compile_paems(const Circuit &circuit, const NoiseModel &model, ErrorSchedule &out) {
    std::uint32_t n = circuit.n_qubits();
    std::vector<bool> initialized(n, false);
    for (std::size_t li = 0; li < circuit.layers().size(); li++) {
        const Layer &layer = circuit.layers()[li];
        LayerEvents &ev = out.layers[li];
        for (std::uint32_t q = 0; q < n; q++) {
            ev.transitions.push_back(simple(Channel::SeepTrial, EventSource::Seep, q, model.qubits[q].p_seep));
        }
        for (const Operation &op : layer.operations) {
            bool leaks = op.kind == OpKind::TwoQubitEntangler ||
                         (model.leak_sites == LeakSites::AllGates && op.kind == OpKind::Hadamard);
            if (op.kind == OpKind::Reset && model.seep_sites == SeepSites::LayerBoundaryAndReset) {
                std::uint32_t q = op.targets[0].index;
                ev.transitions.push_back(simple(Channel::SeepTrial, EventSource::Reset, q, model.qubits[q].p_seep));
            }
            if (leaks) {
                for (const QubitId &t : op.targets) {
                    ev.transitions.push_back(
                        simple(Channel::LeakTrial, EventSource::Leak, t.index, model.qubits[t.index].p_leak));
                }
            }
        }
        for (const Operation &op : layer.operations) {
            std::uint32_t q = op.targets[0].index;
            switch (op.kind) {
                case OpKind::Reset:
                    if (!initialized[q]) {
                        ev.errors.push_back(simple(Channel::FlipX, EventSource::Init, q, model.qubits[q].p_init));
                        initialized[q] = true;
                    } else {
                        ev.errors.push_back(simple(Channel::FlipX, EventSource::Reset, q, model.qubits[q].p_reset));
                    }
                    break;
                case OpKind::Hadamard:
                    ev.errors.push_back(
                        simple(Channel::SDC1, EventSource::Gate1, q, sdc_from_fidelity(model.qubits[q].f1q, 1)));
                    break;
                case OpKind::TwoQubitEntangler: {
                    std::uint32_t t = op.targets[1].index;
                    ErrorEvent e = simple(Channel::SDC2, EventSource::Gate2, q,
                                          sdc_from_fidelity(model.coupler(q, t)->f2q, 2));
                    e.q1 = t;
                    ev.errors.push_back(e);
                    break;
                }
                case OpKind::Idle:
                case OpKind::Measure:
                    break;
            }
        }
        for (std::uint32_t q = 0; q < n; q++) {
            const QubitParams &qp = model.qubits[q];
            ev.errors.push_back(
                adc_event(EventSource::Decoherence, q, adc_from_decoherence(qp.t1_us, qp.t2_us, layer.duration_ns)));
        }
        for (const Operation &op : layer.operations) {
            if (op.kind == OpKind::Measure) {
                std::uint32_t q = op.targets[0].index;
                ev.readout.push_back(simple(Channel::ReadoutFlip, EventSource::Measure, q, model.qubits[q].p_readout));
            }
        }
    }
}

void compile_gate_baseline(const Circuit &circuit, const NoiseModel &model, ErrorSchedule &out) {
    double p = model.p;
    double p1 = p, p2 = p, p_idle = 0, p_res_idle = 0, p_reset = p, p_meas = p;
    bool idle_noise = false;
    if (model.kind == ModelKind::SD6) {
        idle_noise = true;
        p_idle = p_res_idle = p;
    } else if (model.kind == ModelKind::SI1000) {
        idle_noise = true;
        p1 = p / 10;
        p_idle = p / 10;
        p_res_idle = 2 * p;
        p_reset = 2 * p;
        p_meas = 5 * p;
    }
    p1 = std::min(p1, 0.75);
    p2 = std::min(p2, 15.0 / 16.0);
    p_idle = std::min(p_idle, 0.75);
    p_res_idle = std::min(p_res_idle, 0.75);
    p_reset = std::min(p_reset, 1.0);
    p_meas = std::min(p_meas, 1.0);

    std::uint32_t n = circuit.n_qubits();
    std::vector<bool> initialized(n, false);
    for (std::size_t li = 0; li < circuit.layers().size(); li++) {
        const Layer &layer = circuit.layers()[li];
        LayerEvents &ev = out.layers[li];
        for (const Operation &op : layer.operations) {
            std::uint32_t q = op.targets[0].index;
            switch (op.kind) {
                case OpKind::Reset:
                    ev.errors.push_back(
                        simple(Channel::FlipX, initialized[q] ? EventSource::Reset : EventSource::Init, q, p_reset));
                    initialized[q] = true;
                    break;
                case OpKind::Hadamard:
                    ev.errors.push_back(simple(Channel::SDC1, EventSource::Gate1, q, p1));
                    break;
                case OpKind::TwoQubitEntangler: {
                    ErrorEvent e = simple(Channel::SDC2, EventSource::Gate2, q, p2);
                    e.q1 = op.targets[1].index;
                    ev.errors.push_back(e);
                    break;
                }
                case OpKind::Idle:
                case OpKind::Measure:
                    break;
            }
        }
        if (idle_noise && !layer.operations.empty()) {
            LayerShape shape = shape_of(layer, n);
            for (std::uint32_t q = 0; q < n; q++) {
                if (shape.busy[q]) continue;
                if (shape.has_measure_or_reset) {
                    ev.errors.push_back(simple(Channel::SDC1, EventSource::ResonatorIdle, q, p_res_idle));
                } else {
                    ev.errors.push_back(simple(Channel::SDC1, EventSource::Idle, q, p_idle));
                }
            }
        }
        for (const Operation &op : layer.operations) {
            if (op.kind == OpKind::Measure) {
                ev.readout.push_back(simple(Channel::ReadoutFlip, EventSource::Measure, op.targets[0].index, p_meas));
            }
        }
    }
}

void compile_data_baseline(const Circuit &circuit, const NoiseModel &model, ErrorSchedule &out) {
    bool measurement_noise = model.kind == ModelKind::Phenomenological;
    for (std::size_t li : round_injection_layers(circuit)) {
        for (std::uint32_t k = 0; k < circuit.n_data(); k++) {
            std::uint32_t q = Circuit::data_qubit(k);
            if (circuit.basis() == Basis::Z) {
                out.layers[li].errors.push_back(simple(Channel::FlipX, EventSource::DataRound, q, model.p));
            } else {
                out.layers[li].errors.push_back(adc_event(EventSource::DataRound, q, {0, 0, model.p}));
            }
        }
    }
    for (std::size_t li = 0; li < circuit.layers().size(); li++) {
        for (const Operation &op : circuit.layers()[li].operations) {
            if (op.kind == OpKind::Measure) {
                std::uint32_t q = op.targets[0].index;
                bool ancilla = op.targets[0].role == QubitRole::Ancilla;
                out.layers[li].readout.push_back(simple(Channel::ReadoutFlip, EventSource::Measure, q,
                                                        measurement_noise && ancilla ? model.p : 0.0));
            }
        }
    }
}

}  // namespace

ErrorSchedule compile_schedule(const Circuit &circuit, const NoiseModel &model) {
    model.validate_for(circuit);
    ErrorSchedule out;
    out.layers.resize(circuit.layers().size());
    switch (model.kind) {
        case ModelKind::PAEMS:
            compile_paems(circuit, model, out);
            break;
        case ModelKind::Circuit:
        case ModelKind::SD6:
        case ModelKind::SI1000:
            compile_gate_baseline(circuit, model, out);
            break;
        case ModelKind::CodeCapacity:
        case ModelKind::Phenomenological:
            compile_data_baseline(circuit, model, out);
            break;
    }
    return out;
}

const char *param_name(Param p) {
    switch (p) {
        case Param::T1:
            return "t1";
        case Param::T2:
            return "t2";
        case Param::F1q:
            return "f1q";
        case Param::PInit:
            return "p_init";
        case Param::PReset:
            return "p_reset";
        case Param::PReadout:
            return "p_readout";
        case Param::PLeak:
            return "p_leak";
        case Param::PSeep:
            return "p_seep";
    }
    return "?";
}

ParamMask ParamMask::full() {
    ParamMask m;
    m.qubit.fill(QubitSelect::All);
    m.f2q = true;
    return m;
}

bool ParamMask::selects(Param p, std::uint32_t qubit_index) const {
    switch (get(p)) {
        case QubitSelect::None:
            return false;
        case QubitSelect::All:
            return true;
        case QubitSelect::Data:
            return qubit_index % 2 == 0;
        case QubitSelect::Ancilla:
            return qubit_index % 2 == 1;
    }
    return false;
}

bool ParamMask::empty() const {
    return !f2q && std::all_of(qubit.begin(), qubit.end(), [](QubitSelect s) { return s == QubitSelect::None; });
}

namespace {

constexpr double kTimeCeilingUs = 1e9;

// Floor sits one unit below logit(kProbabilityFloor) so that values at the
// floor still decode to themselves.
const double kLogitFloor = std::log(kProbabilityFloor / (1 - kProbabilityFloor)) - 1;

double &field(QubitParams &q, Param p) {
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

double encode(Param p, double v) {
    switch (p) {
        case Param::T1:
        case Param::T2:
            // Infinite coherence times are encoded at a finite ceiling.
            return std::log(std::min(v, kTimeCeilingUs));
        case Param::F1q:
            return encode_probability(1 - v);
        default:
            return encode_probability(v);
    }
}

double decode(Param p, double y) {
    switch (p) {
        case Param::T1:
        case Param::T2:
            return std::exp(y);
        case Param::F1q:
            return 1 - decode_probability(y);
        default:
            return decode_probability(y);
    }
}

template <typename Fn>
void for_each_slot(const NoiseModel &model, const ParamMask &mask, Fn &&fn) {
    if (model.kind != ModelKind::PAEMS) {
        if (!mask.empty()) throw ValidationError("parameter masks apply to PAEMS models only");
        return;
    }
    for (std::uint32_t q = 0; q < model.qubits.size(); q++) {
        for (std::size_t k = 0; k < kNumQubitParams; k++) {
            Param p = static_cast<Param>(k);
            if (mask.selects(p, q)) fn(q, p, false);
        }
    }
    if (mask.f2q) {
        for (std::uint32_t c = 0; c < model.couplers.size(); c++) fn(c, Param::F1q, true);
    }
}

}  // namespace

double encode_probability(double p) {
    if (p <= kProbabilityFloor) return kLogitFloor;
    if (p >= 1 - kProbabilityFloor) return -kLogitFloor;
    return std::log(p) - std::log1p(-p);
}

double decode_probability(double y) {
    if (y <= kLogitFloor) return 0;
    if (y >= -kLogitFloor) return 1 - kProbabilityFloor;
    return 1 / (1 + std::exp(-y));
}

std::size_t parameter_count(const NoiseModel &model, const ParamMask &mask) {
    std::size_t n = 0;
    for_each_slot(model, mask, [&](std::uint32_t, Param, bool) { n++; });
    return n;
}

std::vector<double> parameter_vector(const NoiseModel &model, const ParamMask &mask) {
    std::vector<double> out;
    for_each_slot(model, mask, [&](std::uint32_t i, Param p, bool coupler) {
        if (coupler) {
            out.push_back(encode_probability(1 - model.couplers[i].f2q));
        } else {
            QubitParams q = model.qubits[i];
            out.push_back(encode(p, field(q, p)));
        }
    });
    return out;
}

NoiseModel apply_vector(const NoiseModel &model, const ParamMask &mask, std::span<const double> vector) {
    std::size_t want = parameter_count(model, mask);
    if (vector.size() != want) {
        throw ValidationError("parameter vector has length " + std::to_string(vector.size()) + ", mask expects " +
                              std::to_string(want));
    }
    NoiseModel out = model;
    std::size_t k = 0;
    for_each_slot(model, mask, [&](std::uint32_t i, Param p, bool coupler) {
        double y = vector[k++];
        if (coupler) {
            out.couplers[i].f2q = 1 - decode_probability(y);
        } else {
            double v = decode(p, y);
            if (p == Param::F1q || p == Param::PSeep) {
                field(out.qubits[i], p) = v;
            } else if (p == Param::T1 || p == Param::T2) {
                field(out.qubits[i], p) = std::max(v, 1e-6);
            } else {
                // Strictly below one: these probabilities live in [0, 1).
                field(out.qubits[i], p) = std::min(v, 1 - kProbabilityFloor);
            }
        }
    });
    return out;
}

std::vector<std::string> parameter_names(const NoiseModel &model, const ParamMask &mask) {
    std::vector<std::string> out;
    for_each_slot(model, mask, [&](std::uint32_t i, Param p, bool coupler) {
        if (coupler) {
            out.push_back("f2q[" + std::to_string(model.couplers[i].a) + "-" + std::to_string(model.couplers[i].b) +
                          "]");
        } else {
            out.push_back(std::string(param_name(p)) + "[" + std::to_string(i) + "]");
        }
    });
    return out;
}

}  // namespace paems
