#include "paems/circuit.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>

#include "paems/errors.hpp"
#include "text_util.hpp"

namespace paems {

const char *op_mnemonic(OpKind kind) {
    switch (kind) {
        case OpKind::Reset:
            return "R";
        case OpKind::Hadamard:
            return "H";
        case OpKind::TwoQubitEntangler:
            return "CX";
        case OpKind::Idle:
            return "I";
        case OpKind::Measure:
            return "M";
    }
    return "?";
}

double GateTimingTable::duration_of(OpKind kind) const {
    switch (kind) {
        case OpKind::Reset:
            return reset_ns;
        case OpKind::Hadamard:
        case OpKind::Idle:
            return gate_1q_ns;
        case OpKind::TwoQubitEntangler:
            return gate_2q_ns;
        case OpKind::Measure:
            return measure_ns;
    }
    return 0;
}

Circuit::Circuit(std::uint32_t n_qubits, Basis basis, std::uint32_t rounds, std::vector<Layer> layers,
                 std::vector<DetectorId> detectors)
    : n_qubits_(n_qubits), basis_(basis), rounds_(rounds), layers_(std::move(layers)), detectors_(std::move(detectors)) {
    if (n_qubits_ < 3 || n_qubits_ % 2 == 0) {
        throw ValidationError("circuit needs an odd qubit count >= 3, got " + std::to_string(n_qubits_));
    }
    if (rounds_ < 1) {
        throw ValidationError("circuit needs rounds >= 1");
    }
    std::vector<std::uint32_t> measured;
    std::vector<std::size_t> seen(n_qubits_, SIZE_MAX);
    for (std::size_t li = 0; li < layers_.size(); li++) {
        const Layer &layer = layers_[li];
        double longest = 0;
        for (const Operation &op : layer.operations) {
            std::size_t want = op.kind == OpKind::TwoQubitEntangler ? 2 : 1;
            if (op.targets.size() != want) {
                throw ValidationError("layer " + std::to_string(li) + ": " + op_mnemonic(op.kind) + " takes " +
                                      std::to_string(want) + " target(s)");
            }
            if (op.duration_ns < 0) {
                throw ValidationError("layer " + std::to_string(li) + ": negative operation duration");
            }
            for (const QubitId &q : op.targets) {
                if (q.index >= n_qubits_) {
                    throw ValidationError("layer " + std::to_string(li) + ": qubit " + std::to_string(q.index) +
                                          " out of range");
                }
                if (!(q == QubitId::on_chain(q.index))) {
                    throw ValidationError("qubit " + std::to_string(q.index) + " has the wrong role for its index");
                }
                if (seen[q.index] == li) {
                    throw ValidationError("layer " + std::to_string(li) + ": qubit " + std::to_string(q.index) +
                                          " is targeted twice");
                }
                seen[q.index] = li;
            }
            if (op.kind == OpKind::TwoQubitEntangler) {
                std::uint32_t a = op.targets[0].index;
                std::uint32_t b = op.targets[1].index;
                if ((a > b ? a - b : b - a) != 1) {
                    throw ValidationError("layer " + std::to_string(li) + ": CX " + std::to_string(a) + "," +
                                          std::to_string(b) + " is not chain-adjacent");
                }
            }
            if (op.kind == OpKind::Measure) {
                measured.push_back(op.targets[0].index);
            }
            longest = std::max(longest, op.duration_ns);
        }
        if (layer.duration_ns < longest) {
            throw ValidationError("layer " + std::to_string(li) + " is shorter than its longest operation");
        }
    }

    // The measurement record must follow the repetition-code layout so that
    // round_measurement()/final_measurement() are meaningful.
    std::vector<std::uint32_t> expected;
    for (std::uint32_t r = 0; r < rounds_; r++) {
        for (std::uint32_t k = 0; k < n_ancilla(); k++) {
            expected.push_back(ancilla_qubit(k));
        }
    }
    for (std::uint32_t k = 0; k < n_data(); k++) {
        expected.push_back(data_qubit(k));
    }
    if (measured != expected) {
        throw ValidationError("measurement order does not match a " + std::to_string(rounds_) +
                              "-round repetition code on " + std::to_string(n_qubits_) + " qubits");
    }
    n_measurements_ = measured.size();

    for (const DetectorId &d : detectors_) {
        if (d.measurements.empty() || d.measurements.size() > 3) {
            throw ValidationError("detector must reference 1 to 3 measurements");
        }
        for (std::uint32_t m : d.measurements) {
            if (m >= n_measurements_) {
                throw ValidationError("detector references measurement " + std::to_string(m) + " out of range");
            }
        }
        if (d.ancilla >= n_ancilla() || d.round < 1 || d.round > rounds_ + 1) {
            throw ValidationError("detector coordinates out of range");
        }
    }
}

std::size_t Circuit::n_operations() const {
    std::size_t n = 0;
    for (const Layer &layer : layers_) {
        n += layer.operations.size();
    }
    return n;
}

std::uint32_t Circuit::round_measurement(std::uint32_t k, std::uint32_t r) const {
    return (r - 1) * n_ancilla() + k;
}

std::uint32_t Circuit::final_measurement(std::uint32_t k) const { return rounds_ * n_ancilla() + k; }

namespace {

Layer make_layer(OpKind kind, const std::vector<std::vector<std::uint32_t>> &targets, const GateTimingTable &timing) {
    Layer layer;
    double d = timing.duration_of(kind);
    for (const auto &t : targets) {
        Operation op{kind, {}, d};
        for (std::uint32_t q : t) {
            op.targets.push_back(QubitId::on_chain(q));
        }
        layer.operations.push_back(std::move(op));
    }
    layer.duration_ns = targets.empty() ? 0 : d;
    return layer;
}

}  // namespace

Circuit build_repetition_code(std::uint32_t n_qubits, std::uint32_t rounds, Basis basis,
                              const GateTimingTable &timing, RepetitionCodeOptions options) {
    if (n_qubits < 3 || n_qubits % 2 == 0) {
        throw ValidationError("repetition code needs an odd qubit count >= 3, got " + std::to_string(n_qubits));
    }
    if (rounds < 1) {
        throw ValidationError("repetition code needs rounds >= 1");
    }
    for (double d : {timing.gate_1q_ns, timing.gate_2q_ns, timing.measure_ns, timing.reset_ns}) {
        if (!(d >= 0)) {
            throw ValidationError("timing table has a negative or missing duration");
        }
    }

    std::vector<std::vector<std::uint32_t>> all, data, ancillas, cx_left, cx_right;
    for (std::uint32_t q = 0; q < n_qubits; q++) {
        all.push_back({q});
        if (q % 2 == 0) {
            data.push_back({q});
        } else {
            ancillas.push_back({q});
            cx_left.push_back({q - 1, q});
            cx_right.push_back({q + 1, q});
        }
    }

    std::vector<Layer> layers;
    layers.push_back(make_layer(OpKind::Reset, all, timing));
    if (basis == Basis::X) {
        layers.push_back(make_layer(OpKind::Hadamard, data, timing));
    }
    for (std::uint32_t r = 0; r < rounds; r++) {
        if (basis == Basis::X) {
            layers.push_back(make_layer(OpKind::Hadamard, data, timing));
        }
        layers.push_back(make_layer(OpKind::TwoQubitEntangler, cx_left, timing));
        layers.push_back(make_layer(OpKind::TwoQubitEntangler, cx_right, timing));
        if (basis == Basis::X) {
            layers.push_back(make_layer(OpKind::Hadamard, data, timing));
        }
        layers.push_back(make_layer(OpKind::Measure, ancillas, timing));
        layers.push_back(make_layer(OpKind::Reset, ancillas, timing));
    }
    if (basis == Basis::X) {
        layers.push_back(make_layer(OpKind::Hadamard, data, timing));
    }
    layers.push_back(make_layer(OpKind::Measure, data, timing));

    std::uint32_t m = n_qubits / 2;
    std::vector<DetectorId> detectors;
    for (std::uint32_t r = 1; r <= rounds; r++) {
        for (std::uint32_t k = 0; k < m; k++) {
            DetectorId d{k, r, {(r - 1) * m + k}, false};
            if (r >= 2) {
                d.measurements.push_back((r - 2) * m + k);
            }
            detectors.push_back(std::move(d));
        }
    }
    if (options.final_detectors) {
        std::uint32_t base = rounds * m;
        for (std::uint32_t k = 0; k < m; k++) {
            detectors.push_back({k, rounds + 1, {base + k, base + k + 1, (rounds - 1) * m + k}, true});
        }
    }
    return Circuit(n_qubits, basis, rounds, std::move(layers), std::move(detectors));
}

std::vector<DetectorId> enumerate_detectors(const Circuit &circuit) {
    std::vector<DetectorId> out = circuit.detectors();
    std::stable_sort(out.begin(), out.end(), [](const DetectorId &a, const DetectorId &b) {
        return a.round != b.round ? a.round < b.round : a.ancilla < b.ancilla;
    });
    return out;
}

void write_circuit(std::ostream &out, const Circuit &circuit) {
    out << "paems-circuit v1 qubits=" << circuit.n_qubits() << " basis=" << (circuit.basis() == Basis::X ? 'X' : 'Z')
        << " rounds=" << circuit.rounds() << "\n";
    for (const Layer &layer : circuit.layers()) {
        out << "LAYER " << format_double(layer.duration_ns);
        for (const Operation &op : layer.operations) {
            out << "; " << op_mnemonic(op.kind) << " " << op.targets[0].index;
            if (op.targets.size() == 2) {
                out << "," << op.targets[1].index;
            }
            if (op.duration_ns != layer.duration_ns) {
                out << "@" << format_double(op.duration_ns);
            }
        }
        out << "\n";
    }
    for (const DetectorId &d : circuit.detectors()) {
        out << "DET a=" << d.ancilla << " r=" << d.round << " m=";
        for (std::size_t i = 0; i < d.measurements.size(); i++) {
            out << (i ? "," : "") << d.measurements[i];
        }
        out << "\n";
    }
}

std::string circuit_to_string(const Circuit &circuit) {
    std::ostringstream out;
    write_circuit(out, circuit);
    return out.str();
}

namespace {

OpKind parse_op_kind(std::string_view s, std::size_t line_no) {
    if (s == "R") return OpKind::Reset;
    if (s == "H") return OpKind::Hadamard;
    if (s == "CX") return OpKind::TwoQubitEntangler;
    if (s == "I") return OpKind::Idle;
    if (s == "M") return OpKind::Measure;
    throw ValidationError("circuit line " + std::to_string(line_no) + ": unknown operation '" + std::string(s) + "'");
}

std::string_view expect_key(std::string_view token, std::string_view key, std::size_t line_no) {
    if (token.substr(0, key.size()) != key) {
        throw ValidationError("circuit line " + std::to_string(line_no) + ": expected '" + std::string(key) + "'");
    }
    return token.substr(key.size());
}

}  // namespace

Circuit parse_circuit(std::istream &in) {
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) {
        throw ValidationError("circuit text is empty");
    }
    line_no++;
    auto header = split_ws(line);
    if (header.size() != 5 || header[0] != "paems-circuit" || header[1] != "v1") {
        throw ValidationError("circuit header must be 'paems-circuit v1 qubits=<n> basis=<X|Z> rounds=<r>'");
    }
    auto n_qubits = parse_uint(expect_key(header[2], "qubits=", line_no), "qubits");
    auto basis_s = expect_key(header[3], "basis=", line_no);
    if (basis_s != "X" && basis_s != "Z") {
        throw ValidationError("circuit basis must be X or Z");
    }
    auto rounds = parse_uint(expect_key(header[4], "rounds=", line_no), "rounds");

    std::vector<Layer> layers;
    std::vector<DetectorId> detectors;
    while (std::getline(in, line)) {
        line_no++;
        std::string_view body = trim(line);
        if (body.empty()) {
            throw ValidationError("circuit line " + std::to_string(line_no) + ": unexpected blank line");
        }
        if (body.substr(0, 6) == "LAYER ") {
            if (!detectors.empty()) {
                throw ValidationError("circuit line " + std::to_string(line_no) + ": LAYER after DET");
            }
            auto parts = split(body, ';');
            Layer layer;
            layer.duration_ns = parse_double(trim(parts[0].substr(6)), "layer duration");
            for (std::size_t i = 1; i < parts.size(); i++) {
                auto tokens = split_ws(parts[i]);
                if (tokens.size() != 2) {
                    throw ValidationError("circuit line " + std::to_string(line_no) + ": malformed operation '" +
                                          std::string(trim(parts[i])) + "'");
                }
                Operation op;
                op.kind = parse_op_kind(tokens[0], line_no);
                std::string_view targets = tokens[1];
                op.duration_ns = layer.duration_ns;
                if (auto at = targets.find('@'); at != std::string_view::npos) {
                    op.duration_ns = parse_double(targets.substr(at + 1), "operation duration");
                    targets = targets.substr(0, at);
                }
                for (std::string_view t : split(targets, ',')) {
                    op.targets.push_back(QubitId::on_chain(static_cast<std::uint32_t>(parse_uint(t, "qubit"))));
                }
                layer.operations.push_back(std::move(op));
            }
            layers.push_back(std::move(layer));
        } else if (body.substr(0, 4) == "DET ") {
            auto tokens = split_ws(body);
            if (tokens.size() != 4) {
                throw ValidationError("circuit line " + std::to_string(line_no) + ": malformed DET");
            }
            DetectorId d;
            d.ancilla = static_cast<std::uint32_t>(parse_uint(expect_key(tokens[1], "a=", line_no), "ancilla"));
            d.round = static_cast<std::uint32_t>(parse_uint(expect_key(tokens[2], "r=", line_no), "round"));
            for (std::string_view m : split(expect_key(tokens[3], "m=", line_no), ',')) {
                d.measurements.push_back(static_cast<std::uint32_t>(parse_uint(m, "measurement index")));
            }
            d.is_final = d.round > rounds;
            detectors.push_back(std::move(d));
        } else {
            throw ValidationError("circuit line " + std::to_string(line_no) + ": expected LAYER or DET");
        }
    }
    return Circuit(static_cast<std::uint32_t>(n_qubits), basis_s == "X" ? Basis::X : Basis::Z,
                   static_cast<std::uint32_t>(rounds), std::move(layers), std::move(detectors));
}

Circuit parse_circuit(const std::string &text) {
    std::istringstream in(text);
    return parse_circuit(in);
}

}  // namespace paems
