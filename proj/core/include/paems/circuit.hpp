#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace paems {

enum class QubitRole : std::uint8_t { Data, Ancilla };

/// Qubits live on a linear chain; even indices are data, odd are ancillas.
struct QubitId {
    std::uint32_t index = 0;
    QubitRole role = QubitRole::Data;

    static QubitId on_chain(std::uint32_t index) {
        return {index, index % 2 == 0 ? QubitRole::Data : QubitRole::Ancilla};
    }
    bool operator==(const QubitId &) const = default;
};

enum class Basis : std::uint8_t { X, Z };

enum class OpKind : std::uint8_t { Reset, Hadamard, TwoQubitEntangler, Idle, Measure };

const char *op_mnemonic(OpKind kind);

struct Operation {
    OpKind kind = OpKind::Idle;
    /// One target, or (control, target) for TwoQubitEntangler.
    std::vector<QubitId> targets;
    double duration_ns = 0;

    bool operator==(const Operation &) const = default;
};

struct Layer {
    std::vector<Operation> operations;
    double duration_ns = 0;

    bool operator==(const Layer &) const = default;
};

/// Operation durations used when laying out a circuit.
struct GateTimingTable {
    double gate_1q_ns = 32;
    double gate_2q_ns = 68;
    double measure_ns = 600;
    double reset_ns = 160;

    double duration_of(OpKind kind) const;
    bool operator==(const GateTimingTable &) const = default;
};

/// XOR of one to three measurement-record indices.
///
/// `ancilla` is the ancilla ordinal (0-based, left to right) and `round` is
/// 1-based. Final data-parity detectors use round = rounds + 1.
struct DetectorId {
    std::uint32_t ancilla = 0;
    std::uint32_t round = 0;
    std::vector<std::uint32_t> measurements;
    bool is_final = false;

    bool operator==(const DetectorId &) const = default;
};

class Circuit {
   public:
    Circuit() = default;
    /// Validates layer exclusivity, targets, and detector references.
    Circuit(std::uint32_t n_qubits, Basis basis, std::uint32_t rounds, std::vector<Layer> layers,
            std::vector<DetectorId> detectors);

    std::uint32_t n_qubits() const { return n_qubits_; }
    std::uint32_t n_data() const { return (n_qubits_ + 1) / 2; }
    std::uint32_t n_ancilla() const { return n_qubits_ / 2; }
    Basis basis() const { return basis_; }
    std::uint32_t rounds() const { return rounds_; }
    const std::vector<Layer> &layers() const { return layers_; }
    const std::vector<DetectorId> &detectors() const { return detectors_; }
    std::size_t n_measurements() const { return n_measurements_; }
    std::size_t n_operations() const;

    /// Chain index of ancilla ordinal k.
    static std::uint32_t ancilla_qubit(std::uint32_t k) { return 2 * k + 1; }
    static std::uint32_t data_qubit(std::uint32_t k) { return 2 * k; }

    /// Measurement index of ancilla k in round r (1-based).
    std::uint32_t round_measurement(std::uint32_t k, std::uint32_t r) const;
    /// Measurement index of the final readout of data qubit k.
    std::uint32_t final_measurement(std::uint32_t k) const;

    bool operator==(const Circuit &) const = default;

   private:
    std::uint32_t n_qubits_ = 0;
    Basis basis_ = Basis::Z;
    std::uint32_t rounds_ = 0;
    std::vector<Layer> layers_;
    std::vector<DetectorId> detectors_;
    std::size_t n_measurements_ = 0;
};

struct RepetitionCodeOptions {
    bool final_detectors = false;
};

/// Builds an X- or Z-basis repetition-code memory experiment on a chain of
/// n_qubits (odd, >= 3) with the given number of stabilizer rounds.
///
/// Layer sequence: reset all; [X: H on data]; per round
/// [X: H data] CX(left data -> ancilla) CX(right data -> ancilla) [X: H data]
/// M ancillas, R ancillas; then [X: H data] M data.
Circuit build_repetition_code(std::uint32_t n_qubits, std::uint32_t rounds, Basis basis,
                              const GateTimingTable &timing, RepetitionCodeOptions options = {});

/// Detector list of the circuit, round-major and ancilla-minor.
std::vector<DetectorId> enumerate_detectors(const Circuit &circuit);

/// Line-oriented text form; see docs/formats.md.
void write_circuit(std::ostream &out, const Circuit &circuit);
std::string circuit_to_string(const Circuit &circuit);
Circuit parse_circuit(std::istream &in);
Circuit parse_circuit(const std::string &text);

}  // namespace paems
