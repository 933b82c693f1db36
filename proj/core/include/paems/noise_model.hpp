#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "paems/circuit.hpp"

namespace paems {

enum class ModelKind : std::uint8_t { PAEMS, Circuit, CodeCapacity, Phenomenological, SD6, SI1000 };

const char *model_kind_name(ModelKind kind);
/// Accepts the canonical names plus the short aliases paems, circuit, cc, phe, sd6, si1000.
ModelKind parse_model_kind(std::string_view name);

/// Per-qubit error parameters. Times in microseconds; t1/t2 may be +inf.
struct QubitParams {
    double t1_us = INFINITY;
    double t2_us = INFINITY;
    double f1q = 1.0;
    double p_init = 0;
    double p_reset = 0;
    double p_readout = 0;
    double p_leak = 0;
    double p_seep = 0;

    bool operator==(const QubitParams &) const = default;
};

/// Two-qubit gate fidelity of the coupler between chain-adjacent qubits a, b.
struct CouplerParams {
    std::uint32_t a = 0;
    std::uint32_t b = 1;
    double f2q = 1.0;

    bool operator==(const CouplerParams &) const = default;
};

/// Where leakage trials are attached.
enum class LeakSites : std::uint8_t { TwoQubitGates, AllGates };
/// Where seepage trials are attached.
enum class SeepSites : std::uint8_t { LayerBoundaryAndReset, LayerBoundary };

struct NoiseModel {
    ModelKind kind = ModelKind::PAEMS;
    std::vector<QubitParams> qubits;
    std::vector<CouplerParams> couplers;
    /// Physical error rate of baseline kinds.
    double p = 0;
    LeakSites leak_sites = LeakSites::TwoQubitGates;
    SeepSites seep_sites = SeepSites::LayerBoundaryAndReset;

    static NoiseModel baseline(ModelKind kind, double p);
    /// Identical parameters on every qubit and coupler of an n-qubit chain.
    static NoiseModel uniform(std::uint32_t n_qubits, const QubitParams &qubit, double f2q);

    /// Coupler for the (unordered) pair, or nullptr.
    const CouplerParams *coupler(std::uint32_t a, std::uint32_t b) const;
    CouplerParams *coupler(std::uint32_t a, std::uint32_t b);

    /// Throws ValidationError naming the offending qubit or coupler.
    void validate() const;
    void validate_for(const Circuit &circuit) const;

    bool operator==(const NoiseModel &) const = default;
};

struct PauliRates {
    double px = 0;
    double py = 0;
    double pz = 0;
};

/// Pauli-twirled amplitude and phase damping over t_ns:
/// px = py = (1 - e^{-t/T1})/4, pz = (1 - e^{-t/T2})/2 - px, clamped at 0.
PauliRates adc_from_decoherence(double t1_us, double t2_us, double t_ns);

/// Depolarizing probability from average gate fidelity: p = 3/2 (1-f) for one
/// qubit, 5/4 (1-f) for two, clamped to [0, 3/4] and [0, 15/16].
double sdc_from_fidelity(double f, int arity);

enum class Channel : std::uint8_t { ADC, SDC1, SDC2, FlipX, LeakTrial, SeepTrial, ReadoutFlip };

/// Which circuit mechanism produced an event; baseline uniformity is per source.
enum class EventSource : std::uint8_t {
    Decoherence,
    Gate1,
    Gate2,
    Idle,
    ResonatorIdle,
    Init,
    Reset,
    Measure,
    DataRound,
    Leak,
    Seep,
};

const char *channel_name(Channel c);
const char *event_source_name(EventSource s);

inline constexpr std::uint32_t kNoQubit = 0xFFFFFFFFu;

struct ErrorEvent {
    Channel channel = Channel::FlipX;
    EventSource source = EventSource::Decoherence;
    std::uint32_t q0 = 0;
    std::uint32_t q1 = kNoQubit;
    /// Total probability that the event does something.
    double p = 0;
    /// ADC components (px + py + pz == p); zero for other channels.
    PauliRates rates{};

    bool operator==(const ErrorEvent &) const = default;
};

/// Events attached to one circuit layer, in application order:
/// transitions (seep/leak) -> ideal gates -> errors -> measurement with readout flips.
struct LayerEvents {
    std::vector<ErrorEvent> transitions;
    std::vector<ErrorEvent> errors;
    std::vector<ErrorEvent> readout;

    bool operator==(const LayerEvents &) const = default;
};

struct ErrorSchedule {
    std::vector<LayerEvents> layers;

    std::size_t count(Channel c) const;
    /// Canonical text dump (stable across runs).
    std::string dump() const;
    bool operator==(const ErrorSchedule &) const = default;
};

ErrorSchedule compile_schedule(const Circuit &circuit, const NoiseModel &model);

/// Per-qubit parameter kinds, in vector order.
enum class Param : std::uint8_t { T1, T2, F1q, PInit, PReset, PReadout, PLeak, PSeep };
inline constexpr std::size_t kNumQubitParams = 8;
const char *param_name(Param p);

enum class QubitSelect : std::uint8_t { None, All, Data, Ancilla };

/// Selects which parameters an optimizer sees.
///
/// Vector layout: for each qubit in chain order, each selected kind in Param
/// order; then f2q of each coupler (model order) if selected. Full mask on a
/// 21-qubit chain: 21*8 + 20 = 188 entries.
struct ParamMask {
    std::array<QubitSelect, kNumQubitParams> qubit{};
    bool f2q = false;

    static ParamMask none() { return {}; }
    static ParamMask full();
    ParamMask &set(Param p, QubitSelect s) {
        qubit[static_cast<std::size_t>(p)] = s;
        return *this;
    }
    QubitSelect get(Param p) const { return qubit[static_cast<std::size_t>(p)]; }
    bool selects(Param p, std::uint32_t qubit_index) const;
    bool empty() const;

    bool operator==(const ParamMask &) const = default;
};

std::size_t parameter_count(const NoiseModel &model, const ParamMask &mask);
/// Unconstrained coordinates: log for times, logit for probabilities and infidelities.
std::vector<double> parameter_vector(const NoiseModel &model, const ParamMask &mask);
NoiseModel apply_vector(const NoiseModel &model, const ParamMask &mask, std::span<const double> vector);
std::vector<std::string> parameter_names(const NoiseModel &model, const ParamMask &mask);

/// Probabilities below this are encoded at the floor and decode to exactly 0;
/// the upper end saturates at 1 - kProbabilityFloor so decoded values stay valid.
inline constexpr double kProbabilityFloor = 1e-10;
double encode_probability(double p);
double decode_probability(double y);

}  // namespace paems
