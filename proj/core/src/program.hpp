#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "paems/circuit.hpp"
#include "paems/errors.hpp"
#include "paems/noise_model.hpp"

namespace paems {

/// Flattened (circuit, schedule) pair shared by the frame sampler and the
/// reference oracle, so both walk exactly the same event sequence.
enum class Step : std::uint8_t { Seep, Leak, Reset, Hadamard, Cx, Adc, Sdc1, Sdc2, FlipX, Measure };

struct Instr {
    Step step;
    std::uint32_t q0;
    std::uint32_t q1;
    /// Event probability (readout flip probability for Measure).
    double p;
    /// ADC: a hit is X below cut_x, Y below cut_y, Z otherwise (fractions of p).
    double cut_x;
    double cut_y;
    double inv_log_q;
    /// (1-p)^256: a uniform at or below this means no hit in a 256-lane block.
    double miss_block;
    std::uint32_t measurement;
};

inline Instr make_instr(Step step, std::uint32_t q0, std::uint32_t q1, double p) {
    Instr in{step, q0, q1, p, 0, 0, 0, 0, 0};
    if (p > 0 && p < 1) {
        in.inv_log_q = 1 / std::log1p(-p);
        in.miss_block = std::exp(256 * std::log1p(-p));
    }
    return in;
}

inline std::vector<Instr> compile_program(const Circuit &circuit, const ErrorSchedule &schedule) {
    if (schedule.layers.size() != circuit.layers().size()) {
        throw ValidationError("schedule has " + std::to_string(schedule.layers.size()) + " layers, circuit has " +
                              std::to_string(circuit.layers().size()));
    }
    std::vector<Instr> prog;
    std::uint32_t next_measurement = 0;
    for (std::size_t li = 0; li < circuit.layers().size(); li++) {
        const Layer &layer = circuit.layers()[li];
        const LayerEvents &ev = schedule.layers[li];
        for (const ErrorEvent &e : ev.transitions) {
            if (e.channel == Channel::SeepTrial) {
                prog.push_back(make_instr(Step::Seep, e.q0, kNoQubit, e.p));
            } else if (e.channel == Channel::LeakTrial) {
                prog.push_back(make_instr(Step::Leak, e.q0, kNoQubit, e.p));
            } else {
                throw ValidationError("only seep/leak trials may appear in the transition phase");
            }
        }
        for (const Operation &op : layer.operations) {
            switch (op.kind) {
                case OpKind::Reset:
                    prog.push_back(make_instr(Step::Reset, op.targets[0].index, kNoQubit, 0));
                    break;
                case OpKind::Hadamard:
                    prog.push_back(make_instr(Step::Hadamard, op.targets[0].index, kNoQubit, 0));
                    break;
                case OpKind::TwoQubitEntangler:
                    prog.push_back(make_instr(Step::Cx, op.targets[0].index, op.targets[1].index, 0));
                    break;
                case OpKind::Idle:
                case OpKind::Measure:
                    break;
            }
        }
        for (const ErrorEvent &e : ev.errors) {
            switch (e.channel) {
                case Channel::ADC: {
                    Instr in = make_instr(Step::Adc, e.q0, kNoQubit, e.p);
                    if (e.p > 0) {
                        in.cut_x = e.rates.px / e.p;
                        in.cut_y = (e.rates.px + e.rates.py) / e.p;
                    }
                    prog.push_back(in);
                    break;
                }
                case Channel::SDC1:
                    prog.push_back(make_instr(Step::Sdc1, e.q0, kNoQubit, e.p));
                    break;
                case Channel::SDC2:
                    prog.push_back(make_instr(Step::Sdc2, e.q0, e.q1, e.p));
                    break;
                case Channel::FlipX:
                    prog.push_back(make_instr(Step::FlipX, e.q0, kNoQubit, e.p));
                    break;
                default:
                    throw ValidationError(std::string("channel ") + channel_name(e.channel) +
                                          " may not appear in the error phase");
            }
        }
        for (const Operation &op : layer.operations) {
            if (op.kind != OpKind::Measure) continue;
            std::uint32_t q = op.targets[0].index;
            double p = 0;
            for (const ErrorEvent &e : ev.readout) {
                if (e.q0 == q) p = e.p;
            }
            Instr in = make_instr(Step::Measure, q, kNoQubit, p);
            in.measurement = next_measurement++;
            prog.push_back(in);
        }
    }
    return prog;
}

}  // namespace paems
