#include "paems/oracle.hpp"

#include <complex>
#include <random>
#include <vector>

#include "paems/errors.hpp"

namespace paems {

namespace {

using Amp = std::complex<double>;

class StateVector {
   public:
    explicit StateVector(std::uint32_t n) : n_(n), amp_(std::size_t{1} << n), leaked_(n, false) {}

    void reset_all() {
        std::fill(amp_.begin(), amp_.end(), Amp{});
        amp_[0] = 1;
        std::fill(leaked_.begin(), leaked_.end(), false);
    }

    bool leaked(std::uint32_t q) const { return leaked_[q]; }
    void set_leaked(std::uint32_t q, bool v) { leaked_[q] = v; }

    void x(std::uint32_t q) {
        std::size_t bit = std::size_t{1} << q;
        for (std::size_t i = 0; i < amp_.size(); i++) {
            if (!(i & bit)) std::swap(amp_[i], amp_[i | bit]);
        }
    }

    void z(std::uint32_t q) {
        std::size_t bit = std::size_t{1} << q;
        for (std::size_t i = 0; i < amp_.size(); i++) {
            if (i & bit) amp_[i] = -amp_[i];
        }
    }

    void h(std::uint32_t q) {
        std::size_t bit = std::size_t{1} << q;
        const double r = 1 / std::sqrt(2.0);
        for (std::size_t i = 0; i < amp_.size(); i++) {
            if (i & bit) continue;
            Amp a = amp_[i];
            Amp b = amp_[i | bit];
            amp_[i] = (a + b) * r;
            amp_[i | bit] = (a - b) * r;
        }
    }

    void cx(std::uint32_t c, std::uint32_t t) {
        std::size_t cb = std::size_t{1} << c;
        std::size_t tb = std::size_t{1} << t;
        for (std::size_t i = 0; i < amp_.size(); i++) {
            if ((i & cb) && !(i & tb)) std::swap(amp_[i], amp_[i | tb]);
        }
    }

    /// Projective Z measurement; collapses and renormalizes.
    bool measure(std::uint32_t q, double u) {
        std::size_t bit = std::size_t{1} << q;
        double p1 = 0;
        for (std::size_t i = 0; i < amp_.size(); i++) {
            if (i & bit) p1 += std::norm(amp_[i]);
        }
        bool outcome = u < p1;
        double keep = outcome ? p1 : 1 - p1;
        double scale = 1 / std::sqrt(keep);
        for (std::size_t i = 0; i < amp_.size(); i++) {
            if (static_cast<bool>(i & bit) == outcome) {
                amp_[i] *= scale;
            } else {
                amp_[i] = 0;
            }
        }
        return outcome;
    }

    void pauli(std::uint32_t q, unsigned code) {
        if (code & 1) x(q);
        if (code & 2) z(q);
    }

   private:
    std::uint32_t n_;
    std::vector<Amp> amp_;
    std::vector<bool> leaked_;
};

class Runner {
   public:
    Runner(std::uint32_t n, std::uint64_t seed) : psi_(n), rng_(seed) {}

    double unit() { return uni_(rng_); }
    bool coin() { return unit() < 0.5; }
    bool bernoulli(double p) { return p > 0 && unit() < p; }

    StateVector &psi() { return psi_; }

    void transition(const ErrorEvent &e) {
        std::uint32_t q = e.q0;
        if (e.channel == Channel::LeakTrial) {
            if (!psi_.leaked(q) && bernoulli(e.p)) {
                if (psi_.measure(q, unit())) psi_.x(q);
                psi_.set_leaked(q, true);
            }
        } else if (e.channel == Channel::SeepTrial) {
            if (psi_.leaked(q) && bernoulli(e.p)) {
                psi_.set_leaked(q, false);
                if (coin()) psi_.x(q);
            }
        }
    }

    void gate(const Operation &op) {
        std::uint32_t q = op.targets[0].index;
        switch (op.kind) {
            case OpKind::Reset:
                if (!psi_.leaked(q) && psi_.measure(q, unit())) psi_.x(q);
                break;
            case OpKind::Hadamard:
                if (!psi_.leaked(q)) psi_.h(q);
                break;
            case OpKind::TwoQubitEntangler: {
                std::uint32_t t = op.targets[1].index;
                bool lc = psi_.leaked(q);
                bool lt = psi_.leaked(t);
                if (!lc && !lt) {
                    psi_.cx(q, t);
                } else if (lc != lt) {
                    std::uint32_t partner = lc ? t : q;
                    if (coin()) psi_.x(partner);
                    if (coin()) psi_.z(partner);
                }
                break;
            }
            default:
                break;
        }
    }

    void pauli_on(std::uint32_t q, unsigned code) {
        if (q != kNoQubit && !psi_.leaked(q)) psi_.pauli(q, code);
    }

    void error(const ErrorEvent &e) {
        double u = unit();
        if (!(u < e.p)) return;
        switch (e.channel) {
            case Channel::ADC:
                if (u < e.rates.px) {
                    pauli_on(e.q0, 1);
                } else if (u < e.rates.px + e.rates.py) {
                    pauli_on(e.q0, 3);
                } else {
                    pauli_on(e.q0, 2);
                }
                break;
            case Channel::FlipX:
                pauli_on(e.q0, 1);
                break;
            case Channel::SDC1:
                pauli_on(e.q0, 1 + static_cast<unsigned>(std::min(unit() * 3, 2.0)));
                break;
            case Channel::SDC2: {
                unsigned k = 1 + static_cast<unsigned>(std::min(unit() * 15, 14.0));
                pauli_on(e.q0, k >> 2);
                pauli_on(e.q1, k & 3);
                break;
            }
            default:
                throw ValidationError("unexpected channel in error phase");
        }
    }

    bool measure(std::uint32_t q, double p_flip) {
        if (psi_.leaked(q)) return coin();
        bool bit = psi_.measure(q, unit());
        return bernoulli(p_flip) ? !bit : bit;
    }

   private:
    StateVector psi_;
    std::mt19937_64 rng_;
    std::uniform_real_distribution<double> uni_{0.0, 1.0};
};

}  // namespace

Dataset oracle_sample(const Circuit &circuit, const ErrorSchedule &schedule, std::uint64_t shots,
                      std::uint64_t seed) {
    if (circuit.n_qubits() > kOracleMaxQubits) {
        throw ValidationError("reference oracle supports at most " + std::to_string(kOracleMaxQubits) +
                              " qubits, circuit has " + std::to_string(circuit.n_qubits()));
    }
    if (schedule.layers.size() != circuit.layers().size()) {
        throw ValidationError("schedule does not match circuit layer count");
    }
    Dataset out(circuit.n_measurements(), shots);
    Runner run(circuit.n_qubits(), seed);
    for (std::uint64_t s = 0; s < shots; s++) {
        run.psi().reset_all();
        std::size_t m = 0;
        for (std::size_t li = 0; li < circuit.layers().size(); li++) {
            const Layer &layer = circuit.layers()[li];
            const LayerEvents &ev = schedule.layers[li];
            for (const ErrorEvent &e : ev.transitions) run.transition(e);
            for (const Operation &op : layer.operations) run.gate(op);
            for (const ErrorEvent &e : ev.errors) run.error(e);
            for (const Operation &op : layer.operations) {
                if (op.kind != OpKind::Measure) continue;
                std::uint32_t q = op.targets[0].index;
                double p = 0;
                for (const ErrorEvent &e : ev.readout) {
                    if (e.q0 == q) p = e.p;
                }
                if (run.measure(q, p)) out.set(s, m, true);
                m++;
            }
        }
    }
    return out;
}

}  // namespace paems
