#include "paems/sampler.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <exception>
#include <thread>

#include "paems/errors.hpp"
#include "paems/rng.hpp"
#include "program.hpp"

namespace paems {

namespace {

constexpr std::size_t kWords = kBlockLanes / 64;
using Lanes = std::array<std::uint64_t, kWords>;
using BlockRng = Xoshiro256pp;

bool any(const Lanes &l) {
    std::uint64_t acc = 0;
    for (auto w : l) acc |= w;
    return acc != 0;
}

/// One 256-lane block of Pauli frames plus leakage flags.
class BlockSim {
   public:
    BlockSim(const Circuit &circuit, const std::vector<Instr> &program)
        : program_(program),
          x_(circuit.n_qubits()),
          z_(circuit.n_qubits()),
          leak_(circuit.n_qubits()),
          record_(circuit.n_measurements()) {}

    const std::vector<Lanes> &record() const { return record_; }

    void run(std::uint64_t seed, std::uint64_t block) {
        BlockRng rng(seed, block);
        std::fill(x_.begin(), x_.end(), Lanes{});
        std::fill(z_.begin(), z_.end(), Lanes{});
        std::fill(leak_.begin(), leak_.end(), Lanes{});
        Lanes hits;
        for (const Instr &in : program_) {
            switch (in.step) {
                case Step::Seep: {
                    Lanes &lk = leak_[in.q0];
                    if (in.p <= 0 || !any(lk)) break;
                    bernoulli(rng, in, hits);
                    for (std::size_t w = 0; w < kWords; w++) {
                        std::uint64_t s = hits[w] & lk[w];
                        if (!s) continue;
                        lk[w] &= ~s;
                        x_[in.q0][w] = (x_[in.q0][w] & ~s) | (rng.next_u64() & s);
                        z_[in.q0][w] = (z_[in.q0][w] & ~s) | (rng.next_u64() & s);
                    }
                    break;
                }
                case Step::Leak: {
                    if (in.p <= 0) break;
                    bernoulli(rng, in, hits);
                    for (std::size_t w = 0; w < kWords; w++) leak_[in.q0][w] |= hits[w];
                    break;
                }
                case Step::Reset:
                    x_[in.q0] = Lanes{};
                    z_[in.q0] = Lanes{};
                    break;
                case Step::Hadamard:
                    std::swap(x_[in.q0], z_[in.q0]);
                    break;
                case Step::Cx:
                    cx(rng, in.q0, in.q1);
                    break;
                case Step::Adc:
                case Step::Sdc1:
                case Step::Sdc2:
                case Step::FlipX:
                    if (in.p <= 0) break;
                    pauli_error(rng, in);
                    break;
                case Step::Measure: {
                    Lanes &rec = record_[in.measurement];
                    const Lanes &lk = leak_[in.q0];
                    rec = x_[in.q0];
                    if (in.p > 0) {
                        bernoulli(rng, in, hits);
                        for (std::size_t w = 0; w < kWords; w++) rec[w] ^= hits[w];
                    }
                    if (any(lk)) {
                        for (std::size_t w = 0; w < kWords; w++) {
                            rec[w] = (rec[w] & ~lk[w]) | (rng.next_u64() & lk[w]);
                        }
                    }
                    break;
                }
            }
        }
    }

   private:
    static void bernoulli(BlockRng &rng, const Instr &in, Lanes &hits) {
        hits = Lanes{};
        if (in.p >= 1) {
            hits.fill(~std::uint64_t{0});
            return;
        }
        double u = rng.next_open_unit();
        if (u <= in.miss_block) return;
        std::uint64_t pos = geometric_gap(u, in.inv_log_q);
        while (pos < kBlockLanes) {
            hits[pos / 64] |= std::uint64_t{1} << (pos % 64);
            pos += 1 + geometric_gap(rng.next_open_unit(), in.inv_log_q);
        }
    }

    void apply_pauli(std::uint32_t q, std::size_t lane, unsigned code) {
        std::uint64_t bit = std::uint64_t{1} << (lane % 64);
        if (code & 1) x_[q][lane / 64] ^= bit;
        if (code & 2) z_[q][lane / 64] ^= bit;
    }

    void pauli_error(BlockRng &rng, const Instr &in) {
        Lanes hits;
        bernoulli(rng, in, hits);
        for (std::size_t w = 0; w < kWords; w++) {
            std::uint64_t h = hits[w];
            while (h) {
                std::size_t lane = w * 64 + static_cast<std::size_t>(std::countr_zero(h));
                h &= h - 1;
                switch (in.step) {
                    case Step::FlipX:
                        apply_pauli(in.q0, lane, 1);
                        break;
                    case Step::Adc: {
                        double u = rng.next_unit();
                        apply_pauli(in.q0, lane, u < in.cut_x ? 1u : u < in.cut_y ? 3u : 2u);
                        break;
                    }
                    case Step::Sdc1: {
                        unsigned k = 1 + static_cast<unsigned>(std::min(rng.next_unit() * 3, 2.0));
                        apply_pauli(in.q0, lane, k);
                        break;
                    }
                    case Step::Sdc2: {
                        unsigned k = 1 + static_cast<unsigned>(std::min(rng.next_unit() * 15, 14.0));
                        apply_pauli(in.q0, lane, k >> 2);
                        apply_pauli(in.q1, lane, k & 3);
                        break;
                    }
                    default:
                        break;
                }
            }
        }
    }

    void cx(BlockRng &rng, std::uint32_t c, std::uint32_t t) {
        const Lanes &lc = leak_[c];
        const Lanes &lt = leak_[t];
        bool leaked = any(lc) || any(lt);
        for (std::size_t w = 0; w < kWords; w++) {
            std::uint64_t ok = ~(lc[w] | lt[w]);
            x_[t][w] ^= x_[c][w] & ok;
            z_[c][w] ^= z_[t][w] & ok;
        }
        if (!leaked) return;
        for (std::size_t w = 0; w < kWords; w++) {
            std::uint64_t mc = lt[w] & ~lc[w];
            std::uint64_t mt = lc[w] & ~lt[w];
            if (mc) {
                x_[c][w] ^= rng.next_u64() & mc;
                z_[c][w] ^= rng.next_u64() & mc;
            }
            if (mt) {
                x_[t][w] ^= rng.next_u64() & mt;
                z_[t][w] ^= rng.next_u64() & mt;
            }
        }
    }

    const std::vector<Instr> &program_;
    std::vector<Lanes> x_;
    std::vector<Lanes> z_;
    std::vector<Lanes> leak_;
    std::vector<Lanes> record_;
};

unsigned effective_threads(unsigned requested, std::size_t blocks) {
    unsigned t = std::max(1u, requested);
    return static_cast<unsigned>(std::min<std::size_t>(t, std::max<std::size_t>(1, blocks)));
}

/// Runs fn(first_block, end_block, sim) over [begin, end) split into contiguous chunks.
template <typename Fn>
void parallel_blocks(const Circuit &circuit, const std::vector<Instr> &program, std::size_t begin, std::size_t end,
                     unsigned threads, Fn fn) {
    std::size_t n = end - begin;
    unsigned t = effective_threads(threads, n);
    if (t == 1) {
        BlockSim sim(circuit, program);
        fn(begin, end, sim);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(t);
    for (unsigned i = 0; i < t; i++) {
        std::size_t lo = begin + n * i / t;
        std::size_t hi = begin + n * (i + 1) / t;
        pool.emplace_back([&, i, lo, hi] {
            try {
                BlockSim sim(circuit, program);
                fn(lo, hi, sim);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        });
    }
    for (auto &th : pool) th.join();
    for (auto &e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

void check_config(const SamplerConfig &cfg) {
    if (cfg.shots == 0) {
        throw ValidationError("shot count must be positive");
    }
}

}  // namespace

Dataset sample(const Circuit &circuit, const ErrorSchedule &schedule, const SamplerConfig &cfg) {
    check_config(cfg);
    std::vector<Instr> program = compile_program(circuit, schedule);
    Dataset out(circuit.n_measurements(), cfg.shots);
    BitTable &bits = out.bits();
    const std::size_t wpr = bits.words_per_row();
    const std::uint64_t tail = bits.tail_mask();
    const std::size_t n_blocks = (cfg.shots + kBlockLanes - 1) / kBlockLanes;
    parallel_blocks(circuit, program, 0, n_blocks, cfg.threads, [&](std::size_t lo, std::size_t hi, BlockSim &sim) {
        for (std::size_t b = lo; b < hi; b++) {
            sim.run(cfg.master_seed, b);
            const auto &rec = sim.record();
            for (std::size_t m = 0; m < rec.size(); m++) {
                auto row = bits.row(m);
                for (std::size_t w = 0; w < kWords; w++) {
                    std::size_t idx = b * kWords + w;
                    if (idx >= wpr) break;
                    row[idx] = idx + 1 == wpr ? rec[m][w] & tail : rec[m][w];
                }
            }
        }
    });
    return out;
}

StreamSummary sample_streaming(const Circuit &circuit, const ErrorSchedule &schedule, const SamplerConfig &cfg,
                               const std::function<void(const ShotBatch &)> &sink) {
    check_config(cfg);
    if (cfg.batch_size == 0) {
        throw ValidationError("batch size must be positive");
    }
    std::vector<Instr> program = compile_program(circuit, schedule);
    const std::size_t n_meas = circuit.n_measurements();
    StreamSummary summary;
    for (std::uint64_t s0 = 0; s0 < cfg.shots; s0 += cfg.batch_size) {
        std::uint64_t s1 = std::min<std::uint64_t>(cfg.shots, s0 + cfg.batch_size);
        std::size_t b0 = s0 / kBlockLanes;
        std::size_t b1 = (s1 + kBlockLanes - 1) / kBlockLanes;
        ShotBatch batch;
        batch.first_shot = s0;
        batch.n_shots = s1 - s0;
        batch.n_measurements = n_meas;
        batch.rows.assign(batch.n_shots * batch.stride(), 0);
        const std::size_t stride = batch.stride();
        parallel_blocks(circuit, program, b0, b1, cfg.threads, [&](std::size_t lo, std::size_t hi, BlockSim &sim) {
            for (std::size_t b = lo; b < hi; b++) {
                sim.run(cfg.master_seed, b);
                const auto &rec = sim.record();
                std::uint64_t first = std::max<std::uint64_t>(s0, b * kBlockLanes);
                std::uint64_t last = std::min<std::uint64_t>(s1, (b + 1) * kBlockLanes);
                for (std::uint64_t s = first; s < last; s++) {
                    std::size_t lane = s - b * kBlockLanes;
                    std::uint8_t *row = batch.rows.data() + (s - s0) * stride;
                    for (std::size_t m = 0; m < n_meas; m++) {
                        if ((rec[m][lane / 64] >> (lane % 64)) & 1) {
                            row[m / 8] |= static_cast<std::uint8_t>(1u << (m % 8));
                        }
                    }
                }
            }
        });
        try {
            sink(batch);
        } catch (const std::exception &e) {
            summary.error = e.what();
            return summary;
        } catch (...) {
            summary.error = "unknown error in batch consumer";
            return summary;
        }
        summary.shots_delivered = s1;
    }
    summary.completed = true;
    return summary;
}

std::size_t sampler_state_bytes(const Circuit &circuit) {
    return (3 * circuit.n_qubits() + circuit.n_measurements()) * sizeof(Lanes);
}

}  // namespace paems
