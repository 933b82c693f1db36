#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace paems {

/// Philox4x32-10 counter-based block cipher (Salmon et al., SC'11).
///
/// Stateless: the output is a pure function of (counter, key), which is what
/// makes shot-parallel sampling reproducible under any partitioning.
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter apply(Counter ctr, Key key) {
        for (int round = 0; round < 10; round++) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = {
                static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0),
            };
        }
        return ctr;
    }
};

/// SplitMix64 finalizer; used to derive decorrelated sub-seeds.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
    return mix64(seed ^ mix64(tag + 0x632BE59BD9B4E019ull));
}

/// Sequential view of one Philox stream: key = seed, counter = (ordinal, stream).
///
/// Draw k of stream s is the same value no matter which thread produces it or
/// how many other streams were consumed first.
class PhiloxStream {
   public:
    PhiloxStream(std::uint64_t seed, std::uint64_t stream)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          stream_lo_(static_cast<std::uint32_t>(stream)),
          stream_hi_(static_cast<std::uint32_t>(stream >> 32)) {}

    std::uint64_t next_u64() {
        if (pos_ == 2) {
            refill();
        }
        return buffer_[pos_++];
    }

    /// Uniform on [0, 1), 53-bit resolution.
    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on (0, 1]; safe to pass to log().
    double next_open_unit() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    std::uint64_t draws() const { return ordinal_ * 2 - (2 - pos_); }

   private:
    void refill() {
        Philox4x32::Counter ctr{
            static_cast<std::uint32_t>(ordinal_), static_cast<std::uint32_t>(ordinal_ >> 32), stream_lo_,
            stream_hi_};
        auto out = Philox4x32::apply(ctr, key_);
        buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
        buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
        ordinal_++;
        pos_ = 0;
    }

    Philox4x32::Key key_;
    std::uint32_t stream_lo_;
    std::uint32_t stream_hi_;
    std::uint64_t ordinal_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int pos_ = 2;
};

/// xoshiro256++ seeded from a Philox block; the sampler's inner-loop generator.
///
/// Philox fixes which 256-bit state each (seed, stream) pair starts from, so
/// reproducibility is still a function of (seed, stream) alone.
class Xoshiro256pp {
   public:
    Xoshiro256pp(std::uint64_t seed, std::uint64_t stream) {
        PhiloxStream init(seed, stream);
        for (auto &w : s_) w = init.next_u64();
        if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
    }

    std::uint64_t next_u64() {
        std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double next_open_unit() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

   private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::array<std::uint64_t, 4> s_{};
};

/// Number of failures before the first success of a Bernoulli(p) sequence,
/// given inv_log_q = 1 / log(1 - p). Saturates at 2^62.
inline std::uint64_t geometric_gap(double open_unit, double inv_log_q) {
    double g = std::floor(std::log(open_unit) * inv_log_q);
    if (!(g < 4.0e18)) {
        return std::uint64_t{1} << 62;
    }
    return static_cast<std::uint64_t>(g);
}

}  // namespace paems
