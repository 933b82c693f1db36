#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "paems/bit_table.hpp"

namespace paems {

/// Measurement outcomes of many shots.
///
/// Stored measurement-major (one bit row per measurement site, one column per
/// shot) so detector extraction and pair statistics reduce to word-wide XOR,
/// AND, and popcount. File formats are shot-major; see io.hpp.
class Dataset {
   public:
    Dataset() = default;
    Dataset(std::size_t n_measurements, std::size_t n_shots) : bits_(n_measurements, n_shots) {}
    explicit Dataset(BitTable bits) : bits_(std::move(bits)) {}

    std::size_t n_measurements() const { return bits_.rows(); }
    std::size_t n_shots() const { return bits_.cols(); }

    bool get(std::size_t shot, std::size_t measurement) const { return bits_.get(measurement, shot); }
    void set(std::size_t shot, std::size_t measurement, bool v) { bits_.set(measurement, shot, v); }

    const BitTable &bits() const { return bits_; }
    BitTable &bits() { return bits_; }

    /// Packed shot row: bit m lives at byte m/8, bit m%8 (LSB first).
    std::vector<std::uint8_t> shot_row(std::size_t shot) const;
    void set_shot_row(std::size_t shot, std::span<const std::uint8_t> row);

    /// Shots [first, first + count).
    Dataset slice(std::size_t first, std::size_t count) const;
    /// Concatenates along the shot axis; all parts need the same measurement count.
    static Dataset concat(std::span<const Dataset> parts);

    bool operator==(const Dataset &) const = default;

   private:
    BitTable bits_;
};

/// A run of consecutive shots in shot-major packed form, as delivered by the
/// streaming sampler. Row stride is (n_measurements + 7) / 8 bytes.
struct ShotBatch {
    std::size_t first_shot = 0;
    std::size_t n_shots = 0;
    std::size_t n_measurements = 0;
    std::vector<std::uint8_t> rows;

    std::size_t stride() const { return (n_measurements + 7) / 8; }
    std::span<const std::uint8_t> row(std::size_t i) const { return {rows.data() + i * stride(), stride()}; }
};

}  // namespace paems
