#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace paems {

/// Dense row-major bit matrix; each row is packed into 64-bit words.
///
/// Padding bits past `cols()` are kept zero so that popcounts over whole
/// rows are exact.
class BitTable {
   public:
    BitTable() = default;
    BitTable(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), words_per_row_((cols + 63) / 64), data_(rows * words_per_row_, 0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t words_per_row() const { return words_per_row_; }

    bool get(std::size_t row, std::size_t col) const {
        return (data_[row * words_per_row_ + col / 64] >> (col % 64)) & 1;
    }
    void set(std::size_t row, std::size_t col, bool value) {
        std::uint64_t &w = data_[row * words_per_row_ + col / 64];
        std::uint64_t bit = std::uint64_t{1} << (col % 64);
        w = value ? (w | bit) : (w & ~bit);
    }

    std::span<std::uint64_t> row(std::size_t r) { return {data_.data() + r * words_per_row_, words_per_row_}; }
    std::span<const std::uint64_t> row(std::size_t r) const {
        return {data_.data() + r * words_per_row_, words_per_row_};
    }

    std::size_t row_popcount(std::size_t r) const {
        std::size_t n = 0;
        for (std::uint64_t w : row(r)) {
            n += static_cast<std::size_t>(std::popcount(w));
        }
        return n;
    }

    /// Mask of valid bits in the last word of each row.
    std::uint64_t tail_mask() const {
        std::size_t rem = cols_ % 64;
        return rem == 0 ? ~std::uint64_t{0} : (std::uint64_t{1} << rem) - 1;
    }

    std::size_t memory_bytes() const { return data_.size() * sizeof(std::uint64_t); }

    bool operator==(const BitTable &other) const = default;

   private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t words_per_row_ = 0;
    std::vector<std::uint64_t> data_;
};

}  // namespace paems
