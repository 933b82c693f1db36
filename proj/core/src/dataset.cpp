#include "paems/dataset.hpp"

#include "paems/errors.hpp"

namespace paems {

std::vector<std::uint8_t> Dataset::shot_row(std::size_t shot) const {
    std::vector<std::uint8_t> row((n_measurements() + 7) / 8, 0);
    for (std::size_t m = 0; m < n_measurements(); m++) {
        if (get(shot, m)) {
            row[m / 8] |= static_cast<std::uint8_t>(1u << (m % 8));
        }
    }
    return row;
}

void Dataset::set_shot_row(std::size_t shot, std::span<const std::uint8_t> row) {
    for (std::size_t m = 0; m < n_measurements(); m++) {
        set(shot, m, (row[m / 8] >> (m % 8)) & 1);
    }
}

Dataset Dataset::slice(std::size_t first, std::size_t count) const {
    if (first + count > n_shots()) {
        throw ValidationError("shot slice out of range");
    }
    Dataset out(n_measurements(), count);
    if (first % 64 == 0) {
        for (std::size_t m = 0; m < n_measurements(); m++) {
            auto src = bits_.row(m);
            auto dst = out.bits_.row(m);
            for (std::size_t w = 0; w < dst.size(); w++) {
                dst[w] = src[first / 64 + w];
            }
            if (!dst.empty()) dst.back() &= out.bits_.tail_mask();
        }
        return out;
    }
    for (std::size_t m = 0; m < n_measurements(); m++) {
        for (std::size_t s = 0; s < count; s++) {
            out.set(s, m, get(first + s, m));
        }
    }
    return out;
}

Dataset Dataset::concat(std::span<const Dataset> parts) {
    if (parts.empty()) {
        return {};
    }
    std::size_t total = 0;
    for (const Dataset &p : parts) {
        if (p.n_measurements() != parts[0].n_measurements()) {
            throw ValidationError("cannot concatenate datasets with different measurement counts");
        }
        total += p.n_shots();
    }
    Dataset out(parts[0].n_measurements(), total);
    std::size_t offset = 0;
    for (const Dataset &p : parts) {
        for (std::size_t m = 0; m < p.n_measurements(); m++) {
            for (std::size_t s = 0; s < p.n_shots(); s++) {
                if (p.get(s, m)) out.set(offset + s, m, true);
            }
        }
        offset += p.n_shots();
    }
    return out;
}

}  // namespace paems
