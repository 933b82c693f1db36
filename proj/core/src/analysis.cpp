#include "paems/analysis.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <limits>

#include "numeric.hpp"
#include "paems/errors.hpp"

namespace paems {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::uint32_t abs_diff(std::uint32_t a, std::uint32_t b) { return a > b ? a - b : b - a; }

void check_same_geometry(const CorrelationReport &a, const CorrelationReport &b) {
    if (a.detectors.size() != b.detectors.size()) {
        throw ValidationError("correlation reports have " + std::to_string(a.detectors.size()) + " and " +
                              std::to_string(b.detectors.size()) + " detectors");
    }
    for (std::size_t i = 0; i < a.detectors.size(); i++) {
        if (a.detectors[i].ancilla != b.detectors[i].ancilla || a.detectors[i].round != b.detectors[i].round) {
            throw ValidationError("correlation reports disagree on detector " + std::to_string(i) + " geometry");
        }
    }
}

}  // namespace

std::size_t DetectionTensor::index_of(std::uint32_t ancilla, std::uint32_t round) const {
    for (std::size_t i = 0; i < detectors.size(); i++) {
        if (detectors[i].ancilla == ancilla && detectors[i].round == round) return i;
    }
    return std::numeric_limits<std::size_t>::max();
}

DetectionTensor extract_detections(const Dataset &dataset, const Circuit &circuit) {
    if (dataset.n_measurements() != circuit.n_measurements()) {
        throw ValidationError("dataset has " + std::to_string(dataset.n_measurements()) +
                              " measurements per shot, circuit expects " + std::to_string(circuit.n_measurements()));
    }
    DetectionTensor t;
    t.n_shots = dataset.n_shots();
    t.n_ancilla = circuit.n_ancilla();
    t.detectors = circuit.detectors();
    for (const DetectorId &d : t.detectors) t.n_rounds = std::max(t.n_rounds, d.round);
    t.events = BitTable(t.detectors.size(), t.n_shots);
    const BitTable &m = dataset.bits();
    for (std::size_t i = 0; i < t.detectors.size(); i++) {
        auto dst = t.events.row(i);
        for (std::uint32_t src_index : t.detectors[i].measurements) {
            auto src = m.row(src_index);
            for (std::size_t w = 0; w < dst.size(); w++) dst[w] ^= src[w];
        }
    }
    return t;
}

const char *sector_name(Sector s) {
    switch (s) {
        case Sector::Timelike:
            return "timelike";
        case Sector::Spacelike:
            return "spacelike";
        case Sector::Spacetime:
            return "spacetime";
        case Sector::LeakageTail:
            return "leakage-tail";
        case Sector::Other:
            return "other";
    }
    return "?";
}

Sector classify_pair(const DetectorId &a, const DetectorId &b) {
    std::uint32_t da = abs_diff(a.ancilla, b.ancilla);
    std::uint32_t dr = abs_diff(a.round, b.round);
    if (da == 0 && dr == 1) return Sector::Timelike;
    if (da == 1 && dr == 0) return Sector::Spacelike;
    if (da == 1 && dr == 1) return Sector::Spacetime;
    if (da <= 1 && dr >= 2) return Sector::LeakageTail;
    return Sector::Other;
}

SectorMap classify_sectors(std::span<const DetectorId> detectors) {
    SectorMap map;
    map.n = detectors.size();
    map.labels.assign(map.n * map.n, Sector::Other);
    for (std::size_t i = 0; i < map.n; i++) {
        for (std::size_t j = i + 1; j < map.n; j++) {
            Sector s = classify_pair(detectors[i], detectors[j]);
            map.labels[i * map.n + j] = s;
            map.labels[j * map.n + i] = s;
        }
    }
    return map;
}

SectorMap classify_sectors(const Circuit &circuit) { return classify_sectors(circuit.detectors()); }

double pair_correlation(double xi, double xj, double xixj) {
    if (std::abs(1 - 2 * xi) < kCorrelationEpsilon || std::abs(1 - 2 * xj) < kCorrelationEpsilon) {
        return kNaN;
    }
    double denom = 1 - 2 * xi - 2 * xj + 4 * xixj;
    if (std::abs(denom) < kCorrelationEpsilon) {
        return kNaN;
    }
    double arg = 1 - 4 * (xixj - xi * xj) / denom;
    return 0.5 - 0.5 * std::sqrt(std::max(0.0, arg));
}

CorrelationReport correlation_matrix(const DetectionTensor &tensor, CorrelationScope scope) {
    if (tensor.n_shots < 2) {
        throw ValidationError("correlation matrix needs at least 2 shots");
    }
    CorrelationReport r;
    r.n_shots = tensor.n_shots;
    r.detectors = tensor.detectors;
    r.sectors = classify_sectors(r.detectors);
    const std::size_t n = r.detectors.size();
    r.p.assign(n * n, kNaN);
    const double inv = 1.0 / static_cast<double>(tensor.n_shots);
    std::vector<double> mean(n);
    for (std::size_t i = 0; i < n; i++) {
        mean[i] = static_cast<double>(tensor.events.row_popcount(i)) * inv;
        r.p[i * n + i] = mean[i];
    }
    for (std::size_t i = 0; i < n; i++) {
        auto ri = tensor.events.row(i);
        for (std::size_t j = i + 1; j < n; j++) {
            if (scope == CorrelationScope::Sectors && r.sectors.at(i, j) == Sector::Other) continue;
            auto rj = tensor.events.row(j);
            std::uint64_t both = 0;
            for (std::size_t w = 0; w < ri.size(); w++) {
                both += static_cast<std::uint64_t>(std::popcount(ri[w] & rj[w]));
            }
            double v = pair_correlation(mean[i], mean[j], static_cast<double>(both) * inv);
            r.p[i * n + j] = v;
            r.p[j * n + i] = v;
        }
    }
    return r;
}

CorrelationReport average_reports(std::span<const CorrelationReport> reports) {
    if (reports.empty()) {
        throw ValidationError("no correlation reports to average");
    }
    for (const CorrelationReport &rep : reports) check_same_geometry(reports[0], rep);
    CorrelationReport out;
    out.detectors = reports[0].detectors;
    out.sectors = reports[0].sectors;
    const std::size_t cells = reports[0].p.size();
    out.p.assign(cells, kNaN);
    for (const CorrelationReport &rep : reports) out.n_shots += rep.n_shots;
    for (std::size_t c = 0; c < cells; c++) {
        CompensatedSum sum;
        std::size_t k = 0;
        for (const CorrelationReport &rep : reports) {
            if (!std::isnan(rep.p[c])) {
                sum.add(rep.p[c]);
                k++;
            }
        }
        if (k > 0) out.p[c] = sum.value() / static_cast<double>(k);
    }
    return out;
}

SectorDiff sector_difference(const CorrelationReport &a, const CorrelationReport &b) {
    check_same_geometry(a, b);
    SectorDiff d;
    std::array<CompensatedSum, kNumSectors> sums;
    const std::size_t n = a.n_detectors();
    for (std::size_t i = 0; i < n; i++) {
        for (std::size_t j = i + 1; j < n; j++) {
            if (!a.defined(i, j) || !b.defined(i, j)) continue;
            auto s = static_cast<std::size_t>(a.sector(i, j));
            double diff = std::abs(a.at(i, j) - b.at(i, j));
            sums[s].add(diff);
            d.max_abs[s] = std::max(d.max_abs[s], diff);
            d.n_pairs[s]++;
        }
    }
    for (std::size_t s = 0; s < kNumSectors; s++) {
        d.mean_abs[s] = d.n_pairs[s] ? sums[s].value() / static_cast<double>(d.n_pairs[s]) : 0.0;
    }
    return d;
}

SectorStats sector_stats(const CorrelationReport &report, Sector sector) {
    SectorStats st;
    CompensatedSum sum;
    const std::size_t n = report.n_detectors();
    for (std::size_t i = 0; i < n; i++) {
        for (std::size_t j = i + 1; j < n; j++) {
            if (report.sector(i, j) != sector || !report.defined(i, j)) continue;
            sum.add(report.at(i, j));
            st.count++;
        }
    }
    if (st.count == 0) return st;
    st.mean = sum.value() / static_cast<double>(st.count);
    CompensatedSum var;
    for (std::size_t i = 0; i < n; i++) {
        for (std::size_t j = i + 1; j < n; j++) {
            if (report.sector(i, j) != sector || !report.defined(i, j)) continue;
            double d = report.at(i, j) - st.mean;
            var.add(d * d);
        }
    }
    st.stddev = std::sqrt(var.value() / static_cast<double>(st.count));
    return st;
}

std::vector<double> detection_fraction(const DetectionTensor &tensor) {
    std::uint32_t rounds = 0;
    for (const DetectorId &d : tensor.detectors) {
        if (!d.is_final) rounds = std::max(rounds, d.round);
    }
    std::vector<std::uint64_t> fired(rounds, 0);
    std::vector<std::uint64_t> total(rounds, 0);
    for (std::size_t i = 0; i < tensor.detectors.size(); i++) {
        const DetectorId &d = tensor.detectors[i];
        if (d.is_final) continue;
        fired[d.round - 1] += tensor.events.row_popcount(i);
        total[d.round - 1] += tensor.n_shots;
    }
    std::vector<double> curve(rounds, 0.0);
    for (std::uint32_t r = 0; r < rounds; r++) {
        if (total[r]) curve[r] = static_cast<double>(fired[r]) / static_cast<double>(total[r]);
    }
    return curve;
}

double rms_difference(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ValidationError("curves have different lengths");
    }
    if (a.empty()) return 0;
    CompensatedSum sum;
    for (std::size_t i = 0; i < a.size(); i++) sum.add((a[i] - b[i]) * (a[i] - b[i]));
    return std::sqrt(sum.value() / static_cast<double>(a.size()));
}

double StateDistribution::probability(const std::string &bits) const {
    auto it = probabilities.find(bits);
    return it == probabilities.end() ? 0.0 : it->second;
}

StateDistribution state_distribution(const Dataset &dataset) {
    StateDistribution dist;
    dist.n_bits = dataset.n_measurements();
    dist.n_shots = dataset.n_shots();
    std::map<std::string, std::uint64_t> counts;
    std::string key(dist.n_bits, '0');
    for (std::size_t s = 0; s < dataset.n_shots(); s++) {
        for (std::size_t m = 0; m < dist.n_bits; m++) key[m] = dataset.get(s, m) ? '1' : '0';
        counts[key]++;
    }
    for (const auto &[k, c] : counts) {
        dist.probabilities.emplace(k, static_cast<double>(c) / static_cast<double>(dist.n_shots));
    }
    return dist;
}

double tvd(const StateDistribution &p, const StateDistribution &q) {
    if (p.n_bits != q.n_bits) {
        throw ValidationError("distributions over " + std::to_string(p.n_bits) + " and " + std::to_string(q.n_bits) +
                              " bits");
    }
    CompensatedSum sum;
    auto a = p.probabilities.begin();
    auto b = q.probabilities.begin();
    while (a != p.probabilities.end() || b != q.probabilities.end()) {
        if (b == q.probabilities.end() || (a != p.probabilities.end() && a->first < b->first)) {
            sum.add(a->second);
            ++a;
        } else if (a == p.probabilities.end() || b->first < a->first) {
            sum.add(b->second);
            ++b;
        } else {
            sum.add(std::abs(a->second - b->second));
            ++a;
            ++b;
        }
    }
    return 0.5 * sum.value();
}

}  // namespace paems
