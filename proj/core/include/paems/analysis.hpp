#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "paems/bit_table.hpp"
#include "paems/circuit.hpp"
#include "paems/dataset.hpp"

namespace paems {

/// Detection events, one bit row per detector (circuit detector order), one column per shot.
struct DetectionTensor {
    std::size_t n_shots = 0;
    std::uint32_t n_ancilla = 0;
    /// Highest detector round present (rounds + 1 when final detectors exist).
    std::uint32_t n_rounds = 0;
    std::vector<DetectorId> detectors;
    BitTable events;

    std::size_t n_detectors() const { return detectors.size(); }
    bool get(std::size_t shot, std::size_t detector) const { return events.get(detector, shot); }
    /// Index of detector (ancilla, round) or SIZE_MAX if absent.
    std::size_t index_of(std::uint32_t ancilla, std::uint32_t round) const;
};

DetectionTensor extract_detections(const Dataset &dataset, const Circuit &circuit);

enum class Sector : std::uint8_t { Timelike, Spacelike, Spacetime, LeakageTail, Other };
inline constexpr std::size_t kNumSectors = 5;
const char *sector_name(Sector s);

/// Label of an unordered detector pair from |Δancilla| and |Δround|.
Sector classify_pair(const DetectorId &a, const DetectorId &b);

/// Symmetric n x n label table; the diagonal is labelled Other.
struct SectorMap {
    std::size_t n = 0;
    std::vector<Sector> labels;

    Sector at(std::size_t i, std::size_t j) const { return labels[i * n + j]; }
};

SectorMap classify_sectors(const Circuit &circuit);
SectorMap classify_sectors(std::span<const DetectorId> detectors);

/// Guard for near-deterministic detectors and degenerate denominators.
inline constexpr double kCorrelationEpsilon = 1e-6;

/// Two-point correlation from first and second moments:
/// p = 1/2 - 1/2 sqrt(1 - 4(<xixj> - <xi><xj>) / (1 - 2<xi> - 2<xj> + 4<xixj>)).
/// NaN when either detector is within epsilon of deterministic.
double pair_correlation(double xi, double xj, double xixj);

enum class CorrelationScope : std::uint8_t {
    Full,
    /// Only pairs outside the Other sector (what the fit losses read).
    Sectors,
};

/// p_ij over all detector pairs. Undefined entries hold NaN; the diagonal holds <x_i>.
struct CorrelationReport {
    std::size_t n_shots = 0;
    std::vector<DetectorId> detectors;
    SectorMap sectors;
    std::vector<double> p;

    std::size_t n_detectors() const { return detectors.size(); }
    double at(std::size_t i, std::size_t j) const { return p[i * detectors.size() + j]; }
    bool defined(std::size_t i, std::size_t j) const { return !std::isnan(at(i, j)); }
    Sector sector(std::size_t i, std::size_t j) const { return sectors.at(i, j); }
};

CorrelationReport correlation_matrix(const DetectionTensor &tensor, CorrelationScope scope = CorrelationScope::Full);

/// Entrywise mean over reports of the same geometry; an entry is undefined
/// only if it is undefined in every report.
CorrelationReport average_reports(std::span<const CorrelationReport> reports);

struct SectorDiff {
    std::array<double, kNumSectors> mean_abs{};
    std::array<double, kNumSectors> max_abs{};
    std::array<std::size_t, kNumSectors> n_pairs{};

    double operator[](Sector s) const { return mean_abs[static_cast<std::size_t>(s)]; }
    double timelike() const { return (*this)[Sector::Timelike]; }
    double spacelike() const { return (*this)[Sector::Spacelike]; }
    double spacetime() const { return (*this)[Sector::Spacetime]; }
    double leakage_tail() const { return (*this)[Sector::LeakageTail]; }
    /// timelike + spacelike + spacetime.
    double combined() const { return timelike() + spacelike() + spacetime(); }
};

/// Per sector, mean |a.p_ij - b.p_ij| over pairs i < j defined in both reports.
SectorDiff sector_difference(const CorrelationReport &a, const CorrelationReport &b);

struct SectorStats {
    std::size_t count = 0;
    double mean = 0;
    double stddev = 0;
};

/// Mean and population standard deviation of the defined off-diagonal entries in one sector.
SectorStats sector_stats(const CorrelationReport &report, Sector sector);

/// Mean detection probability per stabilizer round (index r-1), over shots and ancillas.
/// Final data-parity detectors are excluded.
std::vector<double> detection_fraction(const DetectionTensor &tensor);

/// Root-mean-square difference of two equal-length curves.
double rms_difference(std::span<const double> a, std::span<const double> b);

/// Empirical distribution over full measurement bitstrings ('0'/'1', measurement order).
struct StateDistribution {
    std::size_t n_bits = 0;
    std::size_t n_shots = 0;
    std::map<std::string, double> probabilities;

    double probability(const std::string &bits) const;
};

StateDistribution state_distribution(const Dataset &dataset);
double tvd(const StateDistribution &p, const StateDistribution &q);

}  // namespace paems
