#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "paems/analysis.hpp"
#include "paems/circuit.hpp"
#include "paems/dataset.hpp"
#include "paems/noise_model.hpp"

namespace paems {

// Datasets ------------------------------------------------------------------

enum class DatasetFormat : std::uint8_t { Prb1, P01 };

inline constexpr std::uint32_t kPrb1Version = 1;
inline constexpr std::size_t kPrb1HeaderBytes = 16;

/// "PRB1", u32 version, u32 n_measurements, u32 n_shots (little endian), then
/// one ((n_measurements + 7) / 8)-byte row per shot, bit m at byte m/8, bit m%8.
void write_prb1(std::ostream &out, const Dataset &dataset);
Dataset read_prb1(std::istream &in);

/// One line of '0'/'1' characters per shot. An empty file is zero shots of
/// unknown width, so readers take the expected width when one is known.
void write_p01(std::ostream &out, const Dataset &dataset);
Dataset read_p01(std::istream &in, std::optional<std::size_t> n_measurements = std::nullopt);

/// Format from the extension (.prb1 / .p01).
DatasetFormat dataset_format_for(const std::filesystem::path &path);
void save_dataset(const std::filesystem::path &path, const Dataset &dataset);
Dataset load_dataset(const std::filesystem::path &path, std::optional<std::size_t> n_measurements = std::nullopt);

/// Incremental prb1 writer for streamed sampling; the header is written up front.
class Prb1Writer {
   public:
    Prb1Writer(std::ostream &out, std::size_t n_measurements, std::size_t n_shots);
    void write(const ShotBatch &batch);
    /// Throws IoError unless exactly n_shots rows were written.
    void finish();

   private:
    std::ostream &out_;
    std::size_t n_measurements_;
    std::size_t n_shots_;
    std::size_t written_ = 0;
};

/// Incremental prb1 reader: hands out batches of shot rows in constant memory.
class Prb1Reader {
   public:
    explicit Prb1Reader(std::istream &in);
    std::size_t n_measurements() const { return n_measurements_; }
    std::size_t n_shots() const { return n_shots_; }
    /// Next batch of up to max_shots rows; empty once all rows are consumed.
    /// After the last row, verifies there is no trailing data.
    ShotBatch next(std::size_t max_shots);

   private:
    std::istream &in_;
    std::size_t n_measurements_ = 0;
    std::size_t n_shots_ = 0;
    std::size_t consumed_ = 0;
    bool checked_tail_ = false;
};

// Models --------------------------------------------------------------------

void write_model(std::ostream &out, const NoiseModel &model);
NoiseModel read_model(std::istream &in);
std::string model_to_string(const NoiseModel &model);
NoiseModel parse_model(const std::string &text);

/// Either a model file path or an inline baseline such as "si1000:0.015".
NoiseModel load_model_arg(const std::string &arg);

// Calibration ---------------------------------------------------------------

struct QubitCalibration {
    std::uint32_t physical = 0;
    double t1_us = 0;
    double t2_us = 0;
    double err_1q = 0;
    double err_readout = 0;
    std::optional<double> gate_1q_ns;
    std::optional<double> gate_2q_ns;
    std::optional<double> measure_ns;
    std::optional<double> reset_ns;
};

struct CouplerCalibration {
    std::uint32_t a = 0;
    std::uint32_t b = 0;
    double err_2q = 0;
};

struct CalibrationRecord {
    std::string platform;
    std::string timestamp;
    GateTimingTable timing;
    /// layout[logical chain index] = physical qubit id.
    std::vector<std::uint32_t> layout;
    std::map<std::uint32_t, QubitCalibration> qubits;
    std::vector<CouplerCalibration> couplers;

    /// Circuit timing: the global timing line, with per-qubit durations (if
    /// any) raising each entry to the slowest qubit on the layout.
    GateTimingTable effective_timing() const;
};

CalibrationRecord parse_calibration(std::istream &in);
CalibrationRecord load_calibration(const std::filesystem::path &path);

/// Stage-0 mapping onto the logical chain: f = 1 - error, p_readout = readout
/// error, p_init = p_reset = readout error / 2, no leakage. t2 above 2 t1 is
/// clamped and reported through `warnings`.
NoiseModel init_model(const CalibrationRecord &cal, std::vector<std::string> *warnings = nullptr);

// Reports and artifact metadata ----------------------------------------------

std::uint64_t fnv1a64(std::string_view data);
std::string hex64(std::uint64_t v);

struct ArtifactMeta {
    std::string tool_version;
    std::uint64_t seed = 0;
    std::string config_hash;
    std::string command;
};

/// Canonical "key=value" lines of a resolved config, hashed for artifact provenance.
std::string config_hash(const std::map<std::string, std::string> &resolved);

std::string meta_json(const ArtifactMeta &meta);
std::filesystem::path meta_sidecar_path(const std::filesystem::path &artifact);

/// Matrix CSV: detector_i,detector_j,sector,p_ij for i < j. Undefined entries print "nan".
/// A leading '#' line carries the metadata when `meta` is given.
void write_correlation_csv(std::ostream &out, const CorrelationReport &report, const ArtifactMeta *meta = nullptr);

/// Writes via a temporary file in the same directory and renames on success,
/// so a failure leaves no partial artifact behind.
void write_file_atomic(const std::filesystem::path &path, const std::function<void(std::ostream &)> &fill,
                       bool binary = false);
std::string read_text_file(const std::filesystem::path &path);

}  // namespace paems
