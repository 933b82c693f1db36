// paems command-line tool: thin wrappers over the core library that read and
// write the on-disk formats and stamp every artifact with provenance.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <json.hpp>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "paems/analysis.hpp"
#include "paems/circuit.hpp"
#include "paems/equivalence.hpp"
#include "paems/errors.hpp"
#include "paems/fitter.hpp"
#include "paems/io.hpp"
#include "paems/noise_model.hpp"
#include "paems/rng.hpp"
#include "paems/sampler.hpp"
#include "paems/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace paems;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitValidation = 2;
constexpr int kExitIo = 3;

const char *kFormatsHelp = R"(Formats:
  circuit (.txt)     'paems-circuit v1' header, one layer per line, detector lines; see docs/formats.md.
  dataset .prb1      16-byte header "PRB1", u32 version=1, u32 n_measurements, u32 n_shots
                     (little endian), then one (n_measurements+7)/8-byte row per shot,
                     measurement m at byte m/8 bit m%8.
  dataset .p01       one line of '0'/'1' per shot, measurement order.
  model (.paems)     'paems-model v1', 'kind <name>', then 'p <v>' for baselines or
                     'qubit i t1= t2= f1q= p_init= p_reset= p_readout= p_leak= p_seep=' and
                     'coupler a b f2q=' lines for PAEMS. Inline baselines: si1000:0.01,
                     sd6:0.01, circuit:0.01, cc:0.01, phe:0.01.
  calibration        'paems-calibration v1', platform, timestamp, 'timing gate_1q= gate_2q=
                     measure= reset=', 'layout p0 p1 ...', 'qubit <phys> t1= t2= err_1q=
                     err_readout=' and 'coupler a b err_2q=' lines.
  fit config         'key = value' lines, e.g. 'stage1.budget = 300', 'coherence.w_time = 1'.
  correlation CSV    detector_i,detector_j,sector,p_ij (i < j), undefined entries 'nan'.
Every artifact carries tool version, seed and config hash: a '#' line in CSV and model
files, a 'meta' object in JSON, and a <file>.meta.json sidecar for circuits and datasets.
Exit status: 0 success, 1 oracle-check mismatch, 2 invalid input, 3 I/O failure.
Environment: PAEMS_THREADS sets the default for --threads.)";

unsigned default_threads() {
    if (const char *env = std::getenv("PAEMS_THREADS")) {
        try {
            int v = std::stoi(env);
            if (v > 0) return static_cast<unsigned>(v);
        } catch (const std::exception &) {
        }
        throw ValidationError(std::string("PAEMS_THREADS must be a positive integer, got '") + env + "'");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Resolved settings of one invocation. Inputs enter by content hash, so
/// moving files does not change the hash; outputs and threads never enter.
class Provenance {
   public:
    Provenance(std::string command, std::uint64_t seed) : command_(std::move(command)), seed_(seed) {
        values_["command"] = command_;
        values_["seed"] = std::to_string(seed);
    }
    void set(const std::string &key, const std::string &value) { values_[key] = value; }
    void input(const std::string &key, const fs::path &path) {
        values_["input." + key] = hex64(fnv1a64(read_text_file(path)));
    }
    void merge(const std::map<std::string, std::string> &m, const std::string &prefix) {
        for (const auto &[k, v] : m) values_[prefix + k] = v;
    }
    ArtifactMeta meta() const { return {kVersion, seed_, config_hash(values_), command_}; }
    const std::map<std::string, std::string> &values() const { return values_; }
    std::string comment_line() const {
        ArtifactMeta m = meta();
        return "# tool=paems version=" + m.tool_version + " seed=" + std::to_string(m.seed) +
               " config_hash=" + m.config_hash + "\n";
    }
    json meta_json_object() const {
        ArtifactMeta m = meta();
        return json{{"tool", "paems"},
                    {"tool_version", m.tool_version},
                    {"seed", m.seed},
                    {"config_hash", m.config_hash},
                    {"command", m.command},
                    {"config", values_}};
    }

   private:
    std::string command_;
    std::uint64_t seed_;
    std::map<std::string, std::string> values_;
};

/// Outputs written by one command; all are removed if the command fails.
class Outputs {
   public:
    ~Outputs() {
        if (committed_) return;
        for (const fs::path &p : written_) {
            std::error_code ec;
            fs::remove(p, ec);
        }
    }
    void write(const fs::path &path, const std::function<void(std::ostream &)> &fill, bool binary = false) {
        write_file_atomic(path, fill, binary);
        written_.push_back(path);
    }
    void write_with_sidecar(const fs::path &path, const Provenance &prov,
                            const std::function<void(std::ostream &)> &fill, bool binary) {
        write(path, fill, binary);
        std::string meta = prov.meta_json_object().dump(2) + "\n";
        write(meta_sidecar_path(path), [&](std::ostream &o) { o << meta; });
    }
    void commit() { committed_ = true; }

   private:
    std::vector<fs::path> written_;
    bool committed_ = false;
};

Circuit load_circuit(const fs::path &path) { return parse_circuit(read_text_file(path)); }

Basis parse_basis(const std::string &s) {
    if (s == "Z" || s == "z") return Basis::Z;
    if (s == "X" || s == "x") return Basis::X;
    throw ValidationError("basis must be X or Z, got '" + s + "'");
}

std::vector<Dataset> split_runs(const Dataset &data, std::size_t runs) {
    if (runs == 0) throw ValidationError("--runs must be positive");
    if (data.n_shots() % runs != 0) {
        throw ValidationError(std::to_string(data.n_shots()) + " shots do not split evenly into " +
                              std::to_string(runs) + " runs");
    }
    std::size_t per = data.n_shots() / runs;
    std::vector<Dataset> out;
    for (std::size_t r = 0; r < runs; r++) out.push_back(data.slice(r * per, per));
    return out;
}

Dataset load_for(const fs::path &path, const Circuit &circuit) {
    Dataset d = load_dataset(path, circuit.n_measurements());
    if (d.n_measurements() != circuit.n_measurements()) {
        throw ValidationError("dataset '" + path.string() + "' has " + std::to_string(d.n_measurements()) +
                              " measurements, circuit expects " + std::to_string(circuit.n_measurements()));
    }
    return d;
}

std::vector<double> parse_grid(const std::string &spec) {
    std::vector<double> grid;
    auto num = [&](const std::string &s) {
        try {
            std::size_t used = 0;
            double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception &) {
            throw ValidationError("bad number '" + s + "' in --grid");
        }
    };
    if (spec.find(':') != std::string::npos) {
        std::vector<std::string> parts;
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ':');) parts.push_back(p);
        if (parts.size() != 3) throw ValidationError("--grid range must be lo:hi:count");
        double lo = num(parts[0]);
        double hi = num(parts[1]);
        int n = static_cast<int>(num(parts[2]));
        if (n < 1 || !(hi >= lo)) throw ValidationError("--grid range needs lo <= hi and count >= 1");
        for (int i = 0; i < n; i++) grid.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
    } else {
        std::stringstream ss(spec);
        for (std::string p; std::getline(ss, p, ',');) grid.push_back(num(p));
    }
    if (grid.empty()) throw ValidationError("--grid is empty");
    return grid;
}

std::vector<int> parse_stages(const std::string &spec) {
    std::vector<int> stages;
    std::stringstream ss(spec);
    for (std::string p; std::getline(ss, p, ',');) {
        if (p != "1" && p != "2" && p != "3") throw ValidationError("--stages takes a list of 1, 2, 3");
        stages.push_back(p[0] - '0');
    }
    if (stages.empty()) throw ValidationError("--stages is empty");
    return stages;
}

std::string csv_number(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream o;
    o.precision(10);
    o << v;
    return o.str();
}

// Subcommands -----------------------------------------------------------------

struct BuildArgs {
    std::uint32_t qubits = 0;
    std::uint32_t rounds = 0;
    std::string basis = "Z";
    bool final_detectors = false;
    std::string calibration;
    std::string init_model_out;
    std::string output;
};

int run_build(const BuildArgs &a) {
    Provenance prov("build", 0);
    prov.set("qubits", std::to_string(a.qubits));
    prov.set("rounds", std::to_string(a.rounds));
    prov.set("basis", a.basis);
    prov.set("final_detectors", a.final_detectors ? "1" : "0");
    GateTimingTable timing;
    std::optional<CalibrationRecord> cal;
    if (!a.calibration.empty()) {
        prov.input("calibration", a.calibration);
        cal = load_calibration(a.calibration);
        timing = cal->effective_timing();
        if (cal->layout.size() != a.qubits) {
            throw ValidationError("calibration layout has " + std::to_string(cal->layout.size()) +
                                  " qubits, --qubits is " + std::to_string(a.qubits));
        }
    } else if (!a.init_model_out.empty()) {
        throw ValidationError("--init-model needs --calibration");
    }
    RepetitionCodeOptions opts;
    opts.final_detectors = a.final_detectors;
    Circuit circuit = build_repetition_code(a.qubits, a.rounds, parse_basis(a.basis), timing, opts);
    Outputs out;
    std::string text = circuit_to_string(circuit);
    out.write_with_sidecar(a.output, prov, [&](std::ostream &o) { o << text; }, false);
    if (cal && !a.init_model_out.empty()) {
        std::vector<std::string> warnings;
        NoiseModel init = init_model(*cal, &warnings);
        for (const std::string &w : warnings) std::cerr << "warning: " << w << "\n";
        std::string model = model_to_string(init);
        out.write(a.init_model_out, [&](std::ostream &o) { o << prov.comment_line() << model; });
    }
    out.commit();
    return kExitOk;
}

struct SampleArgs {
    std::string circuit;
    std::string model;
    std::uint64_t shots = 0;
    std::uint64_t seed = 0;
    std::size_t batch = 4096;
    std::string output;
};

int run_sample(const SampleArgs &a, unsigned threads) {
    Provenance prov("sample", a.seed);
    prov.input("circuit", a.circuit);
    prov.set("shots", std::to_string(a.shots));
    Circuit circuit = load_circuit(a.circuit);
    NoiseModel model;
    if (fs::exists(a.model)) {
        prov.input("model", a.model);
        model = load_model_arg(a.model);
    } else {
        prov.set("model", a.model);
        model = load_model_arg(a.model);
    }
    ErrorSchedule schedule = compile_schedule(circuit, model);
    SamplerConfig cfg;
    cfg.shots = a.shots;
    cfg.master_seed = a.seed;
    cfg.batch_size = a.batch;
    cfg.threads = threads;
    DatasetFormat fmt = dataset_format_for(a.output);
    Outputs out;
    out.write_with_sidecar(
        a.output, prov,
        [&](std::ostream &o) {
            std::optional<Prb1Writer> writer;
            if (fmt == DatasetFormat::Prb1) writer.emplace(o, circuit.n_measurements(), a.shots);
            StreamSummary s = sample_streaming(circuit, schedule, cfg, [&](const ShotBatch &batch) {
                if (writer) {
                    writer->write(batch);
                    return;
                }
                std::string line(batch.n_measurements + 1, '\n');
                for (std::size_t i = 0; i < batch.n_shots; i++) {
                    auto row = batch.row(i);
                    for (std::size_t m = 0; m < batch.n_measurements; m++) {
                        line[m] = (row[m / 8] >> (m % 8)) & 1 ? '1' : '0';
                    }
                    o << line;
                }
                if (!o) throw IoError("write failed");
            });
            if (!s.completed) throw IoError("sampling stopped after " + std::to_string(s.shots_delivered) +
                                            " shots: " + s.error);
            if (writer) writer->finish();
        },
        fmt == DatasetFormat::Prb1);
    out.commit();
    return kExitOk;
}

struct DetectArgs {
    std::string circuit;
    std::string input;
    std::string output;
};

int run_detect(const DetectArgs &a) {
    Provenance prov("detect", 0);
    prov.input("circuit", a.circuit);
    prov.input("data", a.input);
    Circuit circuit = load_circuit(a.circuit);
    DetectionTensor t = extract_detections(load_for(a.input, circuit), circuit);
    Dataset events(t.events);
    Outputs out;
    bool binary = dataset_format_for(a.output) == DatasetFormat::Prb1;
    out.write_with_sidecar(
        a.output, prov,
        [&](std::ostream &o) {
            if (binary) {
                write_prb1(o, events);
            } else {
                write_p01(o, events);
            }
        },
        binary);
    out.commit();
    return kExitOk;
}

struct CorrelateArgs {
    std::string circuit;
    std::string input;
    std::size_t runs = 1;
    std::string scope = "full";
    std::string output;
};

int run_correlate(const CorrelateArgs &a) {
    Provenance prov("correlate", 0);
    prov.input("circuit", a.circuit);
    prov.input("data", a.input);
    prov.set("runs", std::to_string(a.runs));
    prov.set("scope", a.scope);
    CorrelationScope scope;
    if (a.scope == "full") {
        scope = CorrelationScope::Full;
    } else if (a.scope == "sectors") {
        scope = CorrelationScope::Sectors;
    } else {
        throw ValidationError("--scope must be full or sectors");
    }
    Circuit circuit = load_circuit(a.circuit);
    std::vector<Dataset> runs = split_runs(load_for(a.input, circuit), a.runs);
    std::vector<CorrelationReport> reports;
    for (const Dataset &r : runs) reports.push_back(correlation_matrix(extract_detections(r, circuit), scope));
    CorrelationReport avg = average_reports(reports);
    ArtifactMeta meta = prov.meta();
    Outputs out;
    out.write(a.output, [&](std::ostream &o) { write_correlation_csv(o, avg, &meta); });
    out.commit();
    return kExitOk;
}

struct FractionArgs {
    std::string circuit;
    std::string input;
    std::string output;
};

int run_fraction(const FractionArgs &a) {
    Provenance prov("fraction", 0);
    prov.input("circuit", a.circuit);
    prov.input("data", a.input);
    Circuit circuit = load_circuit(a.circuit);
    std::vector<double> f = detection_fraction(extract_detections(load_for(a.input, circuit), circuit));
    Outputs out;
    out.write(a.output, [&](std::ostream &o) {
        o << prov.comment_line() << "round,fraction\n";
        for (std::size_t r = 0; r < f.size(); r++) o << r + 1 << "," << csv_number(f[r]) << "\n";
    });
    out.commit();
    return kExitOk;
}

struct TvdArgs {
    std::string a;
    std::string b;
    std::string output;
};

int run_tvd(const TvdArgs &a) {
    Provenance prov("tvd", 0);
    prov.input("a", a.a);
    prov.input("b", a.b);
    Dataset da = load_dataset(a.a);
    Dataset db = load_dataset(a.b, da.n_measurements());
    if (da.n_measurements() != db.n_measurements()) {
        throw ValidationError("datasets have different widths");
    }
    double v = tvd(state_distribution(da), state_distribution(db));
    json j{{"tvd", v}, {"shots_a", da.n_shots()}, {"shots_b", db.n_shots()}, {"meta", prov.meta_json_object()}};
    std::string text = j.dump(2) + "\n";
    if (a.output.empty()) {
        std::cout << text;
        return kExitOk;
    }
    Outputs out;
    out.write(a.output, [&](std::ostream &o) { o << text; });
    out.commit();
    return kExitOk;
}

struct FitArgs {
    std::string mode = "multiround";
    std::string circuit;
    std::string input;
    std::size_t runs = 1;
    std::string init;
    std::string calibration;
    std::string config;
    std::string stages = "1,2,3";
    bool per_run = false;
    std::uint64_t seed = 1;
    std::string output;
    std::string report;
};

int run_fit(const FitArgs &a, unsigned threads) {
    Provenance prov("fit", a.seed);
    prov.input("circuit", a.circuit);
    prov.input("data", a.input);
    prov.set("mode", a.mode);
    prov.set("runs", std::to_string(a.runs));
    Circuit circuit = load_circuit(a.circuit);
    Dataset data = load_for(a.input, circuit);

    if (a.init.empty() == a.calibration.empty()) {
        throw ValidationError("give exactly one of --init and --calibration");
    }
    NoiseModel init;
    if (!a.init.empty()) {
        prov.input("init", a.init);
        init = parse_model(read_text_file(a.init));
    } else {
        prov.input("calibration", a.calibration);
        std::vector<std::string> warnings;
        init = init_model(load_calibration(a.calibration), &warnings);
        for (const std::string &w : warnings) std::cerr << "warning: " << w << "\n";
    }

    FitConfig cfg = FitConfig::defaults();
    if (!a.config.empty()) cfg = FitConfig::load(a.config);
    cfg.seed = a.seed;
    cfg.threads = threads;
    cfg.stages = parse_stages(a.stages);
    if (a.per_run) cfg.per_run_refine = true;
    prov.merge(cfg.resolved(), "fit.");

    FitReport rep;
    if (a.mode == "multiround") {
        rep = fit_multiround(split_runs(data, a.runs), circuit, init, cfg);
    } else if (a.mode == "singleround") {
        rep = fit_singleround(data, circuit, init, cfg);
    } else {
        throw ValidationError("--mode must be multiround or singleround");
    }
    if (rep.warning) std::cerr << "warning: a fit stage stopped on its budget or aborted; see the report\n";

    json j = json::parse(rep.to_json());
    j["meta"] = prov.meta_json_object();
    std::string report = j.dump(2) + "\n";
    std::string model = model_to_string(rep.fitted);
    Outputs out;
    out.write(a.output, [&](std::ostream &o) { o << prov.comment_line() << model; });
    if (!a.report.empty()) out.write(a.report, [&](std::ostream &o) { o << report; });
    out.commit();
    return kExitOk;
}

struct SelectArgs {
    std::string kind = "si1000";
    std::string circuit;
    std::string input;
    std::size_t runs = 1;
    std::string grid = "0.001:0.02:20";
    std::uint64_t seed = 1;
    std::string output;
};

int run_select(const SelectArgs &a, unsigned threads) {
    Provenance prov("select-p", a.seed);
    prov.input("circuit", a.circuit);
    prov.input("data", a.input);
    prov.set("kind", a.kind);
    prov.set("runs", std::to_string(a.runs));
    prov.set("grid", a.grid);
    ModelKind kind = parse_model_kind(a.kind);
    Circuit circuit = load_circuit(a.circuit);
    std::vector<Dataset> runs = split_runs(load_for(a.input, circuit), a.runs);
    std::vector<double> grid = parse_grid(a.grid);
    BaselineSelection sel = select_baseline_p(kind, runs, circuit, grid, a.seed, threads);
    json pts = json::array();
    for (std::size_t i = 0; i < sel.grid.size(); i++) pts.push_back({{"p", sel.grid[i]}, {"loss", sel.losses[i]}});
    json j{{"kind", model_kind_name(kind)},
           {"p", sel.p},
           {"model", model_to_string(NoiseModel::baseline(kind, sel.p))},
           {"grid", pts},
           {"meta", prov.meta_json_object()}};
    std::string text = j.dump(2) + "\n";
    if (a.output.empty()) {
        std::cout << text;
        return kExitOk;
    }
    Outputs out;
    out.write(a.output, [&](std::ostream &o) { o << text; });
    out.commit();
    return kExitOk;
}

struct CompareArgs {
    std::string circuit;
    std::string experiment;
    std::vector<std::string> models;
    std::size_t runs = 1;
    std::size_t sim_runs = 0;
    std::uint64_t seed = 1;
    std::string output;
    std::string fraction_output;
};

int run_compare(const CompareArgs &a, unsigned threads) {
    Provenance prov("compare", a.seed);
    prov.input("circuit", a.circuit);
    prov.input("experiment", a.experiment);
    prov.set("runs", std::to_string(a.runs));
    prov.set("sim_runs", std::to_string(a.sim_runs));
    Circuit circuit = load_circuit(a.circuit);
    std::vector<Dataset> runs = split_runs(load_for(a.experiment, circuit), a.runs);
    MultiroundStats target = multiround_stats(runs, circuit, CorrelationScope::Sectors);
    const std::size_t sim_runs = a.sim_runs ? a.sim_runs : runs.size();

    struct Row {
        std::string name;
        LossTerms terms;
        std::vector<double> fraction;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < a.models.size(); i++) {
        const std::string &arg = a.models[i];
        if (fs::exists(arg)) {
            prov.input("model" + std::to_string(i), arg);
        } else {
            prov.set("model" + std::to_string(i), arg);
        }
        NoiseModel m = load_model_arg(arg);
        std::vector<Dataset> sim =
            simulate_runs(circuit, m, sim_runs, target.run_shots, derive_seed(a.seed, i), threads);
        MultiroundStats st = multiround_stats(sim, circuit, CorrelationScope::Sectors);
        rows.push_back({arg, compare_stats(st, target), st.fraction});
    }

    Outputs out;
    out.write(a.output, [&](std::ostream &o) {
        o << prov.comment_line() << "model,timelike,spacelike,spacetime,leakage_tail,combined,fraction_rms\n";
        for (const Row &r : rows) {
            o << r.name << "," << csv_number(r.terms.timelike) << "," << csv_number(r.terms.spacelike) << ","
              << csv_number(r.terms.spacetime) << "," << csv_number(r.terms.leakage_tail) << ","
              << csv_number(r.terms.combined()) << "," << csv_number(r.terms.fraction_rms) << "\n";
        }
    });
    if (!a.fraction_output.empty()) {
        out.write(a.fraction_output, [&](std::ostream &o) {
            o << prov.comment_line() << "round,experiment";
            for (const Row &r : rows) o << "," << r.name;
            o << "\n";
            for (std::size_t k = 0; k < target.fraction.size(); k++) {
                o << k + 1 << "," << csv_number(target.fraction[k]);
                for (const Row &r : rows) o << "," << csv_number(r.fraction[k]);
                o << "\n";
            }
        });
    }
    out.commit();
    return kExitOk;
}

struct OracleArgs {
    std::uint64_t shots = 100000;
    std::uint64_t seed = 1;
    double z = 3.0;
    std::string filter;
    std::string output;
};

int run_oracle_check(const OracleArgs &a, unsigned threads) {
    Provenance prov("oracle-check", a.seed);
    prov.set("shots", std::to_string(a.shots));
    prov.set("z", csv_number(a.z));
    prov.set("filter", a.filter);
    json cases = json::array();
    std::size_t failed = 0;
    std::size_t total = 0;
    for (const EquivalenceCase &c : equivalence_suite()) {
        if (!a.filter.empty() && c.name.find(a.filter) == std::string::npos) continue;
        EquivalenceResult r = check_equivalence(c, a.shots, derive_seed(a.seed, total), a.z, threads);
        total++;
        if (!r.passed()) failed++;
        std::cout << (r.passed() ? "ok   " : "FAIL ") << r.name << "  tests=" << r.n_tests
                  << " failures=" << r.n_failures << " max_z=" << csv_number(r.max_z)
                  << (r.worst.empty() ? "" : "  worst: " + r.worst) << "\n";
        cases.push_back({{"name", r.name},
                         {"tests", r.n_tests},
                         {"failures", r.n_failures},
                         {"max_z", r.max_z},
                         {"worst", r.worst}});
    }
    if (total == 0) throw ValidationError("--filter matches no equivalence case");
    std::cout << (failed ? "FAIL " : "PASS ") << total - failed << "/" << total << " cases\n";
    if (!a.output.empty()) {
        json j{{"cases", cases}, {"failed", failed}, {"meta", prov.meta_json_object()}};
        std::string text = j.dump(2) + "\n";
        Outputs out;
        out.write(a.output, [&](std::ostream &o) { o << text; });
        out.commit();
    }
    return failed ? kExitCheckFailed : kExitOk;
}

}  // namespace

int main(int argc, char **argv) {
    CLI::App app{"paems: hardware-calibrated noise models for repetition-code experiments"};
    app.footer(kFormatsHelp);
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: PAEMS_THREADS or all cores); never changes results");

    BuildArgs build;
    auto *c_build = app.add_subcommand("build", "Write a repetition-code memory circuit");
    c_build->add_option("--qubits", build.qubits, "Chain length (odd, >= 3)")->required();
    c_build->add_option("--rounds", build.rounds, "Stabilizer rounds")->required();
    c_build->add_option("--basis", build.basis, "X or Z");
    c_build->add_flag("--final-detectors", build.final_detectors, "Add final data-parity detectors");
    c_build->add_option("--calibration", build.calibration, "Take gate durations from a calibration file");
    c_build->add_option("--init-model", build.init_model_out, "Also write the calibration-derived initial model");
    c_build->add_option("-o,--output", build.output, "Circuit file")->required();

    SampleArgs sample_args;
    auto *c_sample = app.add_subcommand("sample", "Sample measurement records from a noise model");
    c_sample->add_option("--circuit", sample_args.circuit)->required();
    c_sample->add_option("--model", sample_args.model, "Model file or inline baseline (si1000:0.01)")->required();
    c_sample->add_option("--shots", sample_args.shots)->required();
    c_sample->add_option("--seed", sample_args.seed);
    c_sample->add_option("--batch-size", sample_args.batch, "Shots held in memory at once");
    c_sample->add_option("-o,--output", sample_args.output, ".prb1 or .p01 dataset")->required();

    DetectArgs detect;
    auto *c_detect = app.add_subcommand("detect", "Extract detection events (one column per detector)");
    c_detect->add_option("--circuit", detect.circuit)->required();
    c_detect->add_option("--input", detect.input, "Measurement dataset")->required();
    c_detect->add_option("-o,--output", detect.output, ".prb1 or .p01 event table")->required();

    CorrelateArgs corr;
    auto *c_corr = app.add_subcommand("correlate", "Pairwise detection-event correlation matrix as CSV");
    c_corr->add_option("--circuit", corr.circuit)->required();
    c_corr->add_option("--input", corr.input)->required();
    c_corr->add_option("--runs", corr.runs, "Split the shots into this many runs and average");
    c_corr->add_option("--scope", corr.scope, "full or sectors");
    c_corr->add_option("-o,--output", corr.output)->required();

    FractionArgs frac;
    auto *c_frac = app.add_subcommand("fraction", "Per-round detection-event fraction as CSV");
    c_frac->add_option("--circuit", frac.circuit)->required();
    c_frac->add_option("--input", frac.input)->required();
    c_frac->add_option("-o,--output", frac.output)->required();

    TvdArgs tvd_args;
    auto *c_tvd = app.add_subcommand("tvd", "Total variation distance between two datasets' output distributions");
    c_tvd->add_option("--a", tvd_args.a)->required();
    c_tvd->add_option("--b", tvd_args.b)->required();
    c_tvd->add_option("-o,--output", tvd_args.output, "JSON report (default: stdout)");

    FitArgs fit;
    auto *c_fit = app.add_subcommand("fit", "Fit a PAEMS model to experimental data");
    c_fit->add_option("--mode", fit.mode, "multiround or singleround");
    c_fit->add_option("--circuit", fit.circuit)->required();
    c_fit->add_option("--input", fit.input)->required();
    c_fit->add_option("--runs", fit.runs, "Independent runs contained in the input");
    c_fit->add_option("--init", fit.init, "Initial PAEMS model file");
    c_fit->add_option("--calibration", fit.calibration, "Initialize from a calibration file");
    c_fit->add_option("--config", fit.config, "Fit config (budgets, weights)");
    c_fit->add_option("--stages", fit.stages, "Comma list of stages to run");
    c_fit->add_flag("--per-run", fit.per_run, "Refine one model per run after Stage 3");
    c_fit->add_option("--seed", fit.seed);
    c_fit->add_option("-o,--output", fit.output, "Fitted model file")->required();
    c_fit->add_option("--report", fit.report, "FitReport JSON");

    SelectArgs sel;
    auto *c_sel = app.add_subcommand("select-p", "Grid-search a baseline model's p against data");
    c_sel->add_option("--kind", sel.kind, "si1000, sd6, circuit, cc, phe");
    c_sel->add_option("--circuit", sel.circuit)->required();
    c_sel->add_option("--input", sel.input)->required();
    c_sel->add_option("--runs", sel.runs);
    c_sel->add_option("--grid", sel.grid, "lo:hi:count or a comma list");
    c_sel->add_option("--seed", sel.seed);
    c_sel->add_option("-o,--output", sel.output, "JSON report (default: stdout)");

    CompareArgs cmp;
    auto *c_cmp = app.add_subcommand("compare", "Sector differences and fraction curves of models vs an experiment");
    c_cmp->add_option("--circuit", cmp.circuit)->required();
    c_cmp->add_option("--experiment", cmp.experiment)->required();
    c_cmp->add_option("--models", cmp.models, "Model files or inline baselines")->required();
    c_cmp->add_option("--runs", cmp.runs, "Runs contained in the experiment");
    c_cmp->add_option("--sim-runs", cmp.sim_runs, "Simulated runs per model (default: --runs)");
    c_cmp->add_option("--seed", cmp.seed);
    c_cmp->add_option("-o,--output", cmp.output, "Sector-difference CSV")->required();
    c_cmp->add_option("--fraction-output", cmp.fraction_output, "Fraction-curve CSV");

    OracleArgs orc;
    auto *c_orc = app.add_subcommand("oracle-check", "Frame sampler vs state-vector oracle equivalence suite");
    c_orc->add_option("--shots", orc.shots);
    c_orc->add_option("--seed", orc.seed);
    c_orc->add_option("--z", orc.z, "Tolerance in standard deviations");
    c_orc->add_option("--filter", orc.filter, "Run cases whose name contains this text");
    c_orc->add_option("-o,--output", orc.output, "JSON report");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        return app.exit(e) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (threads == 0) threads = default_threads();
        if (*c_build) return run_build(build);
        if (*c_sample) return run_sample(sample_args, threads);
        if (*c_detect) return run_detect(detect);
        if (*c_corr) return run_correlate(corr);
        if (*c_frac) return run_fraction(frac);
        if (*c_tvd) return run_tvd(tvd_args);
        if (*c_fit) return run_fit(fit, threads);
        if (*c_sel) return run_select(sel, threads);
        if (*c_cmp) return run_compare(cmp, threads);
        if (*c_orc) return run_oracle_check(orc, threads);
    } catch (const ValidationError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
    return kExitValidation;
}
