#include "paems/io.hpp"

#include <algorithm>
#include <array>
#include <cstring>
#include <istream>
#include <json.hpp>
#include <ostream>
#include <set>
#include <sstream>
#include <unistd.h>

#include "paems/errors.hpp"
#include "text_util.hpp"

namespace paems {

namespace {

constexpr std::array<char, 4> kPrb1Magic{'P', 'R', 'B', '1'};

void put_u32(std::ostream &out, std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF), static_cast<char>((v >> 16) & 0xFF),
                 static_cast<char>((v >> 24) & 0xFF)};
    out.write(b, 4);
}

std::uint32_t get_u32(const unsigned char *b) {
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint32_t checked_u32(std::size_t v, const char *what) {
    if (v > 0xFFFFFFFFu) {
        throw ValidationError(std::string(what) + " does not fit the prb1 header");
    }
    return static_cast<std::uint32_t>(v);
}

std::uint8_t padding_mask(std::size_t n_measurements) {
    std::size_t rem = n_measurements % 8;
    return rem == 0 ? 0 : static_cast<std::uint8_t>(0xFF << rem);
}

void write_prb1_header(std::ostream &out, std::size_t n_measurements, std::size_t n_shots) {
    out.write(kPrb1Magic.data(), 4);
    put_u32(out, kPrb1Version);
    put_u32(out, checked_u32(n_measurements, "measurement count"));
    put_u32(out, checked_u32(n_shots, "shot count"));
}

/// Reads the header; returns (n_measurements, n_shots).
std::pair<std::size_t, std::size_t> read_prb1_header(std::istream &in) {
    unsigned char h[kPrb1HeaderBytes];
    in.read(reinterpret_cast<char *>(h), kPrb1HeaderBytes);
    auto got = static_cast<std::size_t>(in.gcount());
    if (got < 4 || std::memcmp(h, kPrb1Magic.data(), 4) != 0) {
        if (got < 4) throw IoError("prb1: truncated header at offset " + std::to_string(got));
        throw IoError("prb1: bad magic at offset 0");
    }
    if (got < kPrb1HeaderBytes) {
        throw IoError("prb1: truncated header at offset " + std::to_string(got));
    }
    std::uint32_t version = get_u32(h + 4);
    if (version != kPrb1Version) {
        throw IoError("prb1: unsupported version " + std::to_string(version) + " at offset 4");
    }
    return {get_u32(h + 8), get_u32(h + 12)};
}

void unpack_row(Dataset &ds, std::size_t shot, const std::uint8_t *row, std::size_t n_meas) {
    BitTable &bits = ds.bits();
    for (std::size_t m = 0; m < n_meas; m++) {
        if ((row[m / 8] >> (m % 8)) & 1) bits.set(m, shot, true);
    }
}

void pack_row(const Dataset &ds, std::size_t shot, std::uint8_t *row) {
    const BitTable &bits = ds.bits();
    const std::size_t stride = (ds.n_measurements() + 7) / 8;
    std::fill(row, row + stride, 0);
    for (std::size_t m = 0; m < ds.n_measurements(); m++) {
        if (bits.get(m, shot)) row[m / 8] |= static_cast<std::uint8_t>(1u << (m % 8));
    }
}

const char *leak_sites_name(LeakSites s) { return s == LeakSites::AllGates ? "all-gates" : "two-qubit-gates"; }
const char *seep_sites_name(SeepSites s) {
    return s == SeepSites::LayerBoundary ? "boundary" : "boundary-and-reset";
}

/// Parses "key=value" tokens into a map, rejecting duplicates and malformed tokens.
std::map<std::string, std::string, std::less<>> parse_kv(std::span<const std::string_view> tokens,
                                                         const std::string &where) {
    std::map<std::string, std::string, std::less<>> kv;
    for (std::string_view tok : tokens) {
        auto eq = tok.find('=');
        if (eq == std::string_view::npos || eq == 0) {
            throw ValidationError(where + ": expected key=value, got '" + std::string(tok) + "'");
        }
        std::string key(tok.substr(0, eq));
        if (!kv.emplace(key, std::string(tok.substr(eq + 1))).second) {
            throw ValidationError(where + ": duplicate field " + key);
        }
    }
    return kv;
}

std::string line_ref(std::size_t line_no) { return "line " + std::to_string(line_no); }

}  // namespace

// Datasets ------------------------------------------------------------------

void write_prb1(std::ostream &out, const Dataset &dataset) {
    write_prb1_header(out, dataset.n_measurements(), dataset.n_shots());
    const std::size_t stride = (dataset.n_measurements() + 7) / 8;
    std::vector<std::uint8_t> row(stride);
    for (std::size_t s = 0; s < dataset.n_shots(); s++) {
        pack_row(dataset, s, row.data());
        out.write(reinterpret_cast<const char *>(row.data()), static_cast<std::streamsize>(stride));
    }
    if (!out) throw IoError("prb1: write failed");
}

Dataset read_prb1(std::istream &in) {
    Prb1Reader reader(in);
    Dataset ds(reader.n_measurements(), reader.n_shots());
    while (true) {
        ShotBatch b = reader.next(65536);
        if (b.n_shots == 0) break;
        for (std::size_t i = 0; i < b.n_shots; i++) {
            unpack_row(ds, b.first_shot + i, b.row(i).data(), b.n_measurements);
        }
    }
    return ds;
}

Prb1Reader::Prb1Reader(std::istream &in) : in_(in) {
    auto [m, s] = read_prb1_header(in_);
    n_measurements_ = m;
    n_shots_ = s;
}

ShotBatch Prb1Reader::next(std::size_t max_shots) {
    ShotBatch b;
    b.first_shot = consumed_;
    b.n_measurements = n_measurements_;
    b.n_shots = std::min(max_shots, n_shots_ - consumed_);
    const std::size_t stride = b.stride();
    if (b.n_shots > 0) {
        b.rows.resize(b.n_shots * stride);
        in_.read(reinterpret_cast<char *>(b.rows.data()), static_cast<std::streamsize>(b.rows.size()));
        auto got = static_cast<std::size_t>(in_.gcount());
        if (got != b.rows.size()) {
            throw IoError("prb1: truncated at offset " + std::to_string(kPrb1HeaderBytes + consumed_ * stride + got) +
                          " (header announces " + std::to_string(n_shots_) + " shots)");
        }
        const std::uint8_t pad = padding_mask(n_measurements_);
        if (pad) {
            for (std::size_t i = 0; i < b.n_shots; i++) {
                if (b.rows[i * stride + stride - 1] & pad) {
                    throw IoError("prb1: nonzero padding bits at offset " +
                                  std::to_string(kPrb1HeaderBytes + (consumed_ + i) * stride + stride - 1));
                }
            }
        }
        consumed_ += b.n_shots;
    }
    if (consumed_ == n_shots_ && !checked_tail_) {
        checked_tail_ = true;
        if (in_.peek() != std::char_traits<char>::eof()) {
            throw IoError("prb1: trailing data at offset " + std::to_string(kPrb1HeaderBytes + n_shots_ * stride));
        }
    }
    return b;
}

Prb1Writer::Prb1Writer(std::ostream &out, std::size_t n_measurements, std::size_t n_shots)
    : out_(out), n_measurements_(n_measurements), n_shots_(n_shots) {
    write_prb1_header(out_, n_measurements, n_shots);
}

void Prb1Writer::write(const ShotBatch &batch) {
    if (batch.n_measurements != n_measurements_ || batch.first_shot != written_ ||
        written_ + batch.n_shots > n_shots_) {
        throw ValidationError("prb1 writer: batch does not continue the stream");
    }
    out_.write(reinterpret_cast<const char *>(batch.rows.data()), static_cast<std::streamsize>(batch.rows.size()));
    if (!out_) throw IoError("prb1: write failed");
    written_ += batch.n_shots;
}

void Prb1Writer::finish() {
    if (written_ != n_shots_) {
        throw IoError("prb1 writer: wrote " + std::to_string(written_) + " of " + std::to_string(n_shots_) + " shots");
    }
    out_.flush();
    if (!out_) throw IoError("prb1: write failed");
}

void write_p01(std::ostream &out, const Dataset &dataset) {
    std::string line(dataset.n_measurements() + 1, '\n');
    for (std::size_t s = 0; s < dataset.n_shots(); s++) {
        for (std::size_t m = 0; m < dataset.n_measurements(); m++) line[m] = dataset.get(s, m) ? '1' : '0';
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    if (!out) throw IoError("p01: write failed");
}

Dataset read_p01(std::istream &in, std::optional<std::size_t> n_measurements) {
    std::vector<std::string> lines;
    std::string line;
    std::size_t line_no = 0;
    std::optional<std::size_t> width = n_measurements;
    while (std::getline(in, line)) {
        line_no++;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!width) width = line.size();
        if (line.size() != *width) {
            throw IoError("p01: line " + std::to_string(line_no) + " has " + std::to_string(line.size()) +
                          " bits, expected " + std::to_string(*width));
        }
        for (std::size_t i = 0; i < line.size(); i++) {
            if (line[i] != '0' && line[i] != '1') {
                throw IoError("p01: line " + std::to_string(line_no) + " column " + std::to_string(i + 1) +
                              ": expected 0 or 1");
            }
        }
        lines.push_back(line);
    }
    Dataset ds(width.value_or(0), lines.size());
    for (std::size_t s = 0; s < lines.size(); s++) {
        for (std::size_t m = 0; m < lines[s].size(); m++) {
            if (lines[s][m] == '1') ds.set(s, m, true);
        }
    }
    return ds;
}

DatasetFormat dataset_format_for(const std::filesystem::path &path) {
    auto ext = path.extension().string();
    if (ext == ".prb1") return DatasetFormat::Prb1;
    if (ext == ".p01") return DatasetFormat::P01;
    throw ValidationError("cannot infer dataset format of '" + path.string() + "' (use .prb1 or .p01)");
}

void save_dataset(const std::filesystem::path &path, const Dataset &dataset) {
    DatasetFormat fmt = dataset_format_for(path);
    write_file_atomic(
        path,
        [&](std::ostream &out) {
            if (fmt == DatasetFormat::Prb1) {
                write_prb1(out, dataset);
            } else {
                write_p01(out, dataset);
            }
        },
        fmt == DatasetFormat::Prb1);
}

Dataset load_dataset(const std::filesystem::path &path, std::optional<std::size_t> n_measurements) {
    DatasetFormat fmt = dataset_format_for(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        if (fmt == DatasetFormat::Prb1) {
            Dataset ds = read_prb1(in);
            if (n_measurements && ds.n_measurements() != *n_measurements) {
                throw ValidationError("dataset has " + std::to_string(ds.n_measurements()) +
                                      " measurements per shot, expected " + std::to_string(*n_measurements));
            }
            return ds;
        }
        return read_p01(in, n_measurements);
    } catch (const IoError &e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

// Models --------------------------------------------------------------------

void write_model(std::ostream &out, const NoiseModel &model) {
    model.validate();
    out << "paems-model v1\n";
    out << "kind " << model_kind_name(model.kind) << "\n";
    if (model.kind != ModelKind::PAEMS) {
        out << "p " << format_double(model.p) << "\n";
        return;
    }
    out << "leak_sites " << leak_sites_name(model.leak_sites) << "\n";
    out << "seep_sites " << seep_sites_name(model.seep_sites) << "\n";
    for (std::size_t q = 0; q < model.qubits.size(); q++) {
        const QubitParams &p = model.qubits[q];
        out << "qubit " << q << " t1=" << format_double(p.t1_us) << " t2=" << format_double(p.t2_us)
            << " f1q=" << format_double(p.f1q) << " p_init=" << format_double(p.p_init)
            << " p_reset=" << format_double(p.p_reset) << " p_readout=" << format_double(p.p_readout)
            << " p_leak=" << format_double(p.p_leak) << " p_seep=" << format_double(p.p_seep) << "\n";
    }
    for (const CouplerParams &c : model.couplers) {
        out << "coupler " << c.a << " " << c.b << " f2q=" << format_double(c.f2q) << "\n";
    }
}

NoiseModel read_model(std::istream &in) {
    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&]() -> bool {
        while (std::getline(in, line)) {
            line_no++;
            std::string_view t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            return true;
        }
        return false;
    };
    if (!next_line() || trim(line) != "paems-model v1") {
        throw ValidationError("model file must start with 'paems-model v1'");
    }
    if (!next_line()) throw ValidationError("model file: missing kind line");
    auto kind_tok = split_ws(line);
    if (kind_tok.size() != 2 || kind_tok[0] != "kind") {
        throw ValidationError("model file " + line_ref(line_no) + ": expected 'kind <name>'");
    }
    NoiseModel model;
    model.kind = parse_model_kind(kind_tok[1]);
    if (model.kind != ModelKind::PAEMS) {
        if (!next_line()) throw ValidationError("model file: missing 'p <value>' line");
        auto tok = split_ws(line);
        if (tok.size() != 2 || tok[0] != "p") {
            throw ValidationError("model file " + line_ref(line_no) + ": expected 'p <value>'");
        }
        model.p = parse_double(tok[1], "p");
        if (next_line()) throw ValidationError("model file " + line_ref(line_no) + ": unexpected content");
        model.validate();
        return model;
    }
    std::set<std::pair<std::uint32_t, std::uint32_t>> seen_couplers;
    while (next_line()) {
        auto tok = split_ws(line);
        std::string where = "model file " + line_ref(line_no);
        if (tok[0] == "leak_sites" && tok.size() == 2) {
            if (tok[1] == "two-qubit-gates") {
                model.leak_sites = LeakSites::TwoQubitGates;
            } else if (tok[1] == "all-gates") {
                model.leak_sites = LeakSites::AllGates;
            } else {
                throw ValidationError(where + ": unknown leak_sites '" + std::string(tok[1]) + "'");
            }
        } else if (tok[0] == "seep_sites" && tok.size() == 2) {
            if (tok[1] == "boundary-and-reset") {
                model.seep_sites = SeepSites::LayerBoundaryAndReset;
            } else if (tok[1] == "boundary") {
                model.seep_sites = SeepSites::LayerBoundary;
            } else {
                throw ValidationError(where + ": unknown seep_sites '" + std::string(tok[1]) + "'");
            }
        } else if (tok[0] == "qubit" && tok.size() >= 2) {
            auto q = parse_uint(tok[1], "qubit index");
            if (q != model.qubits.size()) {
                throw ValidationError(where + ": expected qubit " + std::to_string(model.qubits.size()) + ", got " +
                                      std::to_string(q));
            }
            auto kv = parse_kv(std::span(tok).subspan(2), where);
            QubitParams p;
            const std::pair<const char *, double *> fields[] = {
                {"t1", &p.t1_us},         {"t2", &p.t2_us},           {"f1q", &p.f1q},       {"p_init", &p.p_init},
                {"p_reset", &p.p_reset},  {"p_readout", &p.p_readout}, {"p_leak", &p.p_leak}, {"p_seep", &p.p_seep},
            };
            for (auto [name, dst] : fields) {
                auto it = kv.find(name);
                if (it == kv.end()) throw ValidationError(where + ": qubit " + std::to_string(q) + " missing " + name);
                *dst = parse_double(it->second, name);
                kv.erase(it);
            }
            if (!kv.empty()) throw ValidationError(where + ": unknown field " + kv.begin()->first);
            model.qubits.push_back(p);
        } else if (tok[0] == "coupler" && tok.size() == 4) {
            CouplerParams c;
            c.a = static_cast<std::uint32_t>(parse_uint(tok[1], "coupler endpoint"));
            c.b = static_cast<std::uint32_t>(parse_uint(tok[2], "coupler endpoint"));
            auto kv = parse_kv(std::span(tok).subspan(3), where);
            auto it = kv.find("f2q");
            if (it == kv.end() || kv.size() != 1) throw ValidationError(where + ": coupler needs exactly f2q=<value>");
            c.f2q = parse_double(it->second, "f2q");
            if (!seen_couplers.insert({std::min(c.a, c.b), std::max(c.a, c.b)}).second) {
                throw ValidationError(where + ": duplicate coupler " + std::to_string(c.a) + "-" + std::to_string(c.b));
            }
            model.couplers.push_back(c);
        } else {
            throw ValidationError(where + ": unrecognized line '" + std::string(trim(line)) + "'");
        }
    }
    model.validate();
    return model;
}

std::string model_to_string(const NoiseModel &model) {
    std::ostringstream out;
    write_model(out, model);
    return out.str();
}

NoiseModel parse_model(const std::string &text) {
    std::istringstream in(text);
    return read_model(in);
}

NoiseModel load_model_arg(const std::string &arg) {
    auto colon = arg.find(':');
    if (colon != std::string::npos && !std::filesystem::exists(arg)) {
        ModelKind kind = parse_model_kind(arg.substr(0, colon));
        if (kind == ModelKind::PAEMS) {
            throw ValidationError("PAEMS models must be given as a model file");
        }
        return NoiseModel::baseline(kind, parse_double(arg.substr(colon + 1), "baseline p"));
    }
    std::string text = read_text_file(arg);
    try {
        return parse_model(text);
    } catch (const ValidationError &e) {
        throw ValidationError(arg + ": " + e.what());
    }
}

// Calibration ---------------------------------------------------------------

GateTimingTable CalibrationRecord::effective_timing() const {
    GateTimingTable t = timing;
    for (std::uint32_t phys : layout) {
        auto it = qubits.find(phys);
        if (it == qubits.end()) continue;
        const QubitCalibration &q = it->second;
        if (q.gate_1q_ns) t.gate_1q_ns = std::max(t.gate_1q_ns, *q.gate_1q_ns);
        if (q.gate_2q_ns) t.gate_2q_ns = std::max(t.gate_2q_ns, *q.gate_2q_ns);
        if (q.measure_ns) t.measure_ns = std::max(t.measure_ns, *q.measure_ns);
        if (q.reset_ns) t.reset_ns = std::max(t.reset_ns, *q.reset_ns);
    }
    return t;
}

CalibrationRecord parse_calibration(std::istream &in) {
    CalibrationRecord cal;
    std::string line;
    std::size_t line_no = 0;
    bool header = false;
    bool have_layout = false;
    while (std::getline(in, line)) {
        line_no++;
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        std::string where = "calibration " + line_ref(line_no);
        if (!header) {
            if (t != "paems-calibration v1") throw ValidationError("calibration file must start with 'paems-calibration v1'");
            header = true;
            continue;
        }
        auto tok = split_ws(t);
        if (tok[0] == "platform" && tok.size() == 2) {
            cal.platform = std::string(tok[1]);
        } else if (tok[0] == "timestamp" && tok.size() == 2) {
            cal.timestamp = std::string(tok[1]);
        } else if (tok[0] == "timing") {
            auto kv = parse_kv(std::span(tok).subspan(1), where);
            const std::pair<const char *, double *> fields[] = {{"gate_1q", &cal.timing.gate_1q_ns},
                                                                {"gate_2q", &cal.timing.gate_2q_ns},
                                                                {"measure", &cal.timing.measure_ns},
                                                                {"reset", &cal.timing.reset_ns}};
            for (auto [name, dst] : fields) {
                auto it = kv.find(name);
                if (it == kv.end()) continue;
                *dst = parse_double(it->second, name);
                if (!(*dst > 0) || std::isinf(*dst)) throw ValidationError(where + ": " + name + " must be positive");
                kv.erase(it);
            }
            if (!kv.empty()) throw ValidationError(where + ": unknown timing field " + kv.begin()->first);
        } else if (tok[0] == "layout" && tok.size() >= 2) {
            if (have_layout) throw ValidationError(where + ": duplicate layout line");
            have_layout = true;
            std::set<std::uint32_t> seen;
            for (std::size_t i = 1; i < tok.size(); i++) {
                auto phys = static_cast<std::uint32_t>(parse_uint(tok[i], "layout entry"));
                if (!seen.insert(phys).second) {
                    throw ValidationError(where + ": physical qubit " + std::to_string(phys) + " appears twice in layout");
                }
                cal.layout.push_back(phys);
            }
        } else if (tok[0] == "qubit" && tok.size() >= 2) {
            QubitCalibration q;
            q.physical = static_cast<std::uint32_t>(parse_uint(tok[1], "qubit id"));
            std::string who = "qubit " + std::to_string(q.physical);
            auto kv = parse_kv(std::span(tok).subspan(2), where);
            const std::pair<const char *, double *> required[] = {
                {"t1", &q.t1_us}, {"t2", &q.t2_us}, {"err_1q", &q.err_1q}, {"err_readout", &q.err_readout}};
            for (auto [name, dst] : required) {
                auto it = kv.find(name);
                if (it == kv.end()) throw ValidationError(where + ": " + who + " is missing field " + name);
                *dst = parse_double(it->second, name);
                kv.erase(it);
            }
            if (!(q.t1_us > 0)) throw ValidationError(where + ": " + who + " t1 must be positive");
            if (!(q.t2_us > 0)) throw ValidationError(where + ": " + who + " t2 must be positive");
            if (!(q.err_1q >= 0 && q.err_1q < 1)) throw ValidationError(where + ": " + who + " err_1q out of range");
            if (!(q.err_readout >= 0 && q.err_readout < 1)) {
                throw ValidationError(where + ": " + who + " err_readout out of range");
            }
            const std::pair<const char *, std::optional<double> *> optional_fields[] = {{"gate_1q", &q.gate_1q_ns},
                                                                                        {"gate_2q", &q.gate_2q_ns},
                                                                                        {"measure", &q.measure_ns},
                                                                                        {"reset", &q.reset_ns}};
            for (auto [name, dst] : optional_fields) {
                auto it = kv.find(name);
                if (it == kv.end()) continue;
                double v = parse_double(it->second, name);
                if (!(v > 0) || std::isinf(v)) throw ValidationError(where + ": " + who + " " + name + " must be positive");
                *dst = v;
                kv.erase(it);
            }
            if (!kv.empty()) throw ValidationError(where + ": " + who + " has unknown field " + kv.begin()->first);
            if (!cal.qubits.emplace(q.physical, q).second) {
                throw ValidationError(where + ": duplicate " + who);
            }
        } else if (tok[0] == "coupler" && tok.size() >= 3) {
            CouplerCalibration c;
            c.a = static_cast<std::uint32_t>(parse_uint(tok[1], "coupler endpoint"));
            c.b = static_cast<std::uint32_t>(parse_uint(tok[2], "coupler endpoint"));
            auto kv = parse_kv(std::span(tok).subspan(3), where);
            auto it = kv.find("err_2q");
            std::string who = "coupler " + std::to_string(c.a) + "-" + std::to_string(c.b);
            if (it == kv.end()) throw ValidationError(where + ": " + who + " is missing field err_2q");
            c.err_2q = parse_double(it->second, "err_2q");
            if (!(c.err_2q >= 0 && c.err_2q < 1)) throw ValidationError(where + ": " + who + " err_2q out of range");
            if (kv.size() != 1) throw ValidationError(where + ": " + who + " has unknown fields");
            cal.couplers.push_back(c);
        } else {
            throw ValidationError(where + ": unrecognized line '" + std::string(t) + "'");
        }
    }
    if (!header) throw ValidationError("calibration file is empty");
    if (!have_layout) throw ValidationError("calibration file has no layout line");
    for (std::size_t i = 0; i < cal.layout.size(); i++) {
        if (!cal.qubits.count(cal.layout[i])) {
            throw ValidationError("calibration: layout position " + std::to_string(i) + " maps to physical qubit " +
                                  std::to_string(cal.layout[i]) + ", which has no qubit line");
        }
    }
    return cal;
}

CalibrationRecord load_calibration(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    try {
        return parse_calibration(in);
    } catch (const ValidationError &e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

NoiseModel init_model(const CalibrationRecord &cal, std::vector<std::string> *warnings) {
    NoiseModel m;
    m.kind = ModelKind::PAEMS;
    for (std::size_t i = 0; i < cal.layout.size(); i++) {
        const QubitCalibration &q = cal.qubits.at(cal.layout[i]);
        QubitParams p;
        p.t1_us = q.t1_us;
        p.t2_us = q.t2_us;
        if (p.t2_us > 2 * p.t1_us) {
            p.t2_us = 2 * p.t1_us;
            if (warnings) {
                warnings->push_back("qubit " + std::to_string(q.physical) + ": t2 " + format_double(q.t2_us) +
                                    " exceeds 2*t1, clamped to " + format_double(p.t2_us));
            }
        }
        p.f1q = 1 - q.err_1q;
        p.p_readout = q.err_readout;
        p.p_init = q.err_readout / 2;
        p.p_reset = q.err_readout / 2;
        m.qubits.push_back(p);
    }
    for (std::size_t i = 0; i + 1 < cal.layout.size(); i++) {
        std::uint32_t a = cal.layout[i];
        std::uint32_t b = cal.layout[i + 1];
        auto it = std::find_if(cal.couplers.begin(), cal.couplers.end(), [&](const CouplerCalibration &c) {
            return (c.a == a && c.b == b) || (c.a == b && c.b == a);
        });
        if (it == cal.couplers.end()) {
            throw ValidationError("calibration: no coupler line for physical qubits " + std::to_string(a) + "-" +
                                  std::to_string(b) + " (chain positions " + std::to_string(i) + "-" +
                                  std::to_string(i + 1) + ")");
        }
        m.couplers.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1), 1 - it->err_2q});
    }
    m.validate();
    return m;
}

// Reports and artifact metadata ----------------------------------------------

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    static const char *digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; i--) {
        s[static_cast<std::size_t>(i)] = digits[v & 0xF];
        v >>= 4;
    }
    return s;
}

std::string config_hash(const std::map<std::string, std::string> &resolved) {
    std::string canon;
    for (const auto &[k, v] : resolved) canon += k + "=" + v + "\n";
    return hex64(fnv1a64(canon));
}

std::string meta_json(const ArtifactMeta &meta) {
    nlohmann::json j;
    j["tool"] = "paems";
    j["tool_version"] = meta.tool_version;
    j["seed"] = meta.seed;
    j["config_hash"] = meta.config_hash;
    j["command"] = meta.command;
    return j.dump(2) + "\n";
}

std::filesystem::path meta_sidecar_path(const std::filesystem::path &artifact) {
    return std::filesystem::path(artifact.string() + ".meta.json");
}

void write_correlation_csv(std::ostream &out, const CorrelationReport &report, const ArtifactMeta *meta) {
    if (meta) {
        out << "# tool=paems version=" << meta->tool_version << " seed=" << meta->seed
            << " config_hash=" << meta->config_hash << "\n";
    }
    out << "detector_i,detector_j,sector,p_ij\n";
    const std::size_t n = report.n_detectors();
    for (std::size_t i = 0; i < n; i++) {
        for (std::size_t j = i + 1; j < n; j++) {
            double v = report.at(i, j);
            out << i << "," << j << "," << sector_name(report.sector(i, j)) << ","
                << (std::isnan(v) ? std::string("nan") : format_double(v)) << "\n";
        }
    }
}

void write_file_atomic(const std::filesystem::path &path, const std::function<void(std::ostream &)> &fill,
                       bool binary) {
    std::filesystem::path tmp = path;
    tmp += ".tmp-" + std::to_string(::getpid());
    try {
        {
            std::ofstream out(tmp, binary ? std::ios::binary | std::ios::trunc : std::ios::trunc);
            if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
            fill(out);
            out.flush();
            if (!out) throw IoError("write to '" + path.string() + "' failed");
        }
        std::error_code ec;
        std::filesystem::rename(tmp, path, ec);
        if (ec) throw IoError("cannot move output into place at '" + path.string() + "': " + ec.message());
    } catch (...) {
        std::error_code ec;
        std::filesystem::remove(tmp, ec);
        throw;
    }
}

std::string read_text_file(const std::filesystem::path &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read of '" + path.string() + "' failed");
    return ss.str();
}

}  // namespace paems
