#pragma once

// Feature encodings and the tabular dataset they produce.
//
// circuit_level (152 columns, layout version 1):
//     rx_00..rx_49, ry_00..ry_49, rz_00..rz_49   rotation counts per angle bin
//     cnot                                       CNOT count
//     qubits                                     qubit count
// Angle bins are half-open [2 pi i / 50, 2 pi (i+1) / 50) after reducing the
// angle mod 2 pi.
//
// shadow: one column per 1- and 2-local Pauli string ("sh_X0", "sh_Z0Y1", ...)
// in local_observables() order, either for the circuit's own n or padded to
// the 6-qubit layout.
//
// combined: circuit_level columns followed by shadow columns.
//
// CSV: header "id,<features...>,sre,n,gates,steps", values printed with 17
// significant digits.

#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "magic_meter/circuit.hpp"
#include "magic_meter/core/matrix.hpp"
#include "magic_meter/core/parallel.hpp"
#include "magic_meter/core/random.hpp"
#include "magic_meter/core/text.hpp"
#include "magic_meter/shadows.hpp"
#include "magic_meter/simulator.hpp"

namespace magic_meter {

inline constexpr int kFeatureLayoutVersion = 1;
inline constexpr std::size_t kAngleBins = 50;
inline constexpr std::size_t kCircuitLevelWidth = 3 * kAngleBins + 2;

enum class Encoding { CircuitLevel, Shadow, Combined };

inline std::string encoding_name(Encoding e) {
    switch (e) {
        case Encoding::CircuitLevel: return "circuit_level";
        case Encoding::Shadow: return "shadow";
        case Encoding::Combined: return "combined";
    }
    return "?";
}

inline Encoding parse_encoding(std::string_view s) {
    if (s == "circuit_level") return Encoding::CircuitLevel;
    if (s == "shadow") return Encoding::Shadow;
    if (s == "combined") return Encoding::Combined;
    throw std::invalid_argument("unknown encoding '" + std::string(s) + "'");
}

inline std::size_t angle_bin(double angle) {
    double a = std::fmod(angle, kTwoPi);
    if (a < 0) a += kTwoPi;
    const auto bin = static_cast<std::size_t>(std::floor(a / kTwoPi * kAngleBins));
    return std::min(bin, kAngleBins - 1);
}

inline std::vector<std::string> circuit_level_names() {
    std::vector<std::string> names;
    for (const char* kind : {"rx", "ry", "rz"}) {
        for (std::size_t b = 0; b < kAngleBins; ++b) {
            names.push_back(std::string(kind) + "_" + (b < 10 ? "0" : "") + std::to_string(b));
        }
    }
    names.push_back("cnot");
    names.push_back("qubits");
    return names;
}

/// Gate-order blind: only the multiset of gates matters.
inline std::vector<double> circuit_level_features(const Circuit& c) {
    std::vector<double> f(kCircuitLevelWidth, 0.0);
    for (const auto& g : c.gates) {
        switch (g.kind) {
            case GateKind::CNOT: f[3 * kAngleBins] += 1; break;
            case GateKind::RX: f[angle_bin(*g.angle)] += 1; break;
            case GateKind::RY: f[kAngleBins + angle_bin(*g.angle)] += 1; break;
            case GateKind::RZ: f[2 * kAngleBins + angle_bin(*g.angle)] += 1; break;
        }
    }
    f[3 * kAngleBins + 1] = c.n_qubits;
    return f;
}

inline std::vector<std::string> shadow_names(std::uint32_t n) {
    std::vector<std::string> names;
    for (const auto& p : local_observables(n)) names.push_back("sh_" + local_label(p));
    return names;
}

/// [circuit_level || shadow].
inline std::vector<double> combined_features(const Circuit& c, const Statevector& state,
                                             const ShadowConfig& config, unsigned threads = 1) {
    auto f = circuit_level_features(c);
    const auto s = shadow_features(state, config, threads);
    f.insert(f.end(), s.begin(), s.end());
    return f;
}

struct Dataset {
    Encoding encoding = Encoding::CircuitLevel;
    int layout_version = kFeatureLayoutVersion;
    std::vector<std::string> feature_names;
    std::vector<std::string> ids;
    Matrix features;
    std::vector<double> labels;
    std::vector<std::uint32_t> n_qubits;
    std::vector<std::uint32_t> gate_counts;
    std::vector<std::uint32_t> trotter_steps;

    std::size_t size() const noexcept { return labels.size(); }

    Dataset subset(std::span<const std::size_t> rows) const {
        Dataset d;
        d.encoding = encoding;
        d.layout_version = layout_version;
        d.feature_names = feature_names;
        d.features = features.select_rows(rows);
        d.ids = select<std::string>(ids, rows);
        d.labels = select<double>(labels, rows);
        d.n_qubits = select<std::uint32_t>(n_qubits, rows);
        d.gate_counts = select<std::uint32_t>(gate_counts, rows);
        d.trotter_steps = select<std::uint32_t>(trotter_steps, rows);
        return d;
    }

    /// Rows of `other` appended; column layouts must match.
    void append(const Dataset& other) {
        if (size() == 0 && feature_names.empty()) {
            *this = other;
            return;
        }
        if (other.feature_names != feature_names) {
            throw std::invalid_argument("cannot concatenate datasets with different columns");
        }
        for (std::size_t i = 0; i < other.size(); ++i) features.append_row(other.features.row(i));
        ids.insert(ids.end(), other.ids.begin(), other.ids.end());
        labels.insert(labels.end(), other.labels.begin(), other.labels.end());
        n_qubits.insert(n_qubits.end(), other.n_qubits.begin(), other.n_qubits.end());
        gate_counts.insert(gate_counts.end(), other.gate_counts.begin(), other.gate_counts.end());
        trotter_steps.insert(trotter_steps.end(), other.trotter_steps.begin(),
                             other.trotter_steps.end());
    }

    bool operator==(const Dataset&) const = default;
};

struct AssembleOptions {
    Encoding encoding = Encoding::CircuitLevel;
    ShadowConfig shadow;  // row i samples with derive_seed(shadow.seed, i)
    bool pad = false;     // embed shadow columns in the 6-qubit layout
    unsigned threads = 1;
};

/// Builds the feature matrix; row order = input order. Row ids are the input
/// positions unless `ids` is given.
inline Dataset assemble(const std::vector<LabeledCircuit>& rows, const AssembleOptions& opts,
                        const std::vector<std::string>* ids = nullptr) {
    const bool needs_shadow = opts.encoding != Encoding::CircuitLevel;
    std::set<std::uint32_t> ns;
    for (const auto& r : rows) ns.insert(r.circuit.n_qubits);
    if (needs_shadow && ns.size() > 1 && !opts.pad) {
        throw std::invalid_argument("rows mix qubit counts; shadow encodings need padding");
    }
    const std::uint32_t shadow_n = opts.pad ? kPaddedQubits : (ns.empty() ? 2 : *ns.begin());

    Dataset d;
    d.encoding = opts.encoding;
    if (opts.encoding != Encoding::Shadow) d.feature_names = circuit_level_names();
    if (needs_shadow) {
        const auto names = shadow_names(shadow_n);
        d.feature_names.insert(d.feature_names.end(), names.begin(), names.end());
    }

    std::vector<std::vector<double>> values(rows.size());
    parallel_for(rows.size(), opts.threads, [&](std::size_t i) {
        const Circuit& c = rows[i].circuit;
        std::vector<double> f;
        if (opts.encoding != Encoding::Shadow) f = circuit_level_features(c);
        if (needs_shadow) {
            ShadowConfig cfg = opts.shadow;
            cfg.seed = derive_seed(opts.shadow.seed, i);
            auto s = shadow_features(simulate(c), cfg);
            if (opts.pad) s = pad_shadow_features(s, c.n_qubits, kPaddedQubits);
            f.insert(f.end(), s.begin(), s.end());
        }
        values[i] = std::move(f);
    });

    d.features = Matrix(0, d.feature_names.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const Circuit& c = rows[i].circuit;
        if (!std::isfinite(rows[i].sre)) throw std::invalid_argument("non-finite label");
        d.features.append_row(values[i]);
        d.ids.push_back(ids ? (*ids)[i] : std::to_string(i));
        d.labels.push_back(rows[i].sre);
        d.n_qubits.push_back(c.n_qubits);
        d.gate_counts.push_back(static_cast<std::uint32_t>(c.gates.size()));
        d.trotter_steps.push_back(c.meta.family == Family::TIM ? c.meta.trotter_steps : 0);
    }
    return d;
}

inline Encoding infer_encoding(const std::vector<std::string>& names) {
    bool shadow = false, circuit = false;
    for (const auto& n : names) {
        (n.rfind("sh_", 0) == 0 ? shadow : circuit) = true;
    }
    if (shadow && circuit) return Encoding::Combined;
    return shadow ? Encoding::Shadow : Encoding::CircuitLevel;
}

inline std::string to_csv(const Dataset& d) {
    std::string out = "id";
    for (const auto& n : d.feature_names) out += "," + n;
    out += ",sre,n,gates,steps\n";
    for (std::size_t i = 0; i < d.size(); ++i) {
        out += d.ids[i];
        for (double v : d.features.row(i)) out += "," + format_double(v);
        out += "," + format_double(d.labels[i]);
        out += "," + std::to_string(d.n_qubits[i]);
        out += "," + std::to_string(d.gate_counts[i]);
        out += "," + std::to_string(d.trotter_steps[i]) + "\n";
    }
    return out;
}

inline Dataset from_csv(std::string_view text) {
    const auto lines = split(text, '\n');
    if (lines.empty() || trim(lines[0]).empty()) throw std::invalid_argument("empty CSV");
    const auto header = split(trim(lines[0]), ',');
    constexpr std::size_t kTrailing = 4;
    if (header.size() < 1 + kTrailing || header[0] != "id" ||
        header[header.size() - 4] != "sre" || header[header.size() - 3] != "n" ||
        header[header.size() - 2] != "gates" || header[header.size() - 1] != "steps") {
        throw std::invalid_argument("CSV header must be id,<features...>,sre,n,gates,steps");
    }
    Dataset d;
    for (std::size_t i = 1; i + kTrailing < header.size(); ++i) {
        d.feature_names.emplace_back(header[i]);
    }
    d.encoding = infer_encoding(d.feature_names);
    const std::size_t width = d.feature_names.size();
    d.features = Matrix(0, width);
    std::vector<double> row(width);
    for (std::size_t li = 1; li < lines.size(); ++li) {
        const auto line = trim(lines[li]);
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (cells.size() != header.size()) {
            throw std::invalid_argument("CSV line " + std::to_string(li + 1) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(header.size()));
        }
        d.ids.emplace_back(cells[0]);
        for (std::size_t j = 0; j < width; ++j) row[j] = parse_double(cells[1 + j]);
        d.features.append_row(row);
        d.labels.push_back(parse_double(cells[1 + width]));
        d.n_qubits.push_back(static_cast<std::uint32_t>(parse_double(cells[2 + width])));
        d.gate_counts.push_back(static_cast<std::uint32_t>(parse_double(cells[3 + width])));
        d.trotter_steps.push_back(static_cast<std::uint32_t>(parse_double(cells[4 + width])));
    }
    return d;
}

inline Dataset load_csv(const std::string& path) { return from_csv(read_file(path)); }

inline void save_csv(const Dataset& d, const std::string& path) { write_file(path, to_csv(d)); }

/// Per-column z-score. Columns whose training std is below 1e-12 pass through
/// untouched.
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static constexpr double kConstantTolerance = 1e-12;

    static Standardizer fit(const Matrix& x) {
        if (x.rows() == 0) throw std::invalid_argument("cannot fit a standardizer on zero rows");
        Standardizer s;
        const std::size_t d = x.cols();
        s.mean.assign(d, 0.0);
        s.scale.assign(d, 1.0);
        const double n = static_cast<double>(x.rows());
        for (std::size_t j = 0; j < d; ++j) {
            double m = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i) m += x(i, j);
            m /= n;
            double residual = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i) residual += x(i, j) - m;
            m += residual / n;
            double var = 0.0;
            for (std::size_t i = 0; i < x.rows(); ++i) var += (x(i, j) - m) * (x(i, j) - m);
            const double sd = std::sqrt(var / n);
            if (sd >= kConstantTolerance) {
                s.mean[j] = m;
                s.scale[j] = sd;
            }
        }
        return s;
    }

    void apply_inplace(std::span<double> row) const {
        for (std::size_t j = 0; j < row.size(); ++j) row[j] = (row[j] - mean[j]) / scale[j];
    }

    Matrix apply(const Matrix& x) const {
        check(x.cols());
        Matrix out = x;
        for (std::size_t i = 0; i < out.rows(); ++i) apply_inplace(out.row(i));
        return out;
    }

    Matrix inverse(const Matrix& z) const {
        check(z.cols());
        Matrix out = z;
        for (std::size_t i = 0; i < out.rows(); ++i) {
            auto r = out.row(i);
            for (std::size_t j = 0; j < r.size(); ++j) r[j] = r[j] * scale[j] + mean[j];
        }
        return out;
    }

    void check(std::size_t cols) const {
        if (cols != mean.size()) throw std::invalid_argument("standardizer width mismatch");
    }

    bool operator==(const Standardizer&) const = default;
};

}  // namespace magic_meter
