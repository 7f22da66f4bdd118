#pragma once

// Circuit intermediate representation shared by every stage of the pipeline,
// plus its line-oriented JSON serialization:
//
//     {"v":1,"n":2,"family":"RQC","seed":0,"g":0,"gates":[]}
//     {"v":1,"n":2,"family":"TIM","seed":9,"t":1,"theta":0.5,"phi":0.25,"gates":[
//         {"k":"cnot","q":[0,1]},{"k":"rz","q":[1],"a":1}, ...]}
//
// Keys are written in the fixed order above, angles with 17 significant
// digits, so serialize(deserialize(line)) reproduces `line` byte for byte.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "magic_meter/core/text.hpp"

namespace magic_meter {

inline constexpr int kCircuitSchemaVersion = 1;

enum class GateKind : std::uint8_t { CNOT, RX, RY, RZ };

inline std::string_view gate_name(GateKind k) {
    switch (k) {
        case GateKind::CNOT: return "cnot";
        case GateKind::RX: return "rx";
        case GateKind::RY: return "ry";
        case GateKind::RZ: return "rz";
    }
    return "?";
}

inline GateKind parse_gate_name(std::string_view name) {
    if (name == "cnot") return GateKind::CNOT;
    if (name == "rx") return GateKind::RX;
    if (name == "ry") return GateKind::RY;
    if (name == "rz") return GateKind::RZ;
    throw std::invalid_argument("unknown gate name '" + std::string(name) + "'");
}

/// Rotations act on qubits[0] with RX(a) = exp(-i a X / 2) (same for RY, RZ).
/// CNOT acts on (control, target) = (qubits[0], qubits[1]) and has no angle.
/// Angles are kept exactly as generated; they are only reduced mod 2*pi when
/// binned into features.
struct Gate {
    GateKind kind = GateKind::CNOT;
    std::vector<std::uint32_t> qubits;
    std::optional<double> angle;

    static Gate cnot(std::uint32_t control, std::uint32_t target) {
        return {GateKind::CNOT, {control, target}, std::nullopt};
    }
    static Gate rotation(GateKind kind, std::uint32_t qubit, double angle) {
        return {kind, {qubit}, angle};
    }
    static Gate rx(std::uint32_t q, double a) { return rotation(GateKind::RX, q, a); }
    static Gate ry(std::uint32_t q, double a) { return rotation(GateKind::RY, q, a); }
    static Gate rz(std::uint32_t q, double a) { return rotation(GateKind::RZ, q, a); }

    bool operator==(const Gate&) const = default;
};

enum class Family : std::uint8_t { RQC, TIM };

inline std::string_view family_name(Family f) { return f == Family::RQC ? "RQC" : "TIM"; }

inline Family parse_family(std::string_view s) {
    if (s == "RQC" || s == "rqc") return Family::RQC;
    if (s == "TIM" || s == "tim") return Family::TIM;
    throw std::invalid_argument("unknown circuit family '" + std::string(s) + "'");
}

/// Generation metadata. RQC circuits record the sampled gate count; TIM
/// circuits record the Trotter step count and the products theta = J*dt,
/// phi = h*dt, which determine the circuit completely.
struct CircuitMeta {
    Family family = Family::RQC;
    std::uint64_t seed = 0;
    std::uint32_t gate_count = 0;
    std::uint32_t trotter_steps = 0;
    double theta = 0.0;
    double phi = 0.0;

    bool operator==(const CircuitMeta&) const = default;
};

struct Circuit {
    std::uint32_t n_qubits = 0;
    std::vector<Gate> gates;
    CircuitMeta meta;

    bool operator==(const Circuit&) const = default;
};

struct QubitRange {
    std::uint32_t min = 2;
    std::uint32_t max = 6;
};

/// First invariant violation found by validate().
class CircuitError : public std::invalid_argument {
  public:
    CircuitError(std::size_t gate_index, const std::string& reason)
        : std::invalid_argument("gate " + std::to_string(gate_index) + ": " + reason),
          gate_index_(gate_index),
          reason_(reason) {}

    std::size_t gate_index() const noexcept { return gate_index_; }
    const std::string& reason() const noexcept { return reason_; }

  private:
    std::size_t gate_index_;
    std::string reason_;
};

inline void validate(const Circuit& c, QubitRange range = {}) {
    if (c.n_qubits < range.min || c.n_qubits > range.max) {
        throw std::invalid_argument("qubit count " + std::to_string(c.n_qubits) + " outside [" +
                                    std::to_string(range.min) + ", " + std::to_string(range.max) +
                                    "]");
    }
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const Gate& g = c.gates[i];
        const std::size_t arity = g.kind == GateKind::CNOT ? 2 : 1;
        if (g.qubits.size() != arity) {
            throw CircuitError(i, "expected " + std::to_string(arity) + " qubit(s)");
        }
        for (auto q : g.qubits) {
            if (q >= c.n_qubits) {
                throw CircuitError(i, "index out of range");
            }
        }
        if (g.kind == GateKind::CNOT) {
            if (g.qubits[0] == g.qubits[1]) {
                throw CircuitError(i, "duplicate qubits");
            }
            if (g.angle) {
                throw CircuitError(i, "unexpected angle");
            }
        } else if (!g.angle) {
            throw CircuitError(i, "missing angle");
        }
    }
}

namespace detail {

inline void append_circuit_body(std::string& out, const Circuit& c) {
    out += "{\"v\":" + std::to_string(kCircuitSchemaVersion);
    out += ",\"n\":" + std::to_string(c.n_qubits);
    out += ",\"family\":\"";
    out += family_name(c.meta.family);
    out += "\",\"seed\":" + std::to_string(c.meta.seed);
    if (c.meta.family == Family::RQC) {
        out += ",\"g\":" + std::to_string(c.meta.gate_count);
    } else {
        out += ",\"t\":" + std::to_string(c.meta.trotter_steps);
        out += ",\"theta\":" + format_double(c.meta.theta);
        out += ",\"phi\":" + format_double(c.meta.phi);
    }
    out += ",\"gates\":[";
    for (std::size_t i = 0; i < c.gates.size(); ++i) {
        const Gate& g = c.gates[i];
        if (i) out += ',';
        out += "{\"k\":\"";
        out += gate_name(g.kind);
        out += "\",\"q\":[";
        for (std::size_t j = 0; j < g.qubits.size(); ++j) {
            if (j) out += ',';
            out += std::to_string(g.qubits[j]);
        }
        out += ']';
        if (g.angle) {
            out += ",\"a\":" + format_double(*g.angle);
        }
        out += '}';
    }
    out += ']';
}

template <typename T>
T require(const nlohmann::json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) {
        throw std::invalid_argument(std::string("missing key '") + key + "'");
    }
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw std::invalid_argument(std::string("bad value for key '") + key + "'");
    }
}

}  // namespace detail

inline std::string serialize(const Circuit& c) {
    std::string out;
    detail::append_circuit_body(out, c);
    out += '}';
    return out;
}

/// Parses an already-decoded JSON object. Extra keys (such as the labels
/// added by the `label` stage) are ignored.
inline Circuit circuit_from_json(const nlohmann::json& j, QubitRange range = {}) {
    if (!j.is_object()) {
        throw std::invalid_argument("circuit line is not a JSON object");
    }
    const int version = detail::require<int>(j, "v");
    if (version != kCircuitSchemaVersion) {
        throw std::invalid_argument("schema version mismatch: got " + std::to_string(version) +
                                    ", expected " + std::to_string(kCircuitSchemaVersion));
    }
    Circuit c;
    c.n_qubits = detail::require<std::uint32_t>(j, "n");
    c.meta.family = parse_family(detail::require<std::string>(j, "family"));
    c.meta.seed = detail::require<std::uint64_t>(j, "seed");
    if (c.meta.family == Family::RQC) {
        c.meta.gate_count = detail::require<std::uint32_t>(j, "g");
    } else {
        c.meta.trotter_steps = detail::require<std::uint32_t>(j, "t");
        c.meta.theta = detail::require<double>(j, "theta");
        c.meta.phi = detail::require<double>(j, "phi");
    }
    const auto gates_it = j.find("gates");
    if (gates_it == j.end() || !gates_it->is_array()) {
        throw std::invalid_argument("'gates' must be an array");
    }
    c.gates.reserve(gates_it->size());
    for (const auto& gj : *gates_it) {
        Gate g;
        g.kind = parse_gate_name(detail::require<std::string>(gj, "k"));
        g.qubits = detail::require<std::vector<std::uint32_t>>(gj, "q");
        if (gj.contains("a")) {
            g.angle = detail::require<double>(gj, "a");
        }
        c.gates.push_back(std::move(g));
    }
    validate(c, range);
    return c;
}

inline nlohmann::json parse_json_line(std::string_view line) {
    try {
        return nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument(std::string("malformed JSON: ") + e.what());
    }
}

inline Circuit deserialize(std::string_view line, QubitRange range = {}) {
    return circuit_from_json(parse_json_line(line), range);
}

/// A circuit with its exact label and the time spent computing it.
struct LabeledCircuit {
    Circuit circuit;
    double sre = 0.0;
    double label_ms = 0.0;
};

inline std::string serialize(const LabeledCircuit& lc) {
    std::string out;
    detail::append_circuit_body(out, lc.circuit);
    out += ",\"sre\":" + format_double(lc.sre);
    out += ",\"label_ms\":" + format_double(lc.label_ms);
    out += '}';
    return out;
}

inline LabeledCircuit deserialize_labeled(std::string_view line, QubitRange range = {}) {
    const auto j = parse_json_line(line);
    LabeledCircuit lc;
    lc.circuit = circuit_from_json(j, range);
    lc.sre = detail::require<double>(j, "sre");
    lc.label_ms = j.contains("label_ms") ? detail::require<double>(j, "label_ms") : 0.0;
    return lc;
}

}  // namespace magic_meter
