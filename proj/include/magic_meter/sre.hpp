#pragma once

// Exact stabilizer Renyi entropy
//
//     S_a(psi) = 1/(1-a) * log( sum_P Xi_P^a ) - n log 2,   Xi_P = <psi|P|psi>^2 / 2^n
//
// summed over all 4^n Pauli strings. The pipeline uses a = 2.

#include <chrono>
#include <cmath>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "magic_meter/circuit.hpp"
#include "magic_meter/core/parallel.hpp"
#include "magic_meter/simulator.hpp"

namespace magic_meter {

/// Natural log. Swap for std::log2 to report in bits.
inline double sre_log(double x) { return std::log(x); }

/// Raw values in [-kSreClampTolerance, 0) are floating-point dips below the
/// true minimum of zero and are reported as 0.
inline constexpr double kSreClampTolerance = 1e-9;

struct SreParams {
    double alpha = 2.0;
};

struct XiDistribution {
    std::uint32_t n_qubits = 0;
    std::vector<double> values;  // canonical Pauli order
};

inline XiDistribution xi_distribution(const Statevector& s, unsigned threads = 1) {
    XiDistribution xi;
    xi.n_qubits = s.n_qubits;
    xi.values = all_pauli_expectations(s, threads);
    const double scale = std::ldexp(1.0, -static_cast<int>(s.n_qubits));
    for (auto& v : xi.values) v = v * v * scale;
    return xi;
}

inline double sre(const XiDistribution& xi, const SreParams& params = {}) {
    if (params.alpha == 1.0) {
        throw std::invalid_argument("alpha = 1 is not supported");
    }
    double sum = 0.0;
    if (params.alpha == 2.0) {
        for (double v : xi.values) sum += v * v;
    } else {
        for (double v : xi.values) sum += std::pow(v, params.alpha);
    }
    return sre_log(sum) / (1.0 - params.alpha) - xi.n_qubits * sre_log(2.0);
}

/// Raw value; may dip slightly below zero for stabilizer states.
inline double sre(const Statevector& s, const SreParams& params = {}, unsigned threads = 1) {
    return sre(xi_distribution(s, threads), params);
}

inline double clamp_sre(double raw) {
    return (raw < 0.0 && raw >= -kSreClampTolerance) ? 0.0 : raw;
}

struct LabelResult {
    LabeledCircuit labeled;
    std::optional<std::string> error;
};

/// Labels each circuit with its exact S_2 (clamped) and the wall time of
/// simulation plus entropy evaluation. Failures are recorded per item and do
/// not stop the batch. Output order matches input order.
inline std::vector<LabelResult> label_dataset(const std::vector<Circuit>& circuits,
                                              const SreParams& params = {}, unsigned threads = 1) {
    std::vector<LabelResult> out(circuits.size());
    parallel_for(circuits.size(), threads, [&](std::size_t i) {
        out[i].labeled.circuit = circuits[i];
        try {
            const auto start = std::chrono::steady_clock::now();
            const auto state = simulate(circuits[i]);
            const double value = sre(state, params);
            const auto stop = std::chrono::steady_clock::now();
            out[i].labeled.sre = clamp_sre(value);
            out[i].labeled.label_ms =
                std::chrono::duration<double, std::milli>(stop - start).count();
        } catch (const std::exception& e) {
            out[i].error = e.what();
        }
    });
    return out;
}

}  // namespace magic_meter
