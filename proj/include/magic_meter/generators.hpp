#pragma once

// Seeded construction of the two circuit families:
//
//  * RQC: G ~ U{g_min..g_max} gates, each uniform over {CNOT, RX, RY, RZ}.
//    Rotations pick a uniform qubit and a uniform angle in [0, 2pi); CNOT picks
//    a uniform ordered (control, target) pair of distinct qubits.
//  * TIM: first-order Trotterization of the transverse-field Ising chain,
//    one step = CNOT(i,i+1) RZ(2 theta)(i+1) CNOT(i,i+1) for each bond, then
//    RX(2 phi) on every qubit.

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "magic_meter/circuit.hpp"
#include "magic_meter/core/parallel.hpp"
#include "magic_meter/core/random.hpp"

namespace magic_meter {

struct RqcConfig {
    std::uint32_t n_qubits = 2;
    std::uint32_t g_min = 0;
    std::uint32_t g_max = 100;
    std::uint64_t master_seed = 0;
    std::size_t count = 0;
};

struct TimConfig {
    std::uint32_t n_qubits = 2;
    std::uint32_t t_min = 1;
    std::uint32_t t_max = 5;
    std::pair<double, double> theta_range{0.0, kTwoPi};
    std::pair<double, double> phi_range{0.0, kTwoPi};
    std::uint64_t master_seed = 0;
    std::size_t count = 0;
};

inline void check(const RqcConfig& cfg) {
    if (cfg.n_qubits < 2) throw std::invalid_argument("RQC needs at least 2 qubits");
    if (cfg.g_min > cfg.g_max) throw std::invalid_argument("RQC gate range is empty");
}

inline void check(const TimConfig& cfg) {
    if (cfg.n_qubits < 2) throw std::invalid_argument("TIM chain needs at least 2 qubits");
    if (cfg.t_min < 1 || cfg.t_min > cfg.t_max) {
        throw std::invalid_argument("TIM Trotter step range must satisfy 1 <= min <= max");
    }
    if (cfg.theta_range.first > cfg.theta_range.second ||
        cfg.phi_range.first > cfg.phi_range.second) {
        throw std::invalid_argument("TIM angle range is empty");
    }
}

inline Circuit gen_rqc(const RqcConfig& cfg, std::uint64_t seed) {
    check(cfg);
    Rng rng(seed);
    const auto n = cfg.n_qubits;
    Circuit c;
    c.n_qubits = n;
    c.meta.family = Family::RQC;
    c.meta.seed = seed;
    c.meta.gate_count =
        cfg.g_min + static_cast<std::uint32_t>(uniform_index(rng, cfg.g_max - cfg.g_min + 1));
    c.gates.reserve(c.meta.gate_count);
    for (std::uint32_t i = 0; i < c.meta.gate_count; ++i) {
        const auto kind = static_cast<GateKind>(uniform_index(rng, 4));
        if (kind == GateKind::CNOT) {
            const auto control = static_cast<std::uint32_t>(uniform_index(rng, n));
            auto target = static_cast<std::uint32_t>(uniform_index(rng, n - 1));
            if (target >= control) ++target;
            c.gates.push_back(Gate::cnot(control, target));
        } else {
            const auto q = static_cast<std::uint32_t>(uniform_index(rng, n));
            c.gates.push_back(Gate::rotation(kind, q, kTwoPi * uniform01(rng)));
        }
    }
    return c;
}

inline Circuit gen_rqc(std::uint32_t n_qubits, std::uint64_t seed) {
    RqcConfig cfg;
    cfg.n_qubits = n_qubits;
    return gen_rqc(cfg, seed);
}

/// Total gate count is steps * (4n - 3).
inline Circuit gen_tim(std::uint32_t n_qubits, std::uint32_t steps, double theta, double phi) {
    if (n_qubits < 2) throw std::invalid_argument("TIM chain needs at least 2 qubits");
    if (steps < 1) throw std::invalid_argument("TIM needs at least one Trotter step");
    Circuit c;
    c.n_qubits = n_qubits;
    c.meta.family = Family::TIM;
    c.meta.trotter_steps = steps;
    c.meta.theta = theta;
    c.meta.phi = phi;
    c.gates.reserve(static_cast<std::size_t>(steps) * (4 * n_qubits - 3));
    for (std::uint32_t s = 0; s < steps; ++s) {
        for (std::uint32_t i = 0; i + 1 < n_qubits; ++i) {
            c.gates.push_back(Gate::cnot(i, i + 1));
            c.gates.push_back(Gate::rz(i + 1, 2.0 * theta));
            c.gates.push_back(Gate::cnot(i, i + 1));
        }
        for (std::uint32_t i = 0; i < n_qubits; ++i) {
            c.gates.push_back(Gate::rx(i, 2.0 * phi));
        }
    }
    return c;
}

/// Draws (T, theta, phi) from `seed` and builds the circuit.
inline Circuit gen_tim(const TimConfig& cfg, std::uint64_t seed) {
    check(cfg);
    Rng rng(seed);
    const auto steps =
        cfg.t_min + static_cast<std::uint32_t>(uniform_index(rng, cfg.t_max - cfg.t_min + 1));
    const double theta = uniform_real(rng, cfg.theta_range.first, cfg.theta_range.second);
    const double phi = uniform_real(rng, cfg.phi_range.first, cfg.phi_range.second);
    Circuit c = gen_tim(cfg.n_qubits, steps, theta, phi);
    c.meta.seed = seed;
    return c;
}

/// Rebuilds a TIM circuit from its metadata alone.
inline Circuit rebuild_tim(std::uint32_t n_qubits, const CircuitMeta& meta) {
    Circuit c = gen_tim(n_qubits, meta.trotter_steps, meta.theta, meta.phi);
    c.meta.seed = meta.seed;
    return c;
}

/// `count` circuits; circuit i is built from derive_seed(master_seed, i).
template <typename Config>
std::vector<Circuit> gen_dataset(const Config& cfg, unsigned threads = 1) {
    check(cfg);
    std::vector<Circuit> out(cfg.count);
    parallel_for(cfg.count, threads, [&](std::size_t i) {
        const auto seed = derive_seed(cfg.master_seed, i);
        if constexpr (std::is_same_v<Config, RqcConfig>) {
            out[i] = gen_rqc(cfg, seed);
        } else {
            out[i] = gen_tim(cfg, seed);
        }
    });
    return out;
}

}  // namespace magic_meter
