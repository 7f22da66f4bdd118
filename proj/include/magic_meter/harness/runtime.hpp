#pragma once

// Runtime analysis: exact SRE cost against learned-model prediction cost.
//
// Per qubit count n:
//   - `samples` RQC circuits with gate counts in [g_min, g_max];
//   - exact_sre_ms: mean time of the Pauli-spectrum entropy on the final
//     state (the 4^n x 2^n part); simulate_ms: mean time of the statevector
//     simulation that precedes it, reported separately;
//   - each model is fit on `train_rows` fresh labeled RQC circuits at that n
//     (train_ms covers the whole fit) and predict_ms is the mean time to go
//     from one circuit to its prediction (circuit-level features plus model).
// Every timed loop over the samples runs `repeats` times after `warmups`
// untimed calls; each call keeps its fastest time and the reported value is
// the mean of those over the samples, so interference from other load on the
// machine is filtered per call. Single-threaded.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "magic_meter/features.hpp"
#include "magic_meter/generators.hpp"
#include "magic_meter/harness/report.hpp"
#include "magic_meter/ml/model.hpp"
#include "magic_meter/sre.hpp"

namespace magic_meter {

struct RuntimeConfig {
    std::uint32_t n_min = 2;
    std::uint32_t n_max = 6;
    std::size_t samples = 50;
    std::uint32_t g_min = 40;
    std::uint32_t g_max = 59;
    std::size_t warmups = 3;
    std::size_t repeats = 10;
    std::size_t train_rows = 400;
    std::vector<ModelParams> models = default_runtime_models();
    std::uint64_t seed = 0;

    /// Library defaults of both model kinds.
    static std::vector<ModelParams> default_runtime_models() { return {ForestParams{}, SvrParams{}}; }
};

namespace detail {

inline constexpr double kMinWindowMs = 50.0;

/// Mean over i in [0, count) of the wall time in ms of fn(i), where each
/// call's time is the fastest of at least `repeats` timed passes run after
/// `warmups` untimed calls. Passes interleave the inputs and continue until
/// they span kMinWindowMs, so a burst of outside load lands on different
/// calls in different passes and cannot cover a whole fast measurement.
template <typename Fn>
double mean_ms(std::size_t count, std::size_t warmups, std::size_t repeats, Fn&& fn) {
    if (count == 0) return 0.0;
    for (std::size_t w = 0; w < warmups; ++w) fn(w % count);
    std::vector<double> best(count, std::numeric_limits<double>::infinity());
    const auto start = std::chrono::steady_clock::now();
    for (std::size_t r = 0;
         r < std::max<std::size_t>(1, repeats) ||
         std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count() < kMinWindowMs;
         ++r) {
        for (std::size_t i = 0; i < count; ++i) {
            const auto t0 = std::chrono::steady_clock::now();
            fn(i);
            best[i] = std::min(best[i], std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
        }
    }
    double sum = 0.0;
    for (double t : best) sum += t;
    return sum / static_cast<double>(count);
}

// Keeps timed results observable so the work is not optimized away.
inline volatile double runtime_sink = 0.0;

}  // namespace detail

inline Report run_runtime_analysis(const RuntimeConfig& cfg) {
    if (cfg.n_min < 2 || cfg.n_min > cfg.n_max) throw std::invalid_argument("runtime qubit range is empty");
    if (cfg.samples == 0) throw std::invalid_argument("runtime analysis needs at least one sample");
    const auto t_start = std::chrono::steady_clock::now();
    Report r;
    r.name = "runtime";
    r.kind = "runtime";
    r.encoding = encoding_name(Encoding::CircuitLevel);
    r.seed = cfg.seed;
    r.notes.push_back("RQC gate range [" + std::to_string(cfg.g_min) + ", " + std::to_string(cfg.g_max) +
                      "], " + std::to_string(cfg.warmups) + " warm-up calls, per-circuit best of " +
                      std::to_string(cfg.repeats) + "+ timed passes");
    for (std::uint32_t n = cfg.n_min; n <= cfg.n_max; ++n) {
        RqcConfig sample_cfg;
        sample_cfg.n_qubits = n;
        sample_cfg.g_min = cfg.g_min;
        sample_cfg.g_max = cfg.g_max;
        sample_cfg.count = cfg.samples;
        sample_cfg.master_seed = derive_seed(cfg.seed, 2 * n);
        const auto circuits = gen_dataset(sample_cfg);
        RuntimeRow base;
        base.n_qubits = n;
        base.samples = cfg.samples;
        base.simulate_ms = detail::mean_ms(circuits.size(), cfg.warmups, cfg.repeats, [&](std::size_t i) {
            detail::runtime_sink = simulate(circuits[i]).amplitudes[0].real();
        });
        std::vector<Statevector> states;
        for (const auto& c : circuits) states.push_back(simulate(c));
        base.exact_sre_ms = detail::mean_ms(states.size(), cfg.warmups, cfg.repeats,
                                            [&](std::size_t i) { detail::runtime_sink = sre(states[i]); });
        if (cfg.models.empty()) {
            r.runtime.push_back(base);
            continue;
        }

        RqcConfig train_cfg;
        train_cfg.n_qubits = n;
        train_cfg.count = cfg.train_rows;
        train_cfg.master_seed = derive_seed(cfg.seed, 2 * n + 1);
        std::vector<LabeledCircuit> labeled;
        for (auto& l : label_dataset(gen_dataset(train_cfg))) labeled.push_back(std::move(l.labeled));
        const auto train = assemble(labeled, {});
        for (std::size_t m = 0; m < cfg.models.size(); ++m) {
            RuntimeRow row = base;
            row.model = model_kind(cfg.models[m]);
            row.train_rows = train.size();
            const auto t0 = std::chrono::steady_clock::now();
            const auto model = fit_model(train, cfg.models[m], derive_seed(cfg.seed, 1000 + n));
            row.train_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            row.predict_ms = detail::mean_ms(circuits.size(), cfg.warmups, cfg.repeats, [&](std::size_t i) {
                detail::runtime_sink = model.predict(circuit_level_features(circuits[i]));
            });
            r.runtime.push_back(row);
        }
    }
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t_start).count();
    return r;
}

}  // namespace magic_meter
