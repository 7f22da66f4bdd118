#pragma once

// Interpolation and extrapolation experiments over labeled feature tables.
//
// Split rules assign every row to exactly one of train / test /
// extrapolation / excluded:
//
//   random_80_20   all rows in-domain; seeded 80/20 train/test split
//   gate_bins      in-domain: gate count 0..79; extrapolation: 80..99
//   trotter_steps  in-domain: steps 1..4;       extrapolation: 5
//   qubits         in-domain: n 2..5;           extrapolation: 6
//   control        extrapolation is a seeded random 20% of the rows, i.e.
//                  drawn from the training distribution
//
// In-domain rows are split 80/20 into train and test. Model selection (grid
// search with k-fold CV) sees the train rows only; the test and extrapolation
// rows are touched once, by the refit model.
//
// Spec files (key-value, see KvConfig):
//
//   name = "rqc_depth"
//   kind = "extrapolation"          # or "interpolation"
//   model = "svr"                   # or "rfr"
//   datasets = ["rqc_n6.csv"]       # feature CSVs, concatenated
//   encoding = "circuit_level"      # optional; checked against the data
//   split = "gate_bins"
//   seed = 7
//   folds = 5                       # optional
//   test_fraction = 0.2             # optional
//   grid = "grid.toml"              # optional; an inline [rfr]/[svr] section
//                                   # or the built-in grid otherwise
//   min_rows = 50                   # optional
//   [bounds]                        # optional overrides of the rule ranges
//   train_min = 0
//   train_max = 79
//   eval_min = 80
//   eval_max = 99
//
// Relative paths are resolved against the spec file's directory.

#include <algorithm>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "magic_meter/core/kv_config.hpp"
#include "magic_meter/core/random.hpp"
#include "magic_meter/features.hpp"
#include "magic_meter/harness/report.hpp"
#include "magic_meter/ml/grid_search.hpp"
#include "magic_meter/ml/metrics.hpp"

namespace magic_meter {

enum class SplitRule { Random, GateBins, TrotterSteps, Qubits, Control };

inline std::string split_rule_name(SplitRule r) {
    switch (r) {
        case SplitRule::Random: return "random_80_20";
        case SplitRule::GateBins: return "gate_bins";
        case SplitRule::TrotterSteps: return "trotter_steps";
        case SplitRule::Qubits: return "qubits";
        case SplitRule::Control: return "control";
    }
    return "?";
}

inline SplitRule parse_split_rule(std::string_view s) {
    if (s == "random_80_20" || s == "random") return SplitRule::Random;
    if (s == "gate_bins") return SplitRule::GateBins;
    if (s == "trotter_steps") return SplitRule::TrotterSteps;
    if (s == "qubits") return SplitRule::Qubits;
    if (s == "control") return SplitRule::Control;
    throw std::invalid_argument("unknown split rule '" + std::string(s) + "'");
}

/// Inclusive ranges of the rule's key (gate count, Trotter steps or n).
struct SplitBounds {
    std::uint32_t train_min = 0;
    std::uint32_t train_max = 0;
    std::uint32_t eval_min = 0;
    std::uint32_t eval_max = 0;

    bool operator==(const SplitBounds&) const = default;
};

inline SplitBounds default_bounds(SplitRule r) {
    switch (r) {
        case SplitRule::GateBins: return {0, 79, 80, 99};
        case SplitRule::TrotterSteps: return {1, 4, 5, 5};
        case SplitRule::Qubits: return {2, 5, 6, 6};
        default: return {};
    }
}

struct Partition {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::vector<std::size_t> extrapolation;
    std::vector<std::size_t> excluded;
};

inline std::uint32_t split_key(const Dataset& d, SplitRule rule, std::size_t i) {
    switch (rule) {
        case SplitRule::GateBins: return d.gate_counts[i];
        case SplitRule::TrotterSteps: return d.trotter_steps[i];
        case SplitRule::Qubits: return d.n_qubits[i];
        default: return 0;
    }
}

/// Seeded shuffle; the first round(fraction * size) indices become `held`.
inline void random_holdout(std::vector<std::size_t> rows, double fraction, std::uint64_t seed,
                           std::vector<std::size_t>& kept, std::vector<std::size_t>& held) {
    Rng rng(seed);
    for (std::size_t i = rows.size(); i > 1; --i) std::swap(rows[i - 1], rows[uniform_index(rng, i)]);
    const auto n_held = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(rows.size())));
    held.assign(rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_held));
    kept.assign(rows.begin() + static_cast<std::ptrdiff_t>(n_held), rows.end());
    std::sort(held.begin(), held.end());
    std::sort(kept.begin(), kept.end());
}

inline Partition partition_rows(const Dataset& d, SplitRule rule, const SplitBounds& b, std::uint64_t seed,
                                 double test_fraction = 0.2, std::span<const std::size_t> rows = {}) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("test fraction must be in (0, 1)");
    }
    std::vector<std::size_t> selected(rows.begin(), rows.end());
    if (rows.empty()) {
        selected.resize(d.size());
        std::iota(selected.begin(), selected.end(), std::size_t{0});
    }
    Partition p;
    std::vector<std::size_t> domain;
    if (rule == SplitRule::Random) {
        domain = selected;
    } else if (rule == SplitRule::Control) {
        random_holdout(selected, 0.2, mix64(seed ^ 0xC047201ULL), domain, p.extrapolation);
    } else {
        if (rule == SplitRule::TrotterSteps &&
            std::all_of(selected.begin(), selected.end(), [&](std::size_t i) { return d.trotter_steps[i] == 0; })) {
            throw std::invalid_argument("trotter_steps split needs TIM rows");
        }
        for (auto i : selected) {
            const auto k = split_key(d, rule, i);
            if (k >= b.train_min && k <= b.train_max) domain.push_back(i);
            else if (k >= b.eval_min && k <= b.eval_max) p.extrapolation.push_back(i);
            else p.excluded.push_back(i);
        }
    }
    random_holdout(domain, test_fraction, seed, p.train, p.test);
    return p;
}

struct ExperimentSpec {
    std::string name = "experiment";
    std::string kind = "interpolation";
    std::string model = "rfr";
    std::vector<std::string> datasets;
    std::optional<std::string> encoding;
    SplitRule split = SplitRule::Random;
    std::optional<SplitBounds> bounds;
    std::uint64_t seed = 0;
    std::size_t folds = 5;
    double test_fraction = 0.2;
    std::vector<ModelParams> grid;  // empty: default_grid(model)
    std::size_t min_rows = 50;
    unsigned threads = 1;

    SplitBounds resolved_bounds() const { return bounds ? *bounds : default_bounds(split); }
};

namespace detail {

inline std::uint64_t parse_u64(const std::string& s, const std::string& key) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(s, &used);
        if (used != s.size() || s.front() == '-') throw std::invalid_argument(key);
        return v;
    } catch (const std::exception&) {
        throw std::invalid_argument("spec key '" + key + "' needs a non-negative integer, got '" + s + "'");
    }
}

}  // namespace detail

inline ExperimentSpec parse_experiment_spec(const KvConfig& cfg, const std::filesystem::path& base_dir = {}) {
    static const std::set<std::string> known = {
        "name", "kind", "model", "datasets", "encoding", "split", "seed", "folds", "test_fraction",
        "grid", "min_rows", "bounds.train_min", "bounds.train_max", "bounds.eval_min", "bounds.eval_max"};
    for (const auto& k : cfg.keys()) {
        if (!known.count(k) && k.rfind("rfr.", 0) != 0 && k.rfind("svr.", 0) != 0) throw std::invalid_argument("unknown spec key '" + k + "'");
    }
    auto resolve = [&](const std::string& p) {
        const std::filesystem::path path(p);
        return (path.is_absolute() || base_dir.empty() ? path : base_dir / path).string();
    };
    ExperimentSpec s;
    s.name = cfg.get_or("name", s.name);
    s.kind = cfg.get_or("kind", s.kind);
    if (s.kind != "interpolation" && s.kind != "extrapolation") {
        throw std::invalid_argument("spec kind must be 'interpolation' or 'extrapolation'");
    }
    s.model = cfg.get_or("model", s.model);
    if (s.model != "rfr" && s.model != "svr") throw std::invalid_argument("spec model must be 'rfr' or 'svr'");
    const auto sets = cfg.get_list("datasets");
    if (!sets || sets->empty()) throw std::invalid_argument("spec needs at least one dataset");
    for (const auto& d : *sets) s.datasets.push_back(resolve(d));
    if (auto e = cfg.get("encoding")) {
        parse_encoding(*e);
        s.encoding = *e;
    }
    s.split = parse_split_rule(cfg.get_or("split", s.kind == "interpolation" ? "random_80_20" : ""));
    if (s.kind == "interpolation" && s.split != SplitRule::Random) {
        throw std::invalid_argument("interpolation experiments use the random_80_20 split");
    }
    if (s.kind == "extrapolation" && s.split == SplitRule::Random) {
        throw std::invalid_argument("extrapolation experiments need a domain split rule");
    }
    const auto seed = cfg.get("seed");
    if (!seed) throw std::invalid_argument("spec needs an explicit seed");
    s.seed = detail::parse_u64(*seed, "seed");
    s.folds = detail::parse_u64(cfg.get_or("folds", "5"), "folds");
    s.test_fraction = parse_double(cfg.get_or("test_fraction", "0.2"));
    s.min_rows = detail::parse_u64(cfg.get_or("min_rows", "50"), "min_rows");
    if (cfg.get("bounds.train_min") || cfg.get("bounds.train_max") || cfg.get("bounds.eval_min") ||
        cfg.get("bounds.eval_max")) {
        auto b = default_bounds(s.split);
        auto read = [&](const char* key, std::uint32_t& out) {
            if (auto v = cfg.get(std::string("bounds.") + key)) {
                out = static_cast<std::uint32_t>(detail::parse_u64(*v, key));
            }
        };
        read("train_min", b.train_min);
        read("train_max", b.train_max);
        read("eval_min", b.eval_min);
        read("eval_max", b.eval_max);
        if (b.train_min > b.train_max || b.eval_min > b.eval_max ||
            (b.eval_min <= b.train_max && b.train_min <= b.eval_max)) {
            throw std::invalid_argument("split bounds must be non-empty and disjoint");
        }
        s.bounds = b;
    }
    if (auto g = cfg.get("grid")) {
        s.grid = grid_from_config(KvConfig::load(resolve(*g)), s.model);
    } else {
        s.grid = grid_from_config(cfg, s.model);  // inline [rfr]/[svr] section, else the defaults
    }
    return s;
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
    return parse_experiment_spec(KvConfig::load(path), std::filesystem::path(path).parent_path());
}

inline Dataset load_datasets(const std::vector<std::string>& paths) {
    Dataset all;
    for (const auto& p : paths) all.append(load_csv(p));
    return all;
}

struct ExperimentHooks {
    /// Receives the row indices handed to model selection.
    std::function<void(std::span<const std::size_t>)> on_model_selection;
};

namespace detail {

inline SplitMetrics metrics_of(std::span<const double> pred, std::span<const double> labels) {
    return {labels.size(), mse(pred, labels), variance(labels)};
}

inline double elapsed_ms(std::chrono::steady_clock::time_point since) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since).count();
}

struct Fitted {
    ModelRun run;
    Model model;
};

inline Fitted tune_and_fit(const Dataset& data, std::span<const std::size_t> train, const ExperimentSpec& spec,
                           std::uint64_t seed, const ExperimentHooks& hooks) {
    if (hooks.on_model_selection) hooks.on_model_selection(train);
    const auto t0 = std::chrono::steady_clock::now();
    const auto subset = data.subset(train);
    const auto grid = spec.grid.empty() ? default_grid(spec.model) : spec.grid;
    for (const auto& p : grid) {
        if (model_kind(p) != spec.model) throw std::invalid_argument("grid does not match the spec's model");
    }
    auto result = grid_search_cv(subset, grid, {spec.folds, seed, spec.threads});
    Fitted f;
    f.run.seed = seed;
    f.run.selected_params = describe(grid[result.report.selected]);
    for (std::size_t c = 0; c < result.report.rows.size(); ++c) {
        const auto& row = result.report.rows[c];
        f.run.cv.push_back({describe(row.params), row.fold_mse, row.mean_mse, row.unconverged_folds,
                            c == result.report.selected});
    }
    f.run.fit_ms = elapsed_ms(t0);
    f.model = std::move(result.model);
    return f;
}

inline std::string group_label(SplitRule rule, std::uint32_t key) {
    switch (rule) {
        case SplitRule::GateBins: {
            const auto lo = key / 10 * 10;
            return "gates=" + std::to_string(lo) + "-" + std::to_string(lo + 9);
        }
        case SplitRule::TrotterSteps: return "steps=" + std::to_string(key);
        case SplitRule::Qubits: return "n=" + std::to_string(key);
        default: return "all";
    }
}

}  // namespace detail

inline Report run_interpolation(const ExperimentSpec& spec, const Dataset& data, const ExperimentHooks& hooks = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    Report r;
    r.name = spec.name;
    r.kind = "interpolation";
    r.model = spec.model;
    r.encoding = encoding_name(data.encoding);
    r.split = split_rule_name(SplitRule::Random);
    r.seed = spec.seed;
    r.folds = spec.folds;
    r.datasets = spec.datasets;

    std::map<std::uint32_t, std::vector<std::size_t>> by_n;
    for (std::size_t i = 0; i < data.size(); ++i) by_n[data.n_qubits[i]].push_back(i);
    if (by_n.empty()) throw std::invalid_argument("dataset is empty");
    if (by_n.size() > 1) r.notes.push_back("one model tuned per qubit count");

    std::vector<double> train_pred, train_y, test_pred, test_y;
    for (const auto& [n, rows] : by_n) {
        if (rows.size() < spec.min_rows) {
            throw std::invalid_argument("insufficient rows for n=" + std::to_string(n) + ": " +
                                        std::to_string(rows.size()) + " < " + std::to_string(spec.min_rows));
        }
        const auto part = partition_rows(data, SplitRule::Random, {}, derive_seed(spec.seed, 2 * n), spec.test_fraction, rows);
        auto fitted = detail::tune_and_fit(data, part.train, spec, derive_seed(spec.seed, 2 * n + 1), hooks);
        const auto tr = data.subset(part.train), te = data.subset(part.test);
        const auto ptr = fitted.model.predict(tr.features, spec.threads);
        const auto pte = fitted.model.predict(te.features, spec.threads);
        fitted.run.group = "n=" + std::to_string(n);
        fitted.run.train = detail::metrics_of(ptr, tr.labels);
        fitted.run.test = detail::metrics_of(pte, te.labels);
        r.groups.push_back({"train", fitted.run.group, fitted.run.train});
        r.groups.push_back({"test", fitted.run.group, fitted.run.test});
        train_pred.insert(train_pred.end(), ptr.begin(), ptr.end());
        train_y.insert(train_y.end(), tr.labels.begin(), tr.labels.end());
        test_pred.insert(test_pred.end(), pte.begin(), pte.end());
        test_y.insert(test_y.end(), te.labels.begin(), te.labels.end());
        r.runs.push_back(std::move(fitted.run));
    }
    r.train = detail::metrics_of(train_pred, train_y);
    r.test = detail::metrics_of(test_pred, test_y);
    r.wall_ms = detail::elapsed_ms(t0);
    return r;
}

inline Report run_extrapolation(const ExperimentSpec& spec, const Dataset& data, const ExperimentHooks& hooks = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    if (spec.split == SplitRule::Random) throw std::invalid_argument("extrapolation needs a domain split rule");
    if (spec.split == SplitRule::Qubits && data.encoding != Encoding::CircuitLevel) {
        const auto shadow_width = shadow_names(kPaddedQubits).size();
        const auto width = data.encoding == Encoding::Shadow ? shadow_width : kCircuitLevelWidth + shadow_width;
        if (data.feature_names.size() != width) {
            throw std::invalid_argument("qubit extrapolation with shadow features needs the padded layout");
        }
    }
    Report r;
    r.name = spec.name;
    r.kind = "extrapolation";
    r.model = spec.model;
    r.encoding = encoding_name(data.encoding);
    r.split = split_rule_name(spec.split);
    r.seed = spec.seed;
    r.folds = spec.folds;
    r.datasets = spec.datasets;

    const auto bounds = spec.resolved_bounds();
    const auto part = partition_rows(data, spec.split, bounds, derive_seed(spec.seed, 0), spec.test_fraction);
    if (part.extrapolation.empty()) throw std::invalid_argument("extrapolation set is empty");
    if (part.train.size() + part.test.size() < spec.min_rows) {
        throw std::invalid_argument("insufficient in-domain rows: " +
                                    std::to_string(part.train.size() + part.test.size()));
    }
    r.excluded_rows = part.excluded.size();
    if (!part.excluded.empty()) {
        r.notes.push_back(std::to_string(part.excluded.size()) + " rows outside both ranges (" +
                          std::to_string(bounds.train_min) + "-" + std::to_string(bounds.train_max) + ", " +
                          std::to_string(bounds.eval_min) + "-" + std::to_string(bounds.eval_max) +
                          ") were excluded");
    }
    auto fitted = detail::tune_and_fit(data, part.train, spec, derive_seed(spec.seed, 1), hooks);
    const auto tr = data.subset(part.train), te = data.subset(part.test), ex = data.subset(part.extrapolation);
    const auto ptr = fitted.model.predict(tr.features, spec.threads);
    const auto pte = fitted.model.predict(te.features, spec.threads);
    const auto pex = fitted.model.predict(ex.features, spec.threads);
    fitted.run.group = "all";
    fitted.run.train = detail::metrics_of(ptr, tr.labels);
    fitted.run.test = detail::metrics_of(pte, te.labels);
    fitted.run.extrapolation = detail::metrics_of(pex, ex.labels);
    r.train = fitted.run.train;
    r.test = fitted.run.test;
    r.extrapolation = fitted.run.extrapolation;

    if (spec.split != SplitRule::Control) {
        auto add_groups = [&](const char* split, const std::vector<std::size_t>& rows, const std::vector<double>& pred) {
            std::map<std::uint32_t, std::pair<std::vector<double>, std::vector<double>>> bucket;
            for (std::size_t k = 0; k < rows.size(); ++k) {
                auto key = split_key(data, spec.split, rows[k]);
                if (spec.split == SplitRule::GateBins) key = key / 10 * 10;
                bucket[key].first.push_back(pred[k]);
                bucket[key].second.push_back(data.labels[rows[k]]);
            }
            for (const auto& [key, pv] : bucket) {
                r.groups.push_back({split, detail::group_label(spec.split, key), detail::metrics_of(pv.first, pv.second)});
            }
        };
        add_groups("test", part.test, pte);
        add_groups("extrapolation", part.extrapolation, pex);
    }
    r.runs.push_back(std::move(fitted.run));
    r.wall_ms = detail::elapsed_ms(t0);
    return r;
}

inline Report run_experiment(const ExperimentSpec& spec, const Dataset& data, const ExperimentHooks& hooks = {}) {
    if (spec.encoding && parse_encoding(*spec.encoding) != data.encoding) {
        throw std::invalid_argument("spec asks for encoding " + *spec.encoding + " but the data is " +
                                    encoding_name(data.encoding));
    }
    return spec.kind == "interpolation" ? run_interpolation(spec, data, hooks)
                                        : run_extrapolation(spec, data, hooks);
}

}  // namespace magic_meter
