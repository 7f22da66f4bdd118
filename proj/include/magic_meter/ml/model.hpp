#pragma once

// Model-kind-agnostic wrapper: hyperparameters, fitting, prediction and
// self-describing JSON persistence.
//
// File layout:
//   {"kind": "rfr" | "svr", "layout_version": 1, "feature_names": [...],
//    "params": {...}, "seed": ..., "trees": [...]}                       (rfr)
//   {..., "kernel": {...}, "standardizer": {...}, "support_vectors": [[...]],
//    "coef": [...], "bias": ..., "converged": ..., "violation": ...}     (svr)

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "magic_meter/core/kv_config.hpp"
#include "magic_meter/core/text.hpp"
#include "magic_meter/features.hpp"
#include "magic_meter/ml/forest.hpp"
#include "magic_meter/ml/svr.hpp"

namespace magic_meter {

inline constexpr int kModelFormatVersion = 1;

using ModelParams = std::variant<ForestParams, SvrParams>;

inline std::string model_kind(const ModelParams& p) {
    return std::holds_alternative<ForestParams>(p) ? "rfr" : "svr";
}

/// Compact "key=value,..." form used in reports.
inline std::string describe(const ModelParams& p) {
    if (const auto* f = std::get_if<ForestParams>(&p)) {
        std::string s = "n_estimators=" + std::to_string(f->n_estimators) + ",max_depth=" +
                        (f->tree.max_depth ? std::to_string(f->tree.max_depth) : "none") +
                        ",max_features=" + format_double(f->tree.max_features) +
                        ",min_samples_leaf=" + std::to_string(f->tree.min_samples_leaf) +
                        ",criterion=" + criterion_name(f->tree.criterion);
        if (!f->bootstrap) s += ",bootstrap=false";
        return s;
    }
    const auto& v = std::get<SvrParams>(p);
    std::string s = "C=" + format_double(v.C) + ",epsilon=" + format_double(v.epsilon) +
                    ",kernel=" + kernel_name(v.kernel.kind);
    if (v.kernel.kind != KernelKind::Linear) {
        s += ",gamma=" + (v.kernel.gamma > 0 ? format_double(v.kernel.gamma) : std::string("scale"));
    }
    if (v.kernel.kind == KernelKind::Poly) {
        s += ",degree=" + std::to_string(v.kernel.degree) + ",coef0=" + format_double(v.kernel.coef0);
    }
    return s;
}

/// Size key for tie-breaking: fewer trees, or smaller C.
inline double model_size(const ModelParams& p) {
    if (const auto* f = std::get_if<ForestParams>(&p)) return f->n_estimators;
    return std::get<SvrParams>(p).C;
}

inline nlohmann::json params_to_json(const ModelParams& p) {
    nlohmann::json j;
    if (const auto* f = std::get_if<ForestParams>(&p)) {
        j["n_estimators"] = f->n_estimators;
        j["max_depth"] = f->tree.max_depth;
        j["min_samples_leaf"] = f->tree.min_samples_leaf;
        j["max_features"] = f->tree.max_features;
        j["criterion"] = criterion_name(f->tree.criterion);
        j["bootstrap"] = f->bootstrap;
        return j;
    }
    const auto& v = std::get<SvrParams>(p);
    j["C"] = v.C;
    j["epsilon"] = v.epsilon;
    j["kernel"] = kernel_name(v.kernel.kind);
    j["gamma"] = v.kernel.gamma;
    j["degree"] = v.kernel.degree;
    j["coef0"] = v.kernel.coef0;
    j["tol"] = v.tol;
    j["max_iterations"] = v.max_iterations;
    j["second_order"] = v.second_order;
    return j;
}

inline ModelParams params_from_json(const std::string& kind, const nlohmann::json& j) {
    if (kind == "rfr") {
        ForestParams f;
        f.n_estimators = j.at("n_estimators").get<std::uint32_t>();
        f.tree.max_depth = j.at("max_depth").get<std::uint32_t>();
        f.tree.min_samples_leaf = j.at("min_samples_leaf").get<std::uint32_t>();
        f.tree.max_features = j.at("max_features").get<double>();
        f.tree.criterion = parse_criterion(j.at("criterion").get<std::string>());
        f.bootstrap = j.at("bootstrap").get<bool>();
        return f;
    }
    if (kind == "svr") {
        SvrParams v;
        v.C = j.at("C").get<double>();
        v.epsilon = j.at("epsilon").get<double>();
        v.kernel.kind = parse_kernel(j.at("kernel").get<std::string>());
        v.kernel.gamma = j.at("gamma").get<double>();
        v.kernel.degree = j.at("degree").get<int>();
        v.kernel.coef0 = j.at("coef0").get<double>();
        v.tol = j.at("tol").get<double>();
        v.max_iterations = j.at("max_iterations").get<std::size_t>();
        v.second_order = j.at("second_order").get<bool>();
        return v;
    }
    throw std::invalid_argument("unknown model kind '" + kind + "'");
}

struct Model {
    std::vector<std::string> feature_names;
    std::variant<RandomForest, SvrModel> fitted;

    std::string kind() const { return std::holds_alternative<RandomForest>(fitted) ? "rfr" : "svr"; }

    ModelParams params() const {
        if (const auto* f = std::get_if<RandomForest>(&fitted)) return f->params;
        return std::get<SvrModel>(fitted).params;
    }

    std::size_t n_features() const {
        if (const auto* f = std::get_if<RandomForest>(&fitted)) return f->n_features;
        return std::get<SvrModel>(fitted).n_features();
    }

    double predict(std::span<const double> x) const {
        return std::visit([&](const auto& m) { return m.predict(x); }, fitted);
    }

    std::vector<double> predict(const Matrix& x, unsigned threads = 1) const {
        return std::visit([&](const auto& m) { return m.predict(x, threads); }, fitted);
    }

    bool operator==(const Model&) const = default;
};

inline Model fit_model(const Matrix& x, std::span<const double> y, const ModelParams& params,
                       std::uint64_t seed, unsigned threads = 1) {
    Model m;
    if (const auto* f = std::get_if<ForestParams>(&params)) {
        m.fitted = fit_rfr(x, y, *f, seed, threads);
    } else {
        m.fitted = fit_svr(x, y, std::get<SvrParams>(params));
    }
    return m;
}

inline Model fit_model(const Dataset& d, const ModelParams& params, std::uint64_t seed,
                       unsigned threads = 1) {
    Model m = fit_model(d.features, d.labels, params, seed, threads);
    m.feature_names = d.feature_names;
    return m;
}

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
    auto rows = nlohmann::json::array();
    for (std::size_t i = 0; i < m.rows(); ++i) {
        const auto r = m.row(i);
        rows.push_back(std::vector<double>(r.begin(), r.end()));
    }
    return rows;
}

inline Matrix matrix_from_json(const nlohmann::json& j, std::size_t cols) {
    Matrix m(0, cols);
    for (const auto& r : j) m.append_row(r.get<std::vector<double>>());
    return m;
}

}  // namespace detail

inline nlohmann::json model_to_json(const Model& m) {
    nlohmann::json j;
    j["kind"] = m.kind();
    j["format_version"] = kModelFormatVersion;
    j["layout_version"] = kFeatureLayoutVersion;
    j["feature_names"] = m.feature_names;
    j["n_features"] = m.n_features();
    j["params"] = params_to_json(m.params());
    if (const auto* f = std::get_if<RandomForest>(&m.fitted)) {
        j["seed"] = f->seed;
        auto trees = nlohmann::json::array();
        for (const auto& t : f->trees) {
            nlohmann::json tj;
            std::vector<std::int32_t> feature;
            std::vector<double> threshold, value;
            std::vector<std::uint32_t> left, right, count;
            for (const auto& n : t.nodes) {
                feature.push_back(n.feature);
                threshold.push_back(n.threshold);
                left.push_back(n.left);
                right.push_back(n.right);
                value.push_back(n.value);
                count.push_back(n.count);
            }
            tj["feature"] = feature;
            tj["threshold"] = threshold;
            tj["left"] = left;
            tj["right"] = right;
            tj["value"] = value;
            tj["count"] = count;
            trees.push_back(std::move(tj));
        }
        j["trees"] = std::move(trees);
        return j;
    }
    const auto& s = std::get<SvrModel>(m.fitted);
    j["kernel"] = {{"kind", kernel_name(s.kernel.kind)},
                   {"gamma", s.kernel.gamma},
                   {"degree", s.kernel.degree},
                   {"coef0", s.kernel.coef0}};
    j["standardizer"] = {{"mean", s.standardizer.mean}, {"scale", s.standardizer.scale}};
    j["support_vectors"] = detail::matrix_to_json(s.support_vectors);
    j["coef"] = s.coef;
    j["bias"] = s.bias;
    j["converged"] = s.converged;
    j["violation"] = s.violation;
    j["iterations"] = s.iterations;
    return j;
}

inline Model model_from_json(const nlohmann::json& j) {
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion) {
            throw std::invalid_argument("unsupported model format version");
        }
        if (j.at("layout_version").get<int>() != kFeatureLayoutVersion) {
            throw std::invalid_argument("model was trained on a different feature layout");
        }
        Model m;
        const auto kind = j.at("kind").get<std::string>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        const auto d = j.at("n_features").get<std::size_t>();
        const auto params = params_from_json(kind, j.at("params"));
        if (kind == "rfr") {
            RandomForest f;
            f.params = std::get<ForestParams>(params);
            f.seed = j.at("seed").get<std::uint64_t>();
            f.n_features = d;
            for (const auto& tj : j.at("trees")) {
                const auto feature = tj.at("feature").get<std::vector<std::int32_t>>();
                const auto threshold = tj.at("threshold").get<std::vector<double>>();
                const auto left = tj.at("left").get<std::vector<std::uint32_t>>();
                const auto right = tj.at("right").get<std::vector<std::uint32_t>>();
                const auto value = tj.at("value").get<std::vector<double>>();
                const auto count = tj.at("count").get<std::vector<std::uint32_t>>();
                const std::size_t n = feature.size();
                if (n == 0 || threshold.size() != n || left.size() != n || right.size() != n ||
                    value.size() != n || count.size() != n) {
                    throw std::invalid_argument("malformed tree in model file");
                }
                DecisionTree t;
                for (std::size_t i = 0; i < n; ++i) {
                    if (feature[i] >= 0 && (static_cast<std::size_t>(feature[i]) >= d ||
                                            left[i] >= n || right[i] >= n || left[i] <= i || right[i] <= i)) {
                        throw std::invalid_argument("malformed tree node in model file");
                    }
                    t.nodes.push_back({feature[i], threshold[i], left[i], right[i], value[i], count[i]});
                }
                f.trees.push_back(std::move(t));
            }
            if (f.trees.empty()) throw std::invalid_argument("model file has no trees");
            f.pack();
            m.fitted = std::move(f);
            return m;
        }
        SvrModel s;
        s.params = std::get<SvrParams>(params);
        const auto& k = j.at("kernel");
        s.kernel.kind = parse_kernel(k.at("kind").get<std::string>());
        s.kernel.gamma = k.at("gamma").get<double>();
        s.kernel.degree = k.at("degree").get<int>();
        s.kernel.coef0 = k.at("coef0").get<double>();
        s.standardizer.mean = j.at("standardizer").at("mean").get<std::vector<double>>();
        s.standardizer.scale = j.at("standardizer").at("scale").get<std::vector<double>>();
        if (s.standardizer.mean.size() != d || s.standardizer.scale.size() != d) {
            throw std::invalid_argument("standardizer width does not match n_features");
        }
        s.support_vectors = detail::matrix_from_json(j.at("support_vectors"), d);
        s.coef = j.at("coef").get<std::vector<double>>();
        if (s.coef.size() != s.support_vectors.rows()) {
            throw std::invalid_argument("coefficient count does not match support vectors");
        }
        s.bias = j.at("bias").get<double>();
        s.converged = j.at("converged").get<bool>();
        s.violation = j.at("violation").get<double>();
        s.iterations = j.at("iterations").get<std::size_t>();
        s.compile();
        m.fitted = std::move(s);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed model file: ") + e.what());
    }
}

inline void save_model(const Model& m, const std::string& path) {
    write_file(path, model_to_json(m).dump() + "\n");
}

inline Model load_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("model file " + path + " is not JSON: " + e.what());
    }
    return model_from_json(j);
}

// Hyperparameter grids.
//
// Grid files are key-value configs with an [rfr] and/or [svr] section; every
// key takes a list and the grid is the Cartesian product in the key order
// below (first key varies slowest):
//
//   [rfr]  n_estimators, max_depth (0 or "none": unlimited), max_features,
//          min_samples_leaf, criterion
//   [svr]  C, epsilon, kernel, gamma ("scale" or a number), degree, coef0,
//          max_iterations (single value, applied to every cell)

inline std::vector<ModelParams> default_grid(const std::string& kind) {
    std::vector<ModelParams> grid;
    if (kind == "rfr") {
        for (std::uint32_t trees : {100u, 300u}) {
            for (std::uint32_t depth : {10u, 20u, 0u}) {
                for (double mf : {1.0, 1.0 / 3.0}) {
                    ForestParams f;
                    f.n_estimators = trees;
                    f.tree.max_depth = depth;
                    f.tree.max_features = mf;
                    grid.push_back(f);
                }
            }
        }
        return grid;
    }
    if (kind == "svr") {
        for (double c : {0.1, 1.0, 10.0, 100.0}) {
            for (double eps : {0.01, 0.1}) {
                for (auto k : {KernelKind::Rbf, KernelKind::Linear}) {
                    SvrParams v;
                    v.C = c;
                    v.epsilon = eps;
                    v.kernel.kind = k;
                    grid.push_back(v);
                }
            }
        }
        return grid;
    }
    throw std::invalid_argument("unknown model kind '" + kind + "'");
}

namespace detail {

inline std::vector<double> numbers(const KvConfig& cfg, const std::string& key, std::vector<double> fallback) {
    const auto list = cfg.get_list(key);
    if (!list) return fallback;
    std::vector<double> out;
    for (const auto& s : *list) {
        if (s == "none" || s == "scale") out.push_back(0.0);
        else out.push_back(parse_double(s));
    }
    if (out.empty()) throw std::invalid_argument("grid key '" + key + "' is empty");
    return out;
}

inline std::vector<std::string> words(const KvConfig& cfg, const std::string& key,
                                      std::vector<std::string> fallback) {
    const auto list = cfg.get_list(key);
    if (!list) return fallback;
    if (list->empty()) throw std::invalid_argument("grid key '" + key + "' is empty");
    return *list;
}

inline std::uint32_t whole(double v, const std::string& key) {
    if (v < 0 || v != std::floor(v) || v > 4e9) {
        throw std::invalid_argument("grid key '" + key + "' needs non-negative integers");
    }
    return static_cast<std::uint32_t>(v);
}

}  // namespace detail

inline std::vector<ModelParams> grid_from_config(const KvConfig& cfg, const std::string& kind) {
    std::vector<ModelParams> grid;
    const auto defaults = default_grid(kind);
    const std::string sec = kind + ".";
    bool any = false;
    for (const auto& k : cfg.keys()) any |= k.rfind(sec, 0) == 0;
    if (!any) return defaults;
    if (kind == "rfr") {
        const auto trees = detail::numbers(cfg, sec + "n_estimators", {100, 300});
        const auto depth = detail::numbers(cfg, sec + "max_depth", {10, 20, 0});
        const auto mf = detail::numbers(cfg, sec + "max_features", {1.0, 1.0 / 3.0});
        const auto leaf = detail::numbers(cfg, sec + "min_samples_leaf", {1});
        const auto crit = detail::words(cfg, sec + "criterion", {"squared_error"});
        for (double t : trees)
            for (double d : depth)
                for (double m : mf)
                    for (double l : leaf)
                        for (const auto& c : crit) {
                            ForestParams f;
                            f.n_estimators = detail::whole(t, "n_estimators");
                            f.tree.max_depth = detail::whole(d, "max_depth");
                            f.tree.max_features = m;
                            f.tree.min_samples_leaf = std::max(1u, detail::whole(l, "min_samples_leaf"));
                            f.tree.criterion = parse_criterion(c);
                            if (f.n_estimators < 1) throw std::invalid_argument("n_estimators must be >= 1");
                            grid.push_back(f);
                        }
        return grid;
    }
    const auto cs = detail::numbers(cfg, sec + "C", {0.1, 1, 10, 100});
    const auto eps = detail::numbers(cfg, sec + "epsilon", {0.01, 0.1});
    const auto kernels = detail::words(cfg, sec + "kernel", {"rbf", "linear"});
    const auto gammas = detail::numbers(cfg, sec + "gamma", {0.0});
    const auto degrees = detail::numbers(cfg, sec + "degree", {3});
    const auto coef0s = detail::numbers(cfg, sec + "coef0", {0.0});
    const auto caps = detail::numbers(cfg, sec + "max_iterations", {1e7});
    if (caps.size() != 1) throw std::invalid_argument("grid key 'max_iterations' takes one value");
    for (double c : cs)
        for (double e : eps)
            for (const auto& k : kernels)
                for (double g : gammas)
                    for (double deg : degrees)
                        for (double c0 : coef0s) {
                            SvrParams v;
                            v.C = c;
                            v.epsilon = e;
                            v.kernel.kind = parse_kernel(k);
                            v.kernel.gamma = g;
                            v.kernel.degree = static_cast<int>(detail::whole(deg, "degree"));
                            v.kernel.coef0 = c0;
                            v.max_iterations = detail::whole(caps[0], "max_iterations");
                            check(v);
                            grid.push_back(v);
                        }
    return grid;
}

}  // namespace magic_meter
