#pragma once

// Experiment reports: in-memory form, JSON round trip and CSV tables.
//
// Fields ending in "_ms" are wall-clock timings. They are the only fields
// allowed to differ between reruns with identical seeds; same_results()
// compares everything else.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "magic_meter/core/text.hpp"

namespace magic_meter {

inline constexpr int kReportSchemaVersion = 1;

struct SplitMetrics {
    std::size_t rows = 0;
    double mse = 0.0;
    double label_variance = 0.0;

    bool operator==(const SplitMetrics&) const = default;
};

/// Metrics of one row subset, e.g. split "test", group "n=3".
struct GroupMetric {
    std::string split;
    std::string group;
    SplitMetrics metrics;

    bool operator==(const GroupMetric&) const = default;
};

struct CvEntry {
    std::string params;
    std::vector<double> fold_mse;
    double mean_mse = 0.0;
    std::size_t unconverged_folds = 0;
    bool selected = false;

    bool operator==(const CvEntry&) const = default;
};

/// One tuned model. Interpolation tunes one model per qubit count.
struct ModelRun {
    std::string group;
    std::string selected_params;
    std::uint64_t seed = 0;
    SplitMetrics train;
    SplitMetrics test;
    std::optional<SplitMetrics> extrapolation;
    std::vector<CvEntry> cv;
    double fit_ms = 0.0;

    bool operator==(const ModelRun&) const = default;
};

struct RuntimeRow {
    std::uint32_t n_qubits = 0;
    std::size_t samples = 0;
    double exact_sre_ms = 0.0;
    double simulate_ms = 0.0;
    std::string model;
    std::size_t train_rows = 0;
    double train_ms = 0.0;
    double predict_ms = 0.0;

    bool operator==(const RuntimeRow&) const = default;
};

struct Report {
    int schema_version = kReportSchemaVersion;
    std::string name;
    std::string kind;  // interpolation | extrapolation | runtime
    std::string model;
    std::string encoding;
    std::string split;
    std::uint64_t seed = 0;
    std::size_t folds = 0;
    std::vector<std::string> datasets;
    std::vector<std::string> notes;
    std::size_t excluded_rows = 0;
    std::optional<SplitMetrics> train;
    std::optional<SplitMetrics> test;
    std::optional<SplitMetrics> extrapolation;
    std::vector<ModelRun> runs;
    std::vector<GroupMetric> groups;
    std::vector<RuntimeRow> runtime;
    double wall_ms = 0.0;

    bool operator==(const Report&) const = default;
};

namespace detail {

inline nlohmann::json to_json(const SplitMetrics& m) {
    return {{"rows", m.rows}, {"mse", m.mse}, {"label_variance", m.label_variance}};
}

inline SplitMetrics metrics_from_json(const nlohmann::json& j) {
    return {j.at("rows").get<std::size_t>(), j.at("mse").get<double>(),
            j.at("label_variance").get<double>()};
}

template <typename T, typename Fn>
std::optional<T> optional_field(const nlohmann::json& j, const char* key, Fn&& read) {
    if (!j.contains(key)) return std::nullopt;
    return read(j.at(key));
}

}  // namespace detail

/// Optional sections that are absent are omitted, not written as null.
inline nlohmann::json report_to_json(const Report& r) {
    using detail::to_json;
    nlohmann::json j;
    j["schema_version"] = r.schema_version;
    j["name"] = r.name;
    j["kind"] = r.kind;
    j["model"] = r.model;
    j["encoding"] = r.encoding;
    j["split"] = r.split;
    j["seed"] = r.seed;
    j["folds"] = r.folds;
    j["datasets"] = r.datasets;
    j["notes"] = r.notes;
    j["excluded_rows"] = r.excluded_rows;
    if (r.train) j["train"] = to_json(*r.train);
    if (r.test) j["test"] = to_json(*r.test);
    if (r.extrapolation) j["extrapolation"] = to_json(*r.extrapolation);
    auto runs = nlohmann::json::array();
    for (const auto& run : r.runs) {
        nlohmann::json rj;
        rj["group"] = run.group;
        rj["selected_params"] = run.selected_params;
        rj["seed"] = run.seed;
        rj["train"] = to_json(run.train);
        rj["test"] = to_json(run.test);
        if (run.extrapolation) rj["extrapolation"] = to_json(*run.extrapolation);
        auto cv = nlohmann::json::array();
        for (const auto& c : run.cv) {
            cv.push_back({{"params", c.params},
                          {"fold_mse", c.fold_mse},
                          {"mean_mse", c.mean_mse},
                          {"unconverged_folds", c.unconverged_folds},
                          {"selected", c.selected}});
        }
        rj["cv"] = std::move(cv);
        rj["fit_ms"] = run.fit_ms;
        runs.push_back(std::move(rj));
    }
    j["runs"] = std::move(runs);
    auto groups = nlohmann::json::array();
    for (const auto& g : r.groups) {
        groups.push_back({{"split", g.split}, {"group", g.group}, {"metrics", to_json(g.metrics)}});
    }
    j["groups"] = std::move(groups);
    if (!r.runtime.empty()) {
        auto rows = nlohmann::json::array();
        for (const auto& row : r.runtime) {
            rows.push_back({{"n_qubits", row.n_qubits},
                            {"samples", row.samples},
                            {"exact_sre_ms", row.exact_sre_ms},
                            {"simulate_ms", row.simulate_ms},
                            {"model", row.model},
                            {"train_rows", row.train_rows},
                            {"train_ms", row.train_ms},
                            {"predict_ms", row.predict_ms}});
        }
        j["runtime"] = std::move(rows);
    }
    j["wall_ms"] = r.wall_ms;
    return j;
}

inline Report report_from_json(const nlohmann::json& j) {
    using detail::metrics_from_json;
    try {
        Report r;
        r.schema_version = j.at("schema_version").get<int>();
        if (r.schema_version != kReportSchemaVersion) {
            throw std::invalid_argument("unsupported report schema version " +
                                        std::to_string(r.schema_version));
        }
        r.name = j.at("name").get<std::string>();
        r.kind = j.at("kind").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.encoding = j.at("encoding").get<std::string>();
        r.split = j.at("split").get<std::string>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.folds = j.at("folds").get<std::size_t>();
        r.datasets = j.at("datasets").get<std::vector<std::string>>();
        r.notes = j.at("notes").get<std::vector<std::string>>();
        r.excluded_rows = j.at("excluded_rows").get<std::size_t>();
        r.train = detail::optional_field<SplitMetrics>(j, "train", metrics_from_json);
        r.test = detail::optional_field<SplitMetrics>(j, "test", metrics_from_json);
        r.extrapolation = detail::optional_field<SplitMetrics>(j, "extrapolation", metrics_from_json);
        for (const auto& rj : j.at("runs")) {
            ModelRun run;
            run.group = rj.at("group").get<std::string>();
            run.selected_params = rj.at("selected_params").get<std::string>();
            run.seed = rj.at("seed").get<std::uint64_t>();
            run.train = metrics_from_json(rj.at("train"));
            run.test = metrics_from_json(rj.at("test"));
            run.extrapolation = detail::optional_field<SplitMetrics>(rj, "extrapolation", metrics_from_json);
            for (const auto& c : rj.at("cv")) {
                run.cv.push_back({c.at("params").get<std::string>(),
                                  c.at("fold_mse").get<std::vector<double>>(),
                                  c.at("mean_mse").get<double>(),
                                  c.at("unconverged_folds").get<std::size_t>(),
                                  c.at("selected").get<bool>()});
            }
            run.fit_ms = rj.at("fit_ms").get<double>();
            r.runs.push_back(std::move(run));
        }
        for (const auto& g : j.at("groups")) {
            r.groups.push_back({g.at("split").get<std::string>(), g.at("group").get<std::string>(),
                                metrics_from_json(g.at("metrics"))});
        }
        if (j.contains("runtime")) {
            for (const auto& row : j.at("runtime")) {
                r.runtime.push_back({row.at("n_qubits").get<std::uint32_t>(),
                                     row.at("samples").get<std::size_t>(),
                                     row.at("exact_sre_ms").get<double>(),
                                     row.at("simulate_ms").get<double>(),
                                     row.at("model").get<std::string>(),
                                     row.at("train_rows").get<std::size_t>(),
                                     row.at("train_ms").get<double>(),
                                     row.at("predict_ms").get<double>()});
            }
        }
        r.wall_ms = j.at("wall_ms").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("malformed report: ") + e.what());
    }
}

/// Zeroes every timing field.
inline Report without_timings(Report r) {
    r.wall_ms = 0.0;
    for (auto& run : r.runs) run.fit_ms = 0.0;
    for (auto& row : r.runtime) {
        row.exact_sre_ms = row.simulate_ms = row.train_ms = row.predict_ms = 0.0;
    }
    return r;
}

inline bool same_results(const Report& a, const Report& b) {
    return without_timings(a) == without_timings(b);
}

namespace detail {

inline std::string csv_metrics(const SplitMetrics& m) {
    return std::to_string(m.rows) + "," + format_double(m.mse) + "," + format_double(m.label_variance);
}

}  // namespace detail

/// "split,group,rows,mse,label_variance": overall rows use group "all".
inline std::string metrics_csv(const Report& r) {
    std::string out = "split,group,rows,mse,label_variance\n";
    auto add = [&](const char* split, const std::optional<SplitMetrics>& m) {
        if (m) out += std::string(split) + ",all," + detail::csv_metrics(*m) + "\n";
    };
    add("train", r.train);
    add("test", r.test);
    add("extrapolation", r.extrapolation);
    for (const auto& g : r.groups) out += g.split + "," + g.group + "," + detail::csv_metrics(g.metrics) + "\n";
    return out;
}

inline std::string cv_csv(const Report& r) {
    std::string out = "group,params,mean_mse,unconverged_folds,selected\n";
    for (const auto& run : r.runs) {
        for (const auto& c : run.cv) {
            out += run.group + ",\"" + c.params + "\"," + format_double(c.mean_mse) + "," +
                   std::to_string(c.unconverged_folds) + "," + (c.selected ? "1" : "0") + "\n";
        }
    }
    return out;
}

inline std::string runtime_csv(const Report& r) {
    std::string out = "n_qubits,samples,exact_sre_ms,simulate_ms,model,train_rows,train_ms,predict_ms\n";
    for (const auto& row : r.runtime) {
        out += std::to_string(row.n_qubits) + "," + std::to_string(row.samples) + "," +
               format_double(row.exact_sre_ms) + "," + format_double(row.simulate_ms) + "," + row.model +
               "," + std::to_string(row.train_rows) + "," + format_double(row.train_ms) + "," +
               format_double(row.predict_ms) + "\n";
    }
    return out;
}

}  // namespace magic_meter
