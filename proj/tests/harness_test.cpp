#include "magic_meter/harness/experiment.hpp"

#include <algorithm>
#include <filesystem>
#include <set>

#include "gtest/gtest.h"
#include "magic_meter/harness/emit.hpp"
#include "magic_meter/harness/runtime.hpp"
#include "magic_meter/sre.hpp"

using namespace magic_meter;

namespace {

Dataset rqc_table(std::uint32_t n, std::size_t count, std::uint64_t seed) {
    RqcConfig cfg;
    cfg.n_qubits = n;
    cfg.count = count;
    cfg.master_seed = seed;
    std::vector<LabeledCircuit> rows;
    for (auto& r : label_dataset(gen_dataset(cfg))) rows.push_back(r.labeled);
    return assemble(rows, {});
}

Dataset tim_table(std::uint32_t n, std::size_t count, std::uint64_t seed) {
    TimConfig cfg;
    cfg.n_qubits = n;
    cfg.count = count;
    cfg.master_seed = seed;
    std::vector<LabeledCircuit> rows;
    for (auto& r : label_dataset(gen_dataset(cfg))) rows.push_back(r.labeled);
    return assemble(rows, {});
}

std::vector<ModelParams> small_forest_grid() {
    std::vector<ModelParams> grid;
    for (std::uint32_t depth : {4u, 0u}) {
        ForestParams f;
        f.n_estimators = 8;
        f.tree.max_depth = depth;
        f.tree.max_features = 1.0 / 3.0;
        grid.push_back(f);
    }
    return grid;
}

ExperimentSpec spec_for(const std::string& kind, SplitRule split) {
    ExperimentSpec s;
    s.name = "t";
    s.kind = kind;
    s.model = "rfr";
    s.split = split;
    s.seed = 11;
    s.folds = 3;
    s.grid = small_forest_grid();
    return s;
}

std::set<std::size_t> as_set(const std::vector<std::size_t>& v) { return {v.begin(), v.end()}; }

void expect_disjoint_cover(const Partition& p, std::size_t rows) {
    std::vector<std::size_t> all;
    for (const auto* part : {&p.train, &p.test, &p.extrapolation, &p.excluded}) {
        all.insert(all.end(), part->begin(), part->end());
    }
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), rows);
    for (std::size_t i = 0; i < rows; ++i) ASSERT_EQ(all[i], i);
}

std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("mm_harness_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(partition, random_split_is_80_20_and_exhaustive) {
    const auto d = rqc_table(2, 250, 1);
    const auto p = partition_rows(d, SplitRule::Random, {}, 5);
    expect_disjoint_cover(p, d.size());
    EXPECT_EQ(p.test.size(), 50u);
    EXPECT_TRUE(p.extrapolation.empty());
    EXPECT_TRUE(p.excluded.empty());
    EXPECT_EQ(p.train, partition_rows(d, SplitRule::Random, {}, 5).train);
    EXPECT_NE(p.train, partition_rows(d, SplitRule::Random, {}, 6).train);
}

TEST(partition, gate_bins_follow_the_ranges_and_exclude_100) {
    const auto d = rqc_table(2, 600, 2);
    const auto p = partition_rows(d, SplitRule::GateBins, default_bounds(SplitRule::GateBins), 3);
    expect_disjoint_cover(p, d.size());
    for (auto i : p.train) EXPECT_LE(d.gate_counts[i], 79u);
    for (auto i : p.test) EXPECT_LE(d.gate_counts[i], 79u);
    for (auto i : p.extrapolation) {
        EXPECT_GE(d.gate_counts[i], 80u);
        EXPECT_LE(d.gate_counts[i], 99u);
    }
    for (auto i : p.excluded) EXPECT_EQ(d.gate_counts[i], 100u);
    std::size_t hundred = 0;
    for (auto g : d.gate_counts) hundred += g == 100;
    EXPECT_EQ(p.excluded.size(), hundred);
}

TEST(partition, trotter_and_qubit_rules) {
    auto d = tim_table(2, 100, 3);
    d.append(tim_table(3, 100, 4));
    const auto steps = partition_rows(d, SplitRule::TrotterSteps, default_bounds(SplitRule::TrotterSteps), 1);
    expect_disjoint_cover(steps, d.size());
    for (auto i : steps.extrapolation) EXPECT_EQ(d.trotter_steps[i], 5u);
    for (auto i : steps.train) EXPECT_LE(d.trotter_steps[i], 4u);
    EXPECT_TRUE(steps.excluded.empty());

    const auto qubits = partition_rows(d, SplitRule::Qubits, {2, 2, 3, 3}, 1);
    expect_disjoint_cover(qubits, d.size());
    EXPECT_EQ(qubits.extrapolation.size(), 100u);
    for (auto i : qubits.extrapolation) EXPECT_EQ(d.n_qubits[i], 3u);

    EXPECT_THROW(partition_rows(rqc_table(2, 60, 1), SplitRule::TrotterSteps, default_bounds(SplitRule::TrotterSteps), 1),
                 std::invalid_argument);
}

TEST(partition, control_rule_holds_out_a_random_fifth) {
    const auto d = rqc_table(2, 200, 5);
    const auto p = partition_rows(d, SplitRule::Control, {}, 9);
    expect_disjoint_cover(p, d.size());
    EXPECT_EQ(p.extrapolation.size(), 40u);
    EXPECT_EQ(p.test.size(), 32u);
}

TEST(experiment, interpolation_is_reproducible_and_tunes_per_n) {
    auto d = rqc_table(2, 120, 6);
    d.append(rqc_table(3, 120, 7));
    const auto spec = spec_for("interpolation", SplitRule::Random);
    const auto a = run_experiment(spec, d);
    const auto b = run_experiment(spec, d);
    EXPECT_TRUE(same_results(a, b));
    ASSERT_EQ(a.runs.size(), 2u);
    EXPECT_EQ(a.runs[0].group, "n=2");
    EXPECT_EQ(a.runs[1].group, "n=3");
    EXPECT_EQ(a.train->rows + a.test->rows, 240u);
    EXPECT_EQ(a.test->rows, 48u);
    EXPECT_FALSE(a.extrapolation.has_value());
    for (const auto& run : a.runs) {
        ASSERT_EQ(run.cv.size(), 2u);
        EXPECT_EQ(std::count_if(run.cv.begin(), run.cv.end(), [](const CvEntry& c) { return c.selected; }), 1);
    }
    auto other = spec;
    other.seed = 12;
    EXPECT_FALSE(same_results(a, run_experiment(other, d)));
}

TEST(experiment, memorizing_forest_overfits) {
    const auto d = rqc_table(3, 150, 8);
    auto spec = spec_for("interpolation", SplitRule::Random);
    ForestParams f;
    f.n_estimators = 1;
    f.bootstrap = false;
    spec.grid = {f};
    const auto r = run_experiment(spec, d);
    EXPECT_EQ(r.train->mse, 0.0);
    EXPECT_GT(r.test->mse, 0.0);
}

TEST(experiment, model_selection_never_sees_held_out_rows) {
    const auto d = rqc_table(2, 400, 9);
    const auto spec = spec_for("extrapolation", SplitRule::GateBins);
    std::vector<std::size_t> seen;
    ExperimentHooks hooks;
    hooks.on_model_selection = [&](std::span<const std::size_t> rows) { seen.assign(rows.begin(), rows.end()); };
    const auto r = run_experiment(spec, d, hooks);
    const auto p = partition_rows(d, spec.split, spec.resolved_bounds(), derive_seed(spec.seed, 0));
    EXPECT_EQ(as_set(seen), as_set(p.train));
    for (auto i : seen) EXPECT_LE(d.gate_counts[i], 79u);
    EXPECT_EQ(r.train->rows, p.train.size());
    EXPECT_EQ(r.extrapolation->rows, p.extrapolation.size());
    EXPECT_EQ(r.excluded_rows, p.excluded.size());
    if (!p.excluded.empty()) {
        EXPECT_FALSE(r.notes.empty());
    }
}

TEST(experiment, interpolation_access_log_covers_only_train_rows) {
    const auto d = rqc_table(2, 100, 10);
    const auto spec = spec_for("interpolation", SplitRule::Random);
    std::set<std::size_t> seen;
    ExperimentHooks hooks;
    hooks.on_model_selection = [&](std::span<const std::size_t> rows) { seen.insert(rows.begin(), rows.end()); };
    run_experiment(spec, d, hooks);
    const auto p = partition_rows(d, SplitRule::Random, {}, derive_seed(spec.seed, 4));
    EXPECT_EQ(seen, as_set(p.train));
}

TEST(experiment, gate_groups_and_control) {
    const auto d = rqc_table(2, 400, 11);
    const auto r = run_experiment(spec_for("extrapolation", SplitRule::GateBins), d);
    std::set<std::string> groups;
    for (const auto& g : r.groups) {
        if (g.split == "extrapolation") groups.insert(g.group);
    }
    EXPECT_EQ(groups, (std::set<std::string>{"gates=80-89", "gates=90-99"}));
    const auto control = run_experiment(spec_for("extrapolation", SplitRule::Control), d);
    ASSERT_TRUE(control.extrapolation.has_value());
    EXPECT_EQ(control.excluded_rows, 0u);
    EXPECT_EQ(control.extrapolation->rows, 80u);
}

TEST(experiment, errors) {
    const auto small = rqc_table(2, 40, 12);
    EXPECT_THROW(run_experiment(spec_for("interpolation", SplitRule::Random), small), std::invalid_argument);
    const auto d = rqc_table(2, 100, 13);
    auto spec = spec_for("extrapolation", SplitRule::Qubits);
    EXPECT_THROW(run_experiment(spec, d), std::invalid_argument);  // no 6-qubit rows
    spec.split = SplitRule::GateBins;
    spec.encoding = "shadow";
    EXPECT_THROW(run_experiment(spec, d), std::invalid_argument);
}

TEST(experiment_spec, parses_and_resolves_paths) {
    const auto cfg = KvConfig::parse(R"(
name = "depth"
kind = "extrapolation"
model = "svr"
datasets = ["a.csv", "/abs/b.csv"]
encoding = "circuit_level"
split = "gate_bins"
seed = 3
folds = 4
[bounds]
train_max = 69
eval_min = 70
[svr]
C = [1, 10]
epsilon = 0.1
kernel = "rbf"
)");
    const auto s = parse_experiment_spec(cfg, "/data/specs");
    EXPECT_EQ(s.datasets, (std::vector<std::string>{"/data/specs/a.csv", "/abs/b.csv"}));
    EXPECT_EQ(s.split, SplitRule::GateBins);
    EXPECT_EQ(s.seed, 3u);
    EXPECT_EQ(s.folds, 4u);
    EXPECT_EQ(s.resolved_bounds(), (SplitBounds{0, 69, 70, 99}));
    EXPECT_EQ(s.grid.size(), 2u);
    EXPECT_EQ(s.model, "svr");
}

TEST(experiment_spec, rejects_bad_specs) {
    auto parse = [](const std::string& text) { return parse_experiment_spec(KvConfig::parse(text)); };
    EXPECT_THROW(parse("datasets = [\"a\"]\nsplit = \"random_80_20\""), std::invalid_argument);  // no seed
    EXPECT_THROW(parse("datasets = [\"a\"]\nseed = 1\nkind = \"sideways\""), std::invalid_argument);
    EXPECT_THROW(parse("datasets = [\"a\"]\nseed = 1\nsplit = \"gate_bins\""), std::invalid_argument);
    EXPECT_THROW(parse("datasets = [\"a\"]\nseed = 1\nkind = \"extrapolation\""), std::invalid_argument);
    EXPECT_THROW(parse("datasets = [\"a\"]\nseed = 1\ncolour = \"red\""), std::invalid_argument);
    EXPECT_THROW(parse("seed = 1"), std::invalid_argument);
    EXPECT_THROW(parse("datasets = [\"a\"]\nseed = 1\nkind = \"extrapolation\"\nsplit = \"gate_bins\"\n"
                       "[bounds]\ntrain_max = 85"),
                 std::invalid_argument);
    EXPECT_NO_THROW(parse("datasets = [\"a\"]\nseed = 1"));
}

TEST(report, json_round_trip) {
    const auto d = rqc_table(2, 300, 14);
    const auto r = run_experiment(spec_for("extrapolation", SplitRule::GateBins), d);
    const auto back = report_from_json(nlohmann::json::parse(report_to_json(r).dump()));
    EXPECT_EQ(back, r);
    EXPECT_THROW(report_from_json(nlohmann::json::parse("{\"schema_version\": 99}")), std::invalid_argument);
}

TEST(report, empty_extrapolation_is_omitted_everywhere) {
    const auto d = rqc_table(2, 100, 15);
    const auto r = run_experiment(spec_for("interpolation", SplitRule::Random), d);
    const auto dir = scratch_dir("interp");
    emit_report(r, dir);
    const auto j = nlohmann::json::parse(read_file((dir / "report.json").string()));
    EXPECT_FALSE(j.contains("extrapolation"));
    for (const auto& run : j.at("runs")) EXPECT_FALSE(run.contains("extrapolation"));
    EXPECT_EQ(read_file((dir / "metrics.csv").string()).find("extrapolation"), std::string::npos);
    EXPECT_EQ(read_file((dir / "chart.svg").string()).find("extrapolation"), std::string::npos);
    EXPECT_EQ(load_report((dir / "report.json").string()), r);
}

namespace {

// Minimal well-formedness check: balanced tags, quoted attributes, no stray '&'.
bool well_formed_xml(const std::string& s) {
    std::vector<std::string> stack;
    std::size_t i = 0;
    while ((i = s.find('<', i)) != std::string::npos) {
        const auto close = s.find('>', i);
        if (close == std::string::npos) return false;
        std::string tag = s.substr(i + 1, close - i - 1);
        i = close + 1;
        if (tag.empty()) return false;
        if (tag[0] == '?' || tag[0] == '!') continue;
        if (std::count(tag.begin(), tag.end(), '"') % 2 != 0) return false;
        const bool self_closing = tag.back() == '/';
        if (tag[0] == '/') {
            const auto name = tag.substr(1);
            if (stack.empty() || stack.back() != name) return false;
            stack.pop_back();
            continue;
        }
        if (!self_closing) stack.push_back(tag.substr(0, tag.find_first_of(" \t\n")));
    }
    for (std::size_t a = 0; (a = s.find('&', a)) != std::string::npos; ++a) {
        const auto semi = s.find(';', a);
        const auto entity = s.substr(a, semi - a + 1);
        if (entity != "&amp;" && entity != "&lt;" && entity != "&gt;" && entity != "&quot;" && entity != "&apos;") {
            return false;
        }
    }
    return stack.empty();
}

std::size_t count_of(const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (std::size_t i = 0; (i = s.find(needle, i)) != std::string::npos; i += needle.size()) ++n;
    return n;
}

}  // namespace

TEST(svg, one_bar_per_encoding_split_cell) {
    Report a;
    a.encoding = "circuit_level";
    a.kind = "extrapolation";
    a.train = SplitMetrics{10, 0.01, 0.1};
    a.test = SplitMetrics{5, 0.02, 0.1};
    a.extrapolation = SplitMetrics{5, 0.05, 0.1};
    Report b = a;
    b.encoding = "shadow <&>";
    b.extrapolation.reset();
    const auto svg = mse_chart_svg({a, b}, "depth & width");
    EXPECT_TRUE(well_formed_xml(svg));
    EXPECT_EQ(count_of(svg, "class=\"bar\""), 5u);
    EXPECT_EQ(count_of(svg, "data-series=\"circuit_level extrapolation\""), 1u);
    EXPECT_NE(svg.find("shadow &lt;&amp;&gt;"), std::string::npos);
    EXPECT_TRUE(well_formed_xml(runtime_chart_svg(Report{})));
}

TEST(runtime, small_run_produces_rows_and_chart) {
    RuntimeConfig cfg;
    cfg.n_min = 2;
    cfg.n_max = 3;
    cfg.samples = 5;
    cfg.train_rows = 60;
    ForestParams f;
    f.n_estimators = 5;
    cfg.models = {f};
    cfg.seed = 4;
    const auto r = run_runtime_analysis(cfg);
    ASSERT_EQ(r.runtime.size(), 2u);
    for (const auto& row : r.runtime) {
        EXPECT_GT(row.exact_sre_ms, 0.0);
        EXPECT_GT(row.predict_ms, 0.0);
        EXPECT_EQ(row.model, "rfr");
        EXPECT_EQ(row.train_rows, 60u);
    }
    EXPECT_TRUE(same_results(r, run_runtime_analysis(cfg)));
    const auto dir = scratch_dir("runtime");
    emit_report(r, dir);
    const auto svg = read_file((dir / "chart.svg").string());
    EXPECT_TRUE(well_formed_xml(svg));
    EXPECT_EQ(count_of(svg, "class=\"series\""), 4u);
    EXPECT_EQ(count_of(read_file((dir / "runtime.csv").string()), "\n"), 3u);
}
