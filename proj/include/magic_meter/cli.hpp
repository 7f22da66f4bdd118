#pragma once

// Command-line front end. run_cli() is the whole program minus main(), so
// tests can drive it in-process.
//
// Exit codes: 0 success, 1 user error (bad flags, bad input files, invalid
// values), 2 internal error.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "magic_meter/circuit.hpp"
#include "magic_meter/core/parallel.hpp"
#include "magic_meter/features.hpp"
#include "magic_meter/generators.hpp"
#include "magic_meter/harness/emit.hpp"
#include "magic_meter/harness/experiment.hpp"
#include "magic_meter/harness/runtime.hpp"
#include "magic_meter/ml/grid_search.hpp"
#include "magic_meter/ml/model.hpp"
#include "magic_meter/simulator.hpp"
#include "magic_meter/sre.hpp"

#ifndef MAGIC_METER_VERSION
#define MAGIC_METER_VERSION "dev"
#endif

namespace magic_meter {

struct GlobalConfig {
    unsigned threads = 0;  // 0: MAGIC_METER_THREADS, then hardware
    std::uint32_t max_qubits = 6;
    bool verbose = false;

    QubitRange range() const { return {2, max_qubits}; }
};

namespace cli {

/// Shortest round-trip form, always with a decimal point or exponent.
inline std::string decimal(double v) {
    std::string s = format_double(v);
    if (std::isfinite(v) && s.find_first_of(".e") == std::string::npos) s += ".0";
    return s;
}

inline std::vector<Circuit> read_circuits(const std::string& path, QubitRange range) {
    std::vector<Circuit> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(deserialize(lines[i], range));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

inline std::vector<LabeledCircuit> read_labeled(const std::string& path, QubitRange range) {
    std::vector<LabeledCircuit> out;
    const auto lines = read_lines(path);
    for (std::size_t i = 0; i < lines.size(); ++i) {
        try {
            out.push_back(deserialize_labeled(lines[i], range));
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument(path + ":" + std::to_string(i + 1) + ": " + e.what());
        }
    }
    return out;
}

template <typename T>
std::string jsonl(const std::vector<T>& items) {
    std::string out;
    for (const auto& item : items) {
        out += serialize(item);
        out += '\n';
    }
    return out;
}

struct GenerateArgs {
    std::string family;
    std::uint32_t qubits = 2;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    std::string out;
    std::uint32_t g_min = 0, g_max = 100;
    std::uint32_t t_min = 1, t_max = 5;
    double theta_min = 0.0, theta_max = kTwoPi;
    double phi_min = 0.0, phi_max = kTwoPi;
};

struct FeaturesArgs {
    std::string encoding = "circuit_level";
    std::string mode = "sampled";
    std::size_t shots = 10000;
    std::optional<std::uint64_t> seed;
    bool pad = false;
    std::string in, out;
};

struct TrainArgs {
    std::string model;
    std::optional<std::string> encoding;
    std::optional<std::string> grid;
    std::size_t folds = 5;
    std::uint64_t seed = 0;
    std::string in, out;
};

struct RuntimeArgs {
    std::uint32_t n_min = 2, n_max = 6;
    std::size_t samples = 50;
    std::uint32_t g_min = 40, g_max = 59;
    std::size_t warmups = 3, repeats = 10, train_rows = 400;
    std::vector<std::string> models{"rfr", "svr"};
    std::uint64_t seed = 0;
    std::string out;
};

inline void log(const GlobalConfig& g, std::ostream& err, const std::string& msg) {
    if (g.verbose) err << msg << '\n';
}

inline void run_generate(const GenerateArgs& a, const GlobalConfig& g, std::ostream& err) {
    if (a.qubits > g.max_qubits) {
        throw std::invalid_argument("--qubits " + std::to_string(a.qubits) + " exceeds --max-qubits " +
                                    std::to_string(g.max_qubits));
    }
    std::vector<Circuit> circuits;
    const unsigned threads = resolve_threads(g.threads);
    if (a.family == "rqc") {
        RqcConfig cfg;
        cfg.n_qubits = a.qubits;
        cfg.count = a.count;
        cfg.master_seed = a.seed;
        cfg.g_min = a.g_min;
        cfg.g_max = a.g_max;
        circuits = gen_dataset(cfg, threads);
    } else {
        TimConfig cfg;
        cfg.n_qubits = a.qubits;
        cfg.count = a.count;
        cfg.master_seed = a.seed;
        cfg.t_min = a.t_min;
        cfg.t_max = a.t_max;
        cfg.theta_range = {a.theta_min, a.theta_max};
        cfg.phi_range = {a.phi_min, a.phi_max};
        circuits = gen_dataset(cfg, threads);
    }
    write_file(a.out, jsonl(circuits));
    log(g, err, "wrote " + std::to_string(circuits.size()) + " circuits to " + a.out);
}

/// Writes every labeled circuit; failed items are reported and make the
/// command exit 1 after the output is written.
inline void run_label(const std::string& in, const std::string& out, const GlobalConfig& g, std::ostream& err) {
    const auto circuits = read_circuits(in, g.range());
    const auto results = label_dataset(circuits, {}, resolve_threads(g.threads));
    std::string text;
    std::size_t failed = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        if (results[i].error) {
            err << in << ":" << i + 1 << ": labeling failed: " << *results[i].error << '\n';
            ++failed;
            continue;
        }
        text += serialize(results[i].labeled);
        text += '\n';
    }
    write_file(out, text);
    log(g, err, "labeled " + std::to_string(results.size() - failed) + " circuits");
    if (failed) throw std::invalid_argument(std::to_string(failed) + " circuit(s) could not be labeled");
}

inline void run_features(const FeaturesArgs& a, const GlobalConfig& g, std::ostream& err) {
    AssembleOptions opts;
    opts.encoding = parse_encoding(a.encoding);
    opts.pad = a.pad;
    opts.threads = resolve_threads(g.threads);
    if (a.mode != "exact" && a.mode != "sampled") throw std::invalid_argument("--mode must be exact or sampled");
    opts.shadow.mode = a.mode == "exact" ? ShadowMode::Exact : ShadowMode::Sampled;
    opts.shadow.shots = a.shots;
    const bool samples = opts.encoding != Encoding::CircuitLevel && opts.shadow.mode == ShadowMode::Sampled;
    if (samples && !a.seed) throw std::invalid_argument("sampled shadow features need --seed");
    if (samples && a.shots == 0) throw std::invalid_argument("--shots must be positive");
    opts.shadow.seed = a.seed.value_or(0);
    const auto rows = read_labeled(a.in, g.range());
    const auto d = assemble(rows, opts);
    save_csv(d, a.out);
    log(g, err, "wrote " + std::to_string(d.size()) + " rows x " + std::to_string(d.feature_names.size()) +
                    " features to " + a.out);
}

inline void run_train(const TrainArgs& a, const GlobalConfig& g, std::ostream& out) {
    const auto data = load_csv(a.in);
    if (a.encoding && parse_encoding(*a.encoding) != data.encoding) {
        throw std::invalid_argument("--encoding " + *a.encoding + " does not match the table (" +
                                    encoding_name(data.encoding) + ")");
    }
    const auto grid = a.grid ? grid_from_config(KvConfig::load(*a.grid), a.model) : default_grid(a.model);
    const auto result = grid_search_cv(data, grid, {a.folds, a.seed, resolve_threads(g.threads)});
    save_model(result.model, a.out);
    out << "params,mean_cv_mse,unconverged_folds\n";
    for (const auto& row : result.report.rows) {
        out << '"' << describe(row.params) << "\"," << format_double(row.mean_mse) << ','
            << row.unconverged_folds << '\n';
    }
    out << "selected: " << describe(grid[result.report.selected]) << '\n';
}

inline void run_experiment_cmd(const std::string& spec_path, const std::string& out_dir, const GlobalConfig& g,
                               std::ostream& out) {
    auto spec = load_experiment_spec(spec_path);
    spec.threads = resolve_threads(g.threads);
    const auto data = load_datasets(spec.datasets);
    const auto report = run_experiment(spec, data);
    emit_report(report, out_dir);
    if (report.train) out << "train_mse " << format_double(report.train->mse) << '\n';
    if (report.test) out << "test_mse " << format_double(report.test->mse) << '\n';
    if (report.extrapolation) out << "extrapolation_mse " << format_double(report.extrapolation->mse) << '\n';
}

inline void run_runtime_cmd(const RuntimeArgs& a, std::ostream& out) {
    RuntimeConfig cfg;
    cfg.n_min = a.n_min;
    cfg.n_max = a.n_max;
    cfg.samples = a.samples;
    cfg.g_min = a.g_min;
    cfg.g_max = a.g_max;
    cfg.warmups = a.warmups;
    cfg.repeats = a.repeats;
    cfg.train_rows = a.train_rows;
    cfg.seed = a.seed;
    cfg.models.clear();
    for (const auto& m : a.models) {
        if (m == "none") continue;
        if (m == "rfr") cfg.models.push_back(ForestParams{});
        else if (m == "svr") cfg.models.push_back(SvrParams{});
        else throw std::invalid_argument("unknown model '" + m + "'");
    }
    const auto report = run_runtime_analysis(cfg);
    emit_report(report, a.out);
    out << runtime_csv(report);
}

inline void run_sre(const std::vector<std::string>& circuits, const std::optional<std::string>& in,
                    const GlobalConfig& g, std::ostream& out) {
    std::vector<Circuit> all;
    for (const auto& line : circuits) all.push_back(deserialize(line, g.range()));
    if (in) {
        const auto more = read_circuits(*in, g.range());
        all.insert(all.end(), more.begin(), more.end());
    }
    if (all.empty()) throw std::invalid_argument("sre needs --circuit or --in");
    for (const auto& c : all) out << decimal(clamp_sre(sre(simulate(c, g.max_qubits), {}, resolve_threads(g.threads)))) << '\n';
}

inline void print_version(std::ostream& out) {
    out << "magic-meter " << MAGIC_METER_VERSION << '\n'
        << "circuit schema " << kCircuitSchemaVersion << '\n'
        << "feature layout " << kFeatureLayoutVersion << '\n'
        << "model format " << kModelFormatVersion << '\n'
        << "report schema " << kReportSchemaVersion << '\n';
}

}  // namespace cli

inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Exact and learned stabilizer Renyi entropy of quantum circuits", "magic-meter"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalConfig g;
    app.add_option("--threads", g.threads, "Worker threads; 0 = $MAGIC_METER_THREADS or all cores")
        ->capture_default_str();
    app.add_option("--max-qubits", g.max_qubits, "Largest accepted circuit width")
        ->check(CLI::Range(2u, kDefaultMaxQubits))
        ->capture_default_str();
    app.add_flag("-v,--verbose", g.verbose, "Progress messages on stderr");

    cli::GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate random (RQC) or Trotterized Ising (TIM) circuits");
    generate->add_option("--family", gen.family, "rqc or tim")->required()->check(CLI::IsMember({"rqc", "tim"}));
    generate->add_option("--qubits", gen.qubits, "Circuit width")->required()->check(CLI::Range(2u, kDefaultMaxQubits));
    generate->add_option("--count", gen.count, "Number of circuits")->required();
    generate->add_option("--seed", gen.seed, "Master seed")->required();
    generate->add_option("--out", gen.out, "Output JSONL file")->required();
    generate->add_option("--g-min", gen.g_min, "RQC minimum gate count")->capture_default_str();
    generate->add_option("--g-max", gen.g_max, "RQC maximum gate count")->capture_default_str();
    generate->add_option("--t-min", gen.t_min, "TIM minimum Trotter steps")->capture_default_str();
    generate->add_option("--t-max", gen.t_max, "TIM maximum Trotter steps")->capture_default_str();
    generate->add_option("--theta-min", gen.theta_min, "TIM theta lower bound");
    generate->add_option("--theta-max", gen.theta_max, "TIM theta upper bound");
    generate->add_option("--phi-min", gen.phi_min, "TIM phi lower bound");
    generate->add_option("--phi-max", gen.phi_max, "TIM phi upper bound");

    std::string label_in, label_out;
    auto* label = app.add_subcommand("label", "Attach exact S2 and labeling time to each circuit");
    label->add_option("--in", label_in, "Circuit JSONL file")->required();
    label->add_option("--out", label_out, "Labeled JSONL file")->required();

    cli::FeaturesArgs feat;
    std::uint64_t feat_seed = 0;
    auto* features = app.add_subcommand("features", "Build a feature table from labeled circuits");
    features->add_option("--encoding", feat.encoding, "circuit_level, shadow or combined")
        ->check(CLI::IsMember({"circuit_level", "shadow", "combined"}))
        ->capture_default_str();
    features->add_option("--mode", feat.mode, "Shadow values: exact or sampled")
        ->check(CLI::IsMember({"exact", "sampled"}))
        ->capture_default_str();
    features->add_option("--shots", feat.shots, "Snapshots per circuit in sampled mode")->capture_default_str();
    auto* feat_seed_opt = features->add_option("--seed", feat_seed, "Shadow sampling seed");
    features->add_flag("--pad", feat.pad, "Embed shadow columns in the 6-qubit layout");
    features->add_option("--in", feat.in, "Labeled JSONL file")->required();
    features->add_option("--out", feat.out, "Output CSV file")->required();

    cli::TrainArgs tr;
    std::string tr_encoding, tr_grid;
    auto* train = app.add_subcommand("train", "Grid-search, cross-validate and fit a model");
    train->add_option("--model", tr.model, "rfr or svr")->required()->check(CLI::IsMember({"rfr", "svr"}));
    auto* tr_encoding_opt = train->add_option("--encoding", tr_encoding, "Expected table encoding");
    auto* tr_grid_opt = train->add_option("--grid", tr_grid, "Grid file ([rfr] / [svr] sections)");
    train->add_option("--folds", tr.folds, "Cross-validation folds")->capture_default_str();
    train->add_option("--seed", tr.seed, "Fold and forest seed")->required();
    train->add_option("--in", tr.in, "Feature CSV file")->required();
    train->add_option("--out", tr.out, "Output model JSON file")->required();

    std::string spec_path, exp_out;
    auto* experiment = app.add_subcommand("experiment", "Run an interpolation or extrapolation experiment");
    experiment->add_option("--spec", spec_path, "Experiment spec file")->required();
    experiment->add_option("--out", exp_out, "Report directory")->required();

    cli::RuntimeArgs rt;
    auto* runtime = app.add_subcommand("runtime", "Time exact SRE against model prediction");
    runtime->add_option("--seed", rt.seed, "Sampling and training seed")->required();
    runtime->add_option("--out", rt.out, "Report directory")->required();
    runtime->add_option("--n-min", rt.n_min, "Smallest width")->capture_default_str();
    runtime->add_option("--n-max", rt.n_max, "Largest width")->capture_default_str();
    runtime->add_option("--samples", rt.samples, "Circuits per width")->capture_default_str();
    runtime->add_option("--g-min", rt.g_min, "Minimum gate count")->capture_default_str();
    runtime->add_option("--g-max", rt.g_max, "Maximum gate count")->capture_default_str();
    runtime->add_option("--warmups", rt.warmups, "Untimed calls before each timed loop")->capture_default_str();
    runtime->add_option("--repeats", rt.repeats, "Minimum timed passes; each circuit keeps its fastest")->capture_default_str();
    runtime->add_option("--train-rows", rt.train_rows, "Training circuits per width")->capture_default_str();
    runtime->add_option("--models", rt.models, "rfr, svr or none")->delimiter(',')->capture_default_str();

    std::vector<std::string> sre_circuits;
    std::string sre_in;
    auto* sre_cmd = app.add_subcommand("sre", "Exact S2 of single circuits");
    sre_cmd->add_option("--circuit", sre_circuits, "Circuit as one JSON line (repeatable)");
    auto* sre_in_opt = sre_cmd->add_option("--in", sre_in, "Circuit JSONL file");

    auto* version = app.add_subcommand("version", "Print version and format versions");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.back()->help());
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        const auto subs = app.get_subcommands();
        err << "error: " << e.what() << "\n\n" << (subs.empty() ? app.help() : subs.back()->help());
        return 1;
    }

    try {
        if (generate->parsed()) {
            cli::run_generate(gen, g, err);
        } else if (label->parsed()) {
            cli::run_label(label_in, label_out, g, err);
        } else if (features->parsed()) {
            if (feat_seed_opt->count()) feat.seed = feat_seed;
            cli::run_features(feat, g, err);
        } else if (train->parsed()) {
            if (tr_encoding_opt->count()) tr.encoding = tr_encoding;
            if (tr_grid_opt->count()) tr.grid = tr_grid;
            cli::run_train(tr, g, out);
        } else if (experiment->parsed()) {
            cli::run_experiment_cmd(spec_path, exp_out, g, out);
        } else if (runtime->parsed()) {
            cli::run_runtime_cmd(rt, out);
        } else if (sre_cmd->parsed()) {
            cli::run_sre(sre_circuits, sre_in_opt->count() ? std::optional(sre_in) : std::nullopt, g, out);
        } else if (version->parsed()) {
            cli::print_version(out);
        }
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace magic_meter
