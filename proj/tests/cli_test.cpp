#include "magic_meter/cli.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

#include "gtest/gtest.h"

using namespace magic_meter;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "magic-meter");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
  protected:
    void SetUp() override {
        dir_ = std::filesystem::temp_directory_path() /
               ("mm_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    void TearDown() override { std::filesystem::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::filesystem::path dir_;
};

const char* kEmpty2 = R"({"v":1,"n":2,"family":"RQC","seed":0,"g":0,"gates":[]})";

}  // namespace

TEST_F(CliTest, sre_of_empty_circuit_prints_zero) {
    const auto r = invoke({"sre", "--circuit", kEmpty2});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(r.out, "0.0\n");
}

TEST_F(CliTest, sre_of_single_magic_rotation) {
    // RY(pi/4)|0> has Pauli weights (1, 1/2, 0, 1/2)/2, the same spectrum as
    // the T state, so S2 = ln(4/3).
    const std::string line =
        R"({"v":1,"n":2,"family":"RQC","seed":0,"g":1,"gates":[{"k":"ry","q":[0],"a":0.78539816339744828}]})";
    const auto r = invoke({"sre", "--circuit", line});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NEAR(std::stod(r.out), std::log(4.0 / 3.0), 1e-12);
}

TEST_F(CliTest, user_errors_exit_1) {
    EXPECT_EQ(invoke({}).code, 1);
    EXPECT_EQ(invoke({"frobnicate"}).code, 1);
    const auto unknown_flag = invoke({"sre", "--circuit", kEmpty2, "--colour"});
    EXPECT_EQ(unknown_flag.code, 1);
    EXPECT_NE(unknown_flag.err.find("Usage"), std::string::npos);
    EXPECT_EQ(invoke({"generate", "--family", "rqc", "--qubits", "2", "--count", "1", "--out", path("x")}).code, 1);
    EXPECT_EQ(invoke({"sre", "--circuit", "{not json"}).code, 1);
    EXPECT_EQ(invoke({"sre", "--circuit", R"({"v":2,"n":2,"family":"RQC","seed":0,"g":0,"gates":[]})"}).code, 1);
    EXPECT_EQ(invoke({"label", "--in", path("missing.jsonl"), "--out", path("l.jsonl")}).code, 1);
    EXPECT_EQ(invoke({"generate", "--family", "rqc", "--qubits", "7", "--count", "1", "--seed", "1", "--out", path("x")})
                  .code,
              1);
    EXPECT_FALSE(std::filesystem::exists(path("x")));
    EXPECT_EQ(invoke({"sre"}).code, 1);
}

TEST_F(CliTest, help_per_subcommand) {
    for (const char* sub : {"generate", "label", "features", "train", "experiment", "runtime", "sre", "version"}) {
        const auto r = invoke({sub, "--help"});
        EXPECT_EQ(r.code, 0) << sub;
        EXPECT_NE(r.out.find("Usage"), std::string::npos) << sub;
    }
    const auto v = invoke({"version"});
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.out.rfind("magic-meter ", 0), 0u);
}

TEST_F(CliTest, generate_is_deterministic) {
    for (const char* family : {"tim", "rqc"}) {
        ASSERT_EQ(invoke({"generate", "--family", family, "--qubits", "2", "--count", "1", "--seed", "7", "--out", path("a")}).code, 0);
        ASSERT_EQ(invoke({"generate", "--family", family, "--qubits", "2", "--count", "1", "--seed", "7", "--out", path("b")}).code, 0);
        EXPECT_EQ(read_file(path("a")), read_file(path("b")));
        ASSERT_EQ(invoke({"--threads", "1", "generate", "--family", family, "--qubits", "4", "--count", "50", "--seed", "7",
                       "--out", path("c")}).code, 0);
        ASSERT_EQ(invoke({"generate", "--family", family, "--qubits", "4", "--count", "50", "--seed", "7", "--out",
                       path("d"), "--threads", "3"}).code, 0);
        EXPECT_EQ(read_file(path("c")), read_file(path("d")));
    }
}

TEST_F(CliTest, full_pipeline_smoke) {
    ASSERT_EQ(invoke({"generate", "--family", "rqc", "--qubits", "3", "--count", "200", "--seed", "1", "--out", path("c.jsonl")}).code, 0);
    ASSERT_EQ(invoke({"label", "--in", path("c.jsonl"), "--out", path("l.jsonl")}).code, 0);
    EXPECT_EQ(read_lines(path("l.jsonl")).size(), 200u);
    ASSERT_EQ(invoke({"features", "--in", path("l.jsonl"), "--out", path("f.csv")}).code, 0);
    write_file(path("grid.toml"), "[rfr]\nn_estimators = 10\nmax_depth = [4, 0]\n");
    const auto train = invoke({"train", "--model", "rfr", "--encoding", "circuit_level", "--grid", path("grid.toml"),
                            "--seed", "3", "--in", path("f.csv"), "--out", path("m.json")});
    ASSERT_EQ(train.code, 0) << train.err;
    EXPECT_NE(train.out.find("selected: "), std::string::npos);
    const auto model = load_model(path("m.json"));
    EXPECT_EQ(model.kind(), "rfr");
    write_file(path("spec.toml"),
               "name = \"smoke\"\nkind = \"interpolation\"\nmodel = \"rfr\"\ndatasets = [\"f.csv\"]\nseed = 5\n"
               "folds = 3\ngrid = \"grid.toml\"\n");
    const auto exp = invoke({"experiment", "--spec", path("spec.toml"), "--out", path("report")});
    ASSERT_EQ(exp.code, 0) << exp.err;
    const auto report = load_report(path("report/report.json"));
    EXPECT_EQ(report.name, "smoke");
    EXPECT_EQ(report.train->rows + report.test->rows, 200u);
    for (const char* f : {"metrics.csv", "cv.csv", "runtime.csv", "chart.svg"}) {
        EXPECT_TRUE(std::filesystem::exists(path(std::string("report/") + f))) << f;
    }
    // Same inputs and seeds: same results.
    ASSERT_EQ(invoke({"experiment", "--spec", path("spec.toml"), "--out", path("report2")}).code, 0);
    EXPECT_TRUE(same_results(report, load_report(path("report2/report.json"))));
    EXPECT_EQ(read_file(path("report/metrics.csv")), read_file(path("report2/metrics.csv")));
}

TEST_F(CliTest, sampled_features_need_a_seed_and_are_thread_independent) {
    ASSERT_EQ(invoke({"generate", "--family", "tim", "--qubits", "3", "--count", "12", "--seed", "2", "--out", path("c.jsonl")}).code, 0);
    ASSERT_EQ(invoke({"label", "--in", path("c.jsonl"), "--out", path("l.jsonl")}).code, 0);
    EXPECT_EQ(invoke({"features", "--encoding", "shadow", "--in", path("l.jsonl"), "--out", path("s.csv")}).code, 1);
    ASSERT_EQ(invoke({"features", "--encoding", "combined", "--shots", "500", "--seed", "4", "--threads", "1", "--in",
                   path("l.jsonl"), "--out", path("a.csv")}).code, 0);
    ASSERT_EQ(invoke({"features", "--encoding", "combined", "--shots", "500", "--seed", "4", "--threads", "4", "--in",
                   path("l.jsonl"), "--out", path("b.csv")}).code, 0);
    EXPECT_EQ(read_file(path("a.csv")), read_file(path("b.csv")));
    EXPECT_EQ(invoke({"features", "--encoding", "shadow", "--mode", "exact", "--in", path("l.jsonl"), "--out", path("e.csv")}).code, 0);
}

TEST_F(CliTest, label_failures_are_reported_per_item) {
    ASSERT_EQ(invoke({"generate", "--family", "rqc", "--qubits", "2", "--count", "3", "--seed", "2", "--out", path("c.jsonl")}).code, 0);
    auto r = invoke({"label", "--in", path("c.jsonl"), "--out", path("l.jsonl")});
    EXPECT_EQ(r.code, 0);
    write_file(path("bad.jsonl"), read_file(path("c.jsonl")) + "{\"v\":1}\n");
    r = invoke({"label", "--in", path("bad.jsonl"), "--out", path("l2.jsonl")});
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.err.find("bad.jsonl:4"), std::string::npos);
}

TEST_F(CliTest, runtime_writes_a_report) {
    const auto r = invoke({"runtime", "--seed", "1", "--n-max", "3", "--samples", "3", "--train-rows", "30", "--models",
                        "rfr", "--out", path("rt")});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto report = load_report(path("rt/report.json"));
    EXPECT_EQ(report.runtime.size(), 2u);
    EXPECT_EQ(invoke({"runtime", "--out", path("rt2")}).code, 1);  // no seed
}
