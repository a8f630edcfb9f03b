#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "hyperlv/harness.hpp"

using namespace hyperlv;
namespace fs = std::filesystem;

namespace {

json benchmark_config(double k, int t) {
    const auto w = fixtures::w0();
    const auto z = fixtures::z0();
    return {{"model",
             {{"n", 10}, {"t", t}, {"k", k}, {"w", std::vector<double>(w.data(), w.data() + 10)}}},
            {"initial_state", std::vector<double>(z.data(), z.data() + 10)},
            {"integrator", {{"mode", "fixed"}, {"h", 1e-3}, {"T_max", 2000.0}, {"tol_conv", 1e-10}}},
            {"solver", {{"bisection_tol", 1e-12}, {"max_d", 0}, {"stability_margin", 1e-9}}},
            {"outputs", {{"trajectory_path", "traj.csv"}, {"report_path", "report.json"}, {"sample_stride", 50}}}};
}

class HarnessTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("hyperlv_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) + "_" +
                ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string write_config(const json& j, const std::string& name = "config.json") {
        const auto p = dir_ / name;
        std::ofstream(p) << j.dump(2);
        return p.string();
    }
    CommandOptions opts() {
        CommandOptions o;
        o.out_dir = dir_.string();
        o.quiet = true;
        o.log = &log_;
        o.err = &err_;
        return o;
    }
    static std::string slurp(const fs::path& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    fs::path dir_;
    std::ostringstream log_, err_;
};

}  // namespace

TEST(Config, RoundTripAndDefaults) {
    const auto cfg = config_from_json(benchmark_config(0.5, 3));
    validate(cfg, true);
    EXPECT_EQ(cfg.model.n, 10u);
    EXPECT_EQ(cfg.outputs.sample_stride, 50u);
    const auto again = config_from_json(config_to_json(cfg));
    EXPECT_EQ(config_to_json(again), config_to_json(cfg));
    EXPECT_EQ(config_hash(again), config_hash(cfg));

    json minimal = {{"model", {{"n", 2}, {"t", 3}, {"k", 0.5}, {"w", {1.0, 2.0}}}}};
    const auto m = config_from_json(minimal);
    validate(m, false);
    EXPECT_EQ(m.integrator.h, 1e-3);
    EXPECT_EQ(m.integrator.t_max, 2000.0);
    EXPECT_THROW(validate(m, true), ConfigError);
}

TEST(Config, HashIsFnv1a) {
    EXPECT_EQ(fnv1a(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a("a"), 0xaf63dc4c8601ec8cULL);
    auto a = benchmark_config(0.5, 3);
    auto b = benchmark_config(0.51, 3);
    EXPECT_NE(config_hash(config_from_json(a)), config_hash(config_from_json(b)));
}

TEST(Config, Diagnostics) {
    auto expect_error = [](const std::string& text, const std::string& needle) {
        try {
            parse_config_text(text, true);
            ADD_FAILURE() << "accepted: " << text;
        } catch (const ConfigError& e) {
            EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
        }
    };
    expect_error("{\n  \"model\": {\n    \"n\": 2,\n  }\n}", "line 4");
    expect_error(R"({"model": {"t": 3, "k": 0.5, "w": [1, 2]}})", "model.n");
    expect_error(R"({"model": {"n": 2, "t": "three", "k": 0.5, "w": [1, 2]}})", "model.t");
    expect_error(R"({"model": {"n": 3, "t": 3, "k": 0.5, "w": [1, 2]}, "initial_state": [1, 1, 1]})", "model.w");
    expect_error(R"({"model": {"n": 2, "t": 3, "k": 0.5, "w": [1, 2]}, "initial_state": [1]})", "initial_state");
    expect_error(R"({"model": {"n": 2, "t": 3, "k": 0.5, "w": [1, 2]}, "initial_state": [1, 0]})", "initial_state[1]");
    expect_error(R"({"model": {"n": 2, "t": 1, "k": 0.5, "w": [1, 2]}, "initial_state": [1, 1]})", "model.t");
    expect_error(R"({"model": {"n": 2, "t": 3, "k": 0, "w": [1, 2]}, "initial_state": [1, 1]})", "model.k");
    expect_error(R"({"model": {"n": 2, "t": 3, "k": 1, "w": [1, -2]}, "initial_state": [1, 1]})", "model.w[1]");
    expect_error(R"({"model": {"n": 2, "t": 3, "k": 1, "w": [1, 2]}, "initial_state": [1, 1],
                     "integrator": {"mode": "leapfrog"}})", "integrator.mode");
    expect_error(R"({"model": {"n": 2, "t": 3, "k": 1, "w": [1, 2]}, "initial_state": [1, 1],
                     "solver": {"max_d": 3}})", "max_d");
}

TEST(Report, JsonRoundTrip) {
    const auto m = fixtures::benchmark(3, 0.5);
    RunReport rep;
    rep.command = "simulate";
    const auto en = enumerate_equilibria(m);
    rep.equilibria = en.records;
    for (std::size_t d = 1; d <= 10; ++d) rep.certificates.push_back(existence_certificates(m, d));
    const auto tr = integrate(m, fixtures::z0());
    rep.outcome = classify_outcome(m, tr, rep.equilibria);
    rep.trajectory = TrajectorySummary{true, tr.final_time, tr.final_field_norm, tr.stats.steps, 0, std::nullopt,
                                       "fixed", tr.states.size()};
    rep.checks = {{"x", 1}};
    rep.provenance = {"abc", kToolVersion, 0.25, "2026-01-01T00:00:00Z"};
    const json j = to_json(rep);
    const RunReport back = report_from_json(j);
    EXPECT_EQ(to_json(back), j);
    EXPECT_EQ(back.outcome->winners, rep.outcome->winners);
    EXPECT_EQ(back.equilibria.size(), rep.equilibria.size());
    EXPECT_EQ(back.equilibria.back().z_star, rep.equilibria.back().z_star);
    // 1-based indices in the serialized form.
    EXPECT_EQ(j["outcome"]["winners"], json({6, 7}));
    const auto reparsed = report_from_json(json::parse(j.dump()));
    EXPECT_EQ(to_json(reparsed), j);
}

TEST(Report, InfiniteWinnerCountBoundIsNull) {
    const CompetitionModel flat(3, 0.5, Vector::Constant(3, 1.0));
    const auto j = to_json(existence_certificates(flat, 2));
    EXPECT_TRUE(j["winner_bound"]["bound"].is_null());
    EXPECT_FALSE(certificates_from_json(j).winner_bound.bound.has_value());
}

TEST(Csv, TrajectoryAndSweepFormats) {
    Trajectory tr;
    tr.times = {0.0, 0.5};
    tr.states = {Vector::Constant(2, 0.1), Vector::Constant(2, 0.25)};
    EXPECT_EQ(trajectory_csv(tr), "time,z_1,z_2\n0,0.1,0.1\n0.5,0.25,0.25\n");
    SweepCell c;
    c.k = 0.5;
    c.t = 3;
    c.outcome.label = Label::WSA;
    c.outcome.winners = {5, 6};
    c.max_final = 1.5;
    EXPECT_EQ(sweep_csv({c}), "k,t,label,winners,max_final\n0.5,3,WSA,6;7,1.5\n");
}

TEST_F(HarnessTest, SimulateWritesOutputsAndIsDeterministic) {
    const auto path = write_config(benchmark_config(1.0, 3));
    ASSERT_EQ(cmd_simulate(path, opts()), kExitOk) << err_.str();
    const auto csv = slurp(dir_ / "traj.csv");
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "time,z_1,z_2,z_3,z_4,z_5,z_6,z_7,z_8,z_9,z_10");
    auto first = json::parse(slurp(dir_ / "report.json"));
    EXPECT_EQ(first["outcome"]["label"], "WTA");
    EXPECT_EQ(first["outcome"]["winners"], json({7}));
    EXPECT_FALSE(fs::exists(dir_ / "report.json.tmp"));

    ASSERT_EQ(cmd_simulate(path, opts()), kExitOk);
    auto second = json::parse(slurp(dir_ / "report.json"));
    EXPECT_EQ(slurp(dir_ / "traj.csv"), csv);
    for (auto* r : {&first, &second}) {
        (*r)["provenance"].erase("wall_time_s");
        (*r)["provenance"].erase("timestamp");
    }
    EXPECT_EQ(first.dump(), second.dump());
}

TEST_F(HarnessTest, SimulateExitCodes) {
    auto cfg = benchmark_config(0.5, 3);
    cfg["integrator"]["T_max"] = 0.5;
    EXPECT_EQ(cmd_simulate(write_config(cfg), opts()), kExitNonConverged);
    EXPECT_EQ(json::parse(slurp(dir_ / "report.json"))["outcome"]["label"], "NONCONVERGED");
    EXPECT_EQ(cmd_simulate((dir_ / "missing.json").string(), opts()), kExitConfigError);
    std::ofstream(dir_ / "broken.json") << "{ not json";
    EXPECT_EQ(cmd_simulate((dir_ / "broken.json").string(), opts()), kExitConfigError);
    EXPECT_NE(err_.str().find("malformed"), std::string::npos);
}

TEST_F(HarnessTest, EquilibriaCommand) {
    const auto path = write_config(benchmark_config(1.5, 3));
    ASSERT_EQ(cmd_equilibria(path, opts()), kExitOk);
    const auto rep = json::parse(slurp(dir_ / "report.json"));
    std::vector<json> stable;
    for (const auto& e : rep["equilibria"]) {
        if (e["stability"] == "ASYMPTOTICALLY_STABLE") stable.push_back(e["winner_set"]);
    }
    EXPECT_EQ(stable, (std::vector<json>{json({6}), json({7})}));
    EXPECT_EQ(rep["certificates"].size(), 10u);
    EXPECT_NE(rep["winner_count_commentary"].get<std::string>().find("VWTA"), std::string::npos);
}

TEST_F(HarnessTest, SweepCommand) {
    const auto path = write_config(benchmark_config(1.0, 3));
    EXPECT_EQ(cmd_sweep(path, "", "2,3", opts()), kExitConfigError);
    EXPECT_EQ(cmd_sweep(path, "0.5,abc", "", opts()), kExitConfigError);
    ASSERT_EQ(cmd_sweep(path, "0.5, 1", "2,3", opts()), kExitOk) << err_.str();
    std::istringstream csv(slurp(dir_ / "sweep.csv"));
    std::vector<std::string> lines;
    for (std::string line; std::getline(csv, line);) lines.push_back(line);
    ASSERT_EQ(lines.size(), 5u);
    EXPECT_EQ(lines[0], "k,t,label,winners,max_final");
    const std::vector<std::string> prefixes{"0.5,2,WSA,6;7,", "0.5,3,WSA,6;7,", "1,2,WTA,7,", "1,3,WTA,7,"};
    for (std::size_t q = 0; q < 4; ++q) EXPECT_EQ(lines[q + 1].rfind(prefixes[q], 0), 0u) << lines[q + 1];
    EXPECT_NEAR(std::stod(lines[3].substr(prefixes[2].size())), 9.0, 1e-6);
}

TEST_F(HarnessTest, VerifyCommand) {
    for (double k : {1.0, 0.01, 1.5}) {
        const auto path = write_config(benchmark_config(k, 3));
        EXPECT_EQ(cmd_verify(path, opts()), kExitOk) << "k " << k << ": " << err_.str();
        const auto rep = json::parse(slurp(dir_ / "report.json"));
        EXPECT_EQ(rep["checks"]["jacobian_fd"]["status"], "passed");
        EXPECT_EQ(rep["checks"]["ratio_law"]["status"], k == 1.0 ? "passed" : "skipped");
        EXPECT_EQ(rep["checks"]["lyapunov"]["status"], k == 0.01 ? "passed" : "skipped");
    }
}
