#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gridswitch/errors.hpp"
#include "gridswitch/harness.hpp"
#include "helpers.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace gridswitch;
using namespace gridswitch::testing;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        path = fs::temp_directory_path() / ("gridswitch_" + tag);
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string write_two_bus_case(const TempDir& dir) {
    const std::string path = (dir.path / "case2.m").string();
    std::ofstream out(path);
    out << kTwoBusLossyCase;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    return std::string(std::istreambuf_iterator<char>(in), {});
}

RunConfig small_run(const std::string& case_path, const std::string& out_dir) {
    RunConfig config;
    config.case_path = case_path;
    config.episodes = 3;
    config.seeds = {1};
    config.env.horizon = 3;
    config.ddsac.hidden = 16;
    config.ddsac.batch_size = 4;
    config.ddqn.hidden = 16;
    config.ddqn.batch_size = 4;
    config.ppo.hidden = 16;
    config.ppo.rollout_length = 12;
    config.ppo.minibatch = 6;
    config.out_dir = out_dir;
    return config;
}

} // namespace

TEST_CASE("algo names round-trip and reject junk") {
    CHECK(parse_algo("ddsac") == Algo::Ddsac);
    CHECK(parse_algo("ddqn") == Algo::Ddqn);
    CHECK(parse_algo("ppo") == Algo::Ppo);
    CHECK(algo_name(Algo::Ppo) == "ppo");
    CHECK_THROWS_AS(parse_algo("dqn"), ConfigError);
}

TEST_CASE("run config validation") {
    RunConfig config;
    config.case_path = "x.m";
    config.episodes = 0;
    CHECK_THROWS_AS(validate_run_config(config), ConfigError);
    config.episodes = 5;
    config.seeds = {};
    CHECK_THROWS_AS(validate_run_config(config), ConfigError);
    config.seeds = {3, 3};
    CHECK_THROWS_AS(validate_run_config(config), ConfigError);
    config.seeds = {3, 4};
    CHECK_NOTHROW(validate_run_config(config));
}

TEST_CASE("json config parsing applies defaults and overrides") {
    RunConfig config = parse_run_config_json(R"({
        "case": "data/case118.m",
        "algo": "ppo",
        "episodes": 42,
        "seeds": [5, 6],
        "out": "runs/exp",
        "env": {"horizon": 7, "w2": 50.0, "w5": 0.25, "load_noise": 0.05},
        "agent": {"lr": 0.001, "clip": 0.3, "hidden": 64}
    })");
    CHECK(config.case_path == "data/case118.m");
    CHECK(config.algorithm == Algo::Ppo);
    CHECK(config.episodes == 42);
    CHECK(config.seeds == std::vector<std::uint64_t>{5, 6});
    CHECK(config.out_dir == "runs/exp");
    CHECK(config.env.horizon == 7);
    CHECK(config.env.w2 == 50.0);
    REQUIRE(config.env.w5.has_value());
    CHECK(*config.env.w5 == 0.25);
    CHECK(config.env.load_noise == 0.05);
    CHECK(config.ppo.lr == 0.001);
    CHECK(config.ppo.clip == 0.3);
    CHECK(config.ppo.hidden == 64);
    CHECK(config.ddsac.lr == 0.001);  // shared keys hit every agent

    // defaults reproduce the reference setup
    RunConfig defaults = parse_run_config_json(R"({"case": "x.m"})");
    CHECK(defaults.env.w1 == 0.1);
    CHECK(defaults.env.w2 == 100.0);
    CHECK(defaults.env.w3 == 1.0);
    CHECK(defaults.env.w4 == 0.1);
    CHECK(!defaults.env.w5.has_value());  // 10 / N_L at construction
    CHECK(defaults.env.v_max == 1.05);
    CHECK(defaults.env.v_min == 0.95);
    CHECK(defaults.ddsac.lr == 1e-4);
    CHECK(defaults.ddsac.gamma == 0.99);
    CHECK(defaults.ddsac.tau == 0.005);
    CHECK(defaults.ddsac.batch_size == 32);
    CHECK(defaults.ddsac.hidden == 256);
    CHECK(defaults.ddqn.epsilon_decay == 0.995);
    CHECK(defaults.ddqn.target_update_freq == 100);
    CHECK(defaults.ppo.clip == 0.2);
    CHECK(defaults.ppo.entropy_coef == 0.02);
    CHECK(defaults.seeds.size() == 10);

    CHECK_THROWS_AS(parse_run_config_json(R"({"caze": "x"})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config_json(R"({"agent": {"lrr": 1}})"), ConfigError);
    CHECK_THROWS_AS(parse_run_config_json("not json"), ConfigError);
}

TEST_CASE("training writes header plus one row per episode") {
    TempDir dir("train_rows");
    RunConfig config = small_run(write_two_bus_case(dir), dir.str());
    const std::string csv = run_training(config, 1);
    auto rows = read_metrics_csv(csv);
    CHECK(rows.size() == 3);
    for (int i = 0; i < 3; ++i) CHECK(rows[static_cast<std::size_t>(i)].episode == i);
    CHECK(fs::exists(checkpoint_file_path(dir.str(), 1)));

    const std::string text = slurp(csv);
    CHECK(text.rfind("episode,cumulative_reward,generator_cost,voltage_violation,"
                     "power_loss,line_overload,open_lines,penalties\n", 0) == 0);
}

TEST_CASE("identical config and seed give byte-identical CSVs") {
    TempDir dir("determinism");
    const std::string case_path = write_two_bus_case(dir);
    for (Algo algo : {Algo::Ddsac, Algo::Ddqn, Algo::Ppo}) {
        CAPTURE(algo_name(algo));
        RunConfig config = small_run(case_path, (dir.path / "a").string());
        config.algorithm = algo;
        const std::string first = slurp(run_training(config, 9));
        config.out_dir = (dir.path / "b").string();
        const std::string second = slurp(run_training(config, 9));
        CHECK(first == second);
    }
}

TEST_CASE("aggregation matches hand-computed mean and stderr") {
    // three seeds, two episodes, hand-built values
    std::vector<std::vector<double>> series = {{1.0, 10.0}, {2.0, 20.0}, {6.0, 30.0}};
    AggregateSeries agg = aggregate_series(series);
    REQUIRE(agg.mean.size() == 2);
    CHECK(std::abs(agg.mean[0] - 3.0) < 1e-12);
    CHECK(std::abs(agg.mean[1] - 20.0) < 1e-12);
    // sample stddev: sqrt(((1-3)^2 + (2-3)^2 + (6-3)^2) / 2) = sqrt(7)
    CHECK(std::abs(agg.stderr_values[0] - std::sqrt(7.0) / std::sqrt(3.0)) < 1e-12);
    CHECK(std::abs(agg.stderr_values[1] - 10.0 / std::sqrt(3.0)) < 1e-12);

    CHECK_THROWS_AS(aggregate_series({{1.0, 2.0}, {1.0}}), ConfigError);
}

TEST_CASE("multi-seed runs aggregate into per-metric files") {
    TempDir dir("multi");
    RunConfig config = small_run(write_two_bus_case(dir), dir.str());
    config.seeds = {1, 2, 3};
    auto written = run_multi_seed(config);
    CHECK(written.size() == kMetricNames.size());
    for (const std::string& path : written) {
        CAPTURE(path);
        CHECK(fs::exists(path));
        const std::string text = slurp(path);
        CHECK(text.rfind("episode,mean,stderr\n", 0) == 0);
        // header + 3 episodes
        CHECK(std::count(text.begin(), text.end(), '\n') == 4);
    }

    // constant metrics across seeds aggregate to stderr 0; with load_noise 0
    // every seed sees the same deterministic environment, but agent streams
    // differ, so just sanity-check the file re-parses
    auto again = aggregate_runs(dir.str());
    CHECK(again.size() == kMetricNames.size());
}

TEST_CASE("multi-seed rejects duplicate or lone seeds") {
    TempDir dir("badseeds");
    RunConfig config = small_run(write_two_bus_case(dir), dir.str());
    config.seeds = {2, 2};
    CHECK_THROWS_AS(run_multi_seed(config), ConfigError);
    config.seeds = {2};
    CHECK_THROWS_AS(run_multi_seed(config), ConfigError);
}

TEST_CASE("evaluation reports greedy means and checks dimensions") {
    TempDir dir("eval");
    RunConfig config = small_run(write_two_bus_case(dir), dir.str());
    run_training(config, 1);
    const std::string ckpt = checkpoint_file_path(dir.str(), 1);

    GridCase grid = parse_case(kTwoBusLossyCase);
    EnvConfig env_cfg;
    env_cfg.horizon = 3;
    EvaluationReport report = evaluate_policy(ckpt, grid, 4, env_cfg);
    CHECK(report.algo == "ddsac");
    CHECK(report.episodes == 4);
    CHECK(std::isfinite(report.mean_reward));

    // deterministic under a fixed seed
    EvaluationReport again = evaluate_policy(ckpt, grid, 4, env_cfg);
    CHECK(report.mean_reward == again.mean_reward);

    // wrong case dimensions are rejected
    GridCase ring = parse_case(kThreeBusRingCase);
    CHECK_THROWS_AS(evaluate_policy(ckpt, ring, 2, env_cfg), CheckpointMismatch);
}

TEST_CASE("case load failures carry their own error class") {
    RunConfig config;
    config.case_path = "/nonexistent/case.m";
    config.seeds = {1};
    CHECK_THROWS_AS(run_training(config, 1), CaseLoadError);

    // multi-seed child failures keep the class, with seed context attached
    config.seeds = {1, 2};
    CHECK_THROWS_AS(run_multi_seed(config), CaseLoadError);
    try {
        run_multi_seed(config);
    } catch (const CaseLoadError& e) {
        CHECK(std::string(e.what()).find("seed 1") != std::string::npos);
    }
}

TEST_CASE("metrics csv round-trips through the reader") {
    TempDir dir("csvrt");
    std::vector<EpisodeMetrics> rows(2);
    rows[0].episode = 0;
    rows[0].cumulative_reward = -1.25;
    rows[0].generator_cost = 3.5e-7;
    rows[0].open_lines = 2;
    rows[1].episode = 1;
    rows[1].cumulative_reward = -1000.0;
    rows[1].penalties = 1;
    const std::string path = (dir.path / "m.csv").string();
    write_metrics_csv(path, rows);
    auto back = read_metrics_csv(path);
    REQUIRE(back.size() == 2);
    CHECK(back[0].cumulative_reward == -1.25);
    CHECK(back[0].generator_cost == 3.5e-7);
    CHECK(back[0].open_lines == 2);
    CHECK(back[1].penalties == 1);
}
