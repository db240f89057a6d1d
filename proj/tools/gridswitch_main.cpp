#include "gridswitch/errors.hpp"
#include "gridswitch/harness.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <string>
#include <vector>

namespace {

// exit codes: 0 ok, 1 unexpected, 2 config, 3 case load, 4 I/O, 5 checkpoint
constexpr int kExitUnexpected = 1;
constexpr int kExitConfig = 2;
constexpr int kExitCaseLoad = 3;
constexpr int kExitIo = 4;
constexpr int kExitCheckpoint = 5;

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string token = text.substr(pos, comma - pos);
        if (!token.empty()) {
            try {
                seeds.push_back(std::stoull(token));
            } catch (const std::exception&) {
                throw gridswitch::ConfigError("bad seed: " + token);
            }
        }
        pos = comma + 1;
    }
    return seeds;
}

int run_train(const std::string& config_path, const std::string& case_path,
              const std::string& algo, int episodes, const std::string& seeds,
              const std::string& out_dir, int horizon, double load_noise) {
    using namespace gridswitch;
    RunConfig config;
    if (!config_path.empty()) config = load_run_config(config_path);
    // command-line flags override file values
    if (!case_path.empty()) config.case_path = case_path;
    if (!algo.empty()) config.algorithm = parse_algo(algo);
    if (episodes > 0) config.episodes = episodes;
    if (!seeds.empty()) config.seeds = parse_seed_list(seeds);
    if (!out_dir.empty()) config.out_dir = out_dir;
    if (horizon > 0) config.env.horizon = horizon;
    if (load_noise >= 0.0) config.env.load_noise = load_noise;

    validate_run_config(config);
    if (config.seeds.size() == 1) {
        run_training(config, config.seeds.front());
    } else {
        run_multi_seed(config);
    }
    return 0;
}

int run_evaluate(const std::string& checkpoint, const std::string& case_path,
                 int episodes, std::uint64_t seed, int horizon) {
    using namespace gridswitch;
    GridCase grid = load_case(case_path);
    auto issues = validate(grid);
    if (!issues.empty())
        throw CaseLoadError("case is not usable: " + issues.front().message);

    EnvConfig env_cfg;
    env_cfg.seed = seed;
    if (horizon > 0) env_cfg.horizon = horizon;
    EvaluationReport report = evaluate_policy(checkpoint, grid, episodes, env_cfg);
    std::printf("algo: %s\n", report.algo.c_str());
    std::printf("episodes: %d\n", report.episodes);
    std::printf("mean_reward: %.6f\n", report.mean_reward);
    std::printf("mean_generator_cost: %.6f\n", report.mean_generator_cost);
    std::printf("mean_voltage_violation: %.6f\n", report.mean_voltage_violation);
    std::printf("mean_power_loss: %.6f\n", report.mean_power_loss);
    std::printf("mean_line_overload: %.6f\n", report.mean_line_overload);
    std::printf("mean_open_lines: %.6f\n", report.mean_open_lines);
    std::printf("penalty_rate: %.6f\n", report.penalty_rate);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridswitch: reinforcement-learning transmission switching"};
    app.require_subcommand(1);

    // train
    auto* train = app.add_subcommand("train", "train an agent and write metrics CSVs");
    std::string t_config, t_case, t_algo, t_seeds, t_out;
    int t_episodes = 0, t_horizon = 0;
    double t_noise = -1.0;
    train->add_option("--config", t_config, "JSON config file");
    train->add_option("--case", t_case, "MATPOWER case file");
    train->add_option("--algo", t_algo, "ddsac | ddqn | ppo");
    train->add_option("--episodes", t_episodes, "training episodes");
    train->add_option("--seeds", t_seeds, "comma-separated seed list");
    train->add_option("--out", t_out, "output directory");
    train->add_option("--horizon", t_horizon, "steps per episode");
    train->add_option("--load-noise", t_noise, "uniform load noise half-width");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "greedy rollout of a checkpoint");
    std::string e_checkpoint, e_case;
    int e_episodes = 10, e_horizon = 0;
    std::uint64_t e_seed = 0;
    evaluate->add_option("--checkpoint", e_checkpoint, "checkpoint file")->required();
    evaluate->add_option("--case", e_case, "MATPOWER case file")->required();
    evaluate->add_option("--episodes", e_episodes, "evaluation episodes");
    evaluate->add_option("--seed", e_seed, "environment seed");
    evaluate->add_option("--horizon", e_horizon, "steps per episode");

    // aggregate
    auto* aggregate = app.add_subcommand("aggregate", "aggregate metrics_seed*.csv files");
    std::string a_dir;
    aggregate->add_option("--runs", a_dir, "directory of per-seed metrics")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed())
            return run_train(t_config, t_case, t_algo, t_episodes, t_seeds, t_out,
                             t_horizon, t_noise);
        if (evaluate->parsed())
            return run_evaluate(e_checkpoint, e_case, e_episodes, e_seed, e_horizon);
        if (aggregate->parsed()) {
            for (const std::string& path : gridswitch::aggregate_runs(a_dir))
                std::printf("%s\n", path.c_str());
            return 0;
        }
    } catch (const gridswitch::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kExitConfig;
    } catch (const gridswitch::CaseLoadError& e) {
        std::fprintf(stderr, "case error: %s\n", e.what());
        return kExitCaseLoad;
    } catch (const gridswitch::MalformedCase& e) {
        std::fprintf(stderr, "case error: %s\n", e.what());
        return kExitCaseLoad;
    } catch (const gridswitch::MissingSection& e) {
        std::fprintf(stderr, "case error: %s\n", e.what());
        return kExitCaseLoad;
    } catch (const gridswitch::DuplicateBusId& e) {
        std::fprintf(stderr, "case error: %s\n", e.what());
        return kExitCaseLoad;
    } catch (const gridswitch::CheckpointMismatch& e) {
        std::fprintf(stderr, "checkpoint error: %s\n", e.what());
        return kExitCheckpoint;
    } catch (const gridswitch::IoError& e) {
        std::fprintf(stderr, "i/o error: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUnexpected;
    }
    return 0;
}
