#pragma once

#include "gridswitch/baselines.hpp"
#include "gridswitch/ddsac.hpp"
#include "gridswitch/environment.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace gridswitch {

enum class Algo { Ddsac, Ddqn, Ppo };

Algo parse_algo(const std::string& name);  // ConfigError on unknown names
std::string algo_name(Algo algo);

/// One experiment: a case, an algorithm, and the seeds to run it under.
/// Table-style defaults are baked into the member configs, so a bare
/// case path reproduces the reference setup.
struct RunConfig {
    std::string case_path;
    Algo algorithm = Algo::Ddsac;
    int episodes = 200;
    std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    EnvConfig env;
    DdsacConfig ddsac;
    DdqnConfig ddqn;
    PpoConfig ppo;
    std::string out_dir = "runs";
};

/// Throws ConfigError unless episodes >= 1 and seeds are non-empty and
/// pairwise distinct.
void validate_run_config(const RunConfig& config);

/// Parse a JSON config document (flat keys plus "env" and "agent"
/// objects); unknown keys are ConfigErrors.
RunConfig parse_run_config_json(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

/// One metrics row per training episode; the CSV schema is fixed:
/// episode,cumulative_reward,generator_cost,voltage_violation,power_loss,
/// line_overload,open_lines,penalties
struct EpisodeMetrics {
    int episode = 0;
    double cumulative_reward = 0.0;
    double generator_cost = 0.0;     // $/h delta, summed over solved steps
    double voltage_violation = 0.0;  // pu sum over solved steps
    double power_loss = 0.0;         // MW sum over solved steps
    double line_overload = 0.0;      // overload fraction sum over solved steps
    int open_lines = 0;              // open-line count at episode end
    int penalties = 0;               // penalty steps in the episode

    static EpisodeMetrics from_summary(int episode, const EpisodeSummary& s);
};

extern const char* const kMetricsHeader;
extern const std::vector<std::string> kMetricNames;  // column names after "episode"

void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetrics>& rows);
std::vector<EpisodeMetrics> read_metrics_csv(const std::string& path);

std::string metrics_csv_path(const std::string& out_dir, std::uint64_t seed);
std::string checkpoint_file_path(const std::string& out_dir, std::uint64_t seed);

/// Train the configured agent for one seed; writes the per-episode metrics
/// CSV and a final checkpoint, returns the CSV path. Reruns with the same
/// config and seed produce byte-identical CSVs.
std::string run_training(const RunConfig& config, std::uint64_t seed);

/// Mean and standard error (sample stddev / sqrt(n)) across seeds.
struct AggregateSeries {
    std::vector<double> mean;
    std::vector<double> stderr_values;
};

AggregateSeries aggregate_series(const std::vector<std::vector<double>>& per_seed);

/// Run every seed (independent runs, executed in parallel), then write one
/// aggregate CSV per metric: aggregate_<metric>.csv with columns
/// episode,mean,stderr. Needs >= 2 distinct seeds. Returns written paths.
std::vector<std::string> run_multi_seed(const RunConfig& config);

/// Aggregate existing metrics_seed*.csv files found in a directory.
std::vector<std::string> aggregate_runs(const std::string& dir);

struct EvaluationReport {
    std::string algo;
    int episodes = 0;
    double mean_reward = 0.0;
    double mean_generator_cost = 0.0;
    double mean_voltage_violation = 0.0;
    double mean_power_loss = 0.0;
    double mean_line_overload = 0.0;
    double mean_open_lines = 0.0;
    double penalty_rate = 0.0;  // penalty episodes / episodes
};

/// Greedy rollouts of a trained checkpoint; never updates parameters.
/// Throws CheckpointMismatch if the checkpoint does not fit the case.
EvaluationReport evaluate_policy(const std::string& checkpoint_path,
                                 const GridCase& grid, int episodes,
                                 const EnvConfig& env_config);

/// GRIDSWITCH_LOG = quiet | info | debug (default info).
enum class LogLevel { Quiet = 0, Info = 1, Debug = 2 };
LogLevel log_level();
void log_info(const std::string& msg);
void log_debug(const std::string& msg);

} // namespace gridswitch
