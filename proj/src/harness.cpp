#include "gridswitch/harness.hpp"

#include "gridswitch/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <future>
#include <mutex>
#include <set>
#include <sstream>

namespace gridswitch {

namespace fs = std::filesystem;
using nlohmann::json;

// ------------------------------------------------------------- logging ----

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* raw = std::getenv("GRIDSWITCH_LOG");
        if (!raw) return LogLevel::Info;
        std::string v(raw);
        if (v == "quiet" || v == "0") return LogLevel::Quiet;
        if (v == "debug" || v == "2") return LogLevel::Debug;
        return LogLevel::Info;
    }();
    return level;
}

namespace {
std::mutex log_mutex;
void log_at(LogLevel at, const std::string& msg) {
    if (log_level() < at) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    std::fprintf(stderr, "[gridswitch] %s\n", msg.c_str());
}
} // namespace

void log_info(const std::string& msg) { log_at(LogLevel::Info, msg); }
void log_debug(const std::string& msg) { log_at(LogLevel::Debug, msg); }

// -------------------------------------------------------------- config ----

Algo parse_algo(const std::string& name) {
    if (name == "ddsac") return Algo::Ddsac;
    if (name == "ddqn") return Algo::Ddqn;
    if (name == "ppo") return Algo::Ppo;
    throw ConfigError("unknown algorithm: " + name + " (expected ddsac|ddqn|ppo)");
}

std::string algo_name(Algo algo) {
    switch (algo) {
        case Algo::Ddsac: return "ddsac";
        case Algo::Ddqn: return "ddqn";
        case Algo::Ppo: return "ppo";
    }
    return "?";
}

void validate_run_config(const RunConfig& config) {
    if (config.case_path.empty()) throw ConfigError("no case file given");
    if (config.episodes < 1) throw ConfigError("episodes must be >= 1");
    if (config.seeds.empty()) throw ConfigError("at least one seed required");
    std::set<std::uint64_t> unique(config.seeds.begin(), config.seeds.end());
    if (unique.size() != config.seeds.size())
        throw ConfigError("seeds must be distinct");
}

namespace {

[[noreturn]] void unknown_key(const std::string& where, const std::string& key) {
    throw ConfigError("unknown " + where + " key: " + key);
}

void apply_env_json(EnvConfig& env, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "w1") env.w1 = value.get<double>();
        else if (key == "w2") env.w2 = value.get<double>();
        else if (key == "w3") env.w3 = value.get<double>();
        else if (key == "w4") env.w4 = value.get<double>();
        else if (key == "w5") {
            if (value.is_null()) env.w5.reset();
            else env.w5 = value.get<double>();
        }
        else if (key == "penalty") env.penalty = value.get<double>();
        else if (key == "v_max") env.v_max = value.get<double>();
        else if (key == "v_min") env.v_min = value.get<double>();
        else if (key == "horizon") env.horizon = value.get<int>();
        else if (key == "load_noise") env.load_noise = value.get<double>();
        else if (key == "pf_tol") env.powerflow.tol = value.get<double>();
        else if (key == "pf_max_iter") env.powerflow.max_iter = value.get<int>();
        else unknown_key("env", key);
    }
}

void apply_agent_json(RunConfig& config, const json& j) {
    for (const auto& [key, value] : j.items()) {
        // shared core settings land on every agent struct
        if (key == "hidden") {
            config.ddsac.hidden = config.ddqn.hidden = config.ppo.hidden =
                value.get<std::size_t>();
        } else if (key == "lr") {
            config.ddsac.lr = config.ddqn.lr = config.ppo.lr = value.get<double>();
        } else if (key == "gamma") {
            config.ddsac.gamma = config.ddqn.gamma = config.ppo.gamma =
                value.get<double>();
        } else if (key == "batch_size") {
            config.ddsac.batch_size = config.ddqn.batch_size =
                value.get<std::size_t>();
        } else if (key == "replay_capacity") {
            config.ddsac.replay_capacity = config.ddqn.replay_capacity =
                value.get<std::size_t>();
        } else if (key == "updates_per_episode") {
            config.ddsac.updates_per_episode = config.ddqn.updates_per_episode =
                value.get<int>();
        } else if (key == "tau") {
            config.ddsac.tau = value.get<double>();
        } else if (key == "alpha_lr") {
            config.ddsac.alpha_lr = value.get<double>();
        } else if (key == "critic_lr") {
            config.ddsac.critic_lr = value.get<double>();
        } else if (key == "policy_lr") {
            config.ddsac.policy_lr = value.get<double>();
        } else if (key == "epsilon_start") {
            config.ddqn.epsilon_start = value.get<double>();
        } else if (key == "epsilon_decay") {
            config.ddqn.epsilon_decay = value.get<double>();
        } else if (key == "epsilon_min") {
            config.ddqn.epsilon_min = value.get<double>();
        } else if (key == "target_update_freq") {
            config.ddqn.target_update_freq = value.get<int>();
        } else if (key == "clip") {
            config.ppo.clip = value.get<double>();
        } else if (key == "entropy_coef") {
            config.ppo.entropy_coef = value.get<double>();
        } else if (key == "value_coef") {
            config.ppo.value_coef = value.get<double>();
        } else if (key == "gae_lambda") {
            config.ppo.gae_lambda = value.get<double>();
        } else if (key == "rollout_length") {
            config.ppo.rollout_length = value.get<std::size_t>();
        } else if (key == "epochs") {
            config.ppo.epochs = value.get<int>();
        } else if (key == "minibatch") {
            config.ppo.minibatch = value.get<std::size_t>();
        } else {
            unknown_key("agent", key);
        }
    }
}

} // namespace

RunConfig parse_run_config_json(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    RunConfig config;
    for (const auto& [key, value] : j.items()) {
        if (key == "case") config.case_path = value.get<std::string>();
        else if (key == "algo") config.algorithm = parse_algo(value.get<std::string>());
        else if (key == "episodes") config.episodes = value.get<int>();
        else if (key == "seeds") config.seeds = value.get<std::vector<std::uint64_t>>();
        else if (key == "out") config.out_dir = value.get<std::string>();
        else if (key == "env") apply_env_json(config.env, value);
        else if (key == "agent") apply_agent_json(config, value);
        else unknown_key("config", key);
    }
    return config;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_run_config_json(ss.str());
}

// ----------------------------------------------------------------- CSV ----

const char* const kMetricsHeader =
    "episode,cumulative_reward,generator_cost,voltage_violation,power_loss,"
    "line_overload,open_lines,penalties";

const std::vector<std::string> kMetricNames = {
    "cumulative_reward", "generator_cost", "voltage_violation", "power_loss",
    "line_overload",     "open_lines",     "penalties"};

EpisodeMetrics EpisodeMetrics::from_summary(int episode, const EpisodeSummary& s) {
    EpisodeMetrics m;
    m.episode = episode;
    m.cumulative_reward = s.cumulative_reward;
    m.generator_cost = s.cost_delta_sum;
    m.voltage_violation = s.voltage_violation_sum;
    m.power_loss = s.loss_mw_sum;
    m.line_overload = s.overload_sum;
    m.open_lines = s.open_lines_end;
    m.penalties = s.penalties;
    return m;
}

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double parse_double(const std::string& s, const std::string& path) {
    char* end = nullptr;
    double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str()) throw IoError("bad numeric field in " + path + ": " + s);
    return v;
}

} // namespace

void write_metrics_csv(const std::string& path, const std::vector<EpisodeMetrics>& rows) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write metrics file: " + path);
    out << kMetricsHeader << "\n";
    for (const EpisodeMetrics& m : rows) {
        out << m.episode << ',' << fmt_double(m.cumulative_reward) << ','
            << fmt_double(m.generator_cost) << ',' << fmt_double(m.voltage_violation)
            << ',' << fmt_double(m.power_loss) << ',' << fmt_double(m.line_overload)
            << ',' << m.open_lines << ',' << m.penalties << "\n";
    }
    if (!out) throw IoError("write failure on " + path);
}

std::vector<EpisodeMetrics> read_metrics_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read metrics file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty metrics file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kMetricsHeader)
        throw IoError("unexpected metrics header in " + path + ": " + line);

    std::vector<EpisodeMetrics> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 8)
            throw IoError("bad metrics row in " + path + ": " + line);
        EpisodeMetrics m;
        m.episode = static_cast<int>(parse_double(fields[0], path));
        m.cumulative_reward = parse_double(fields[1], path);
        m.generator_cost = parse_double(fields[2], path);
        m.voltage_violation = parse_double(fields[3], path);
        m.power_loss = parse_double(fields[4], path);
        m.line_overload = parse_double(fields[5], path);
        m.open_lines = static_cast<int>(parse_double(fields[6], path));
        m.penalties = static_cast<int>(parse_double(fields[7], path));
        rows.push_back(m);
    }
    return rows;
}

std::string metrics_csv_path(const std::string& out_dir, std::uint64_t seed) {
    return (fs::path(out_dir) / ("metrics_seed" + std::to_string(seed) + ".csv"))
        .string();
}

std::string checkpoint_file_path(const std::string& out_dir, std::uint64_t seed) {
    return (fs::path(out_dir) / ("checkpoint_seed" + std::to_string(seed) + ".gsckpt"))
        .string();
}

// ------------------------------------------------------------- training ----

namespace {

GridCase load_validated_case(const std::string& path) {
    GridCase grid = load_case(path);
    auto issues = validate(grid);
    if (!issues.empty())
        throw CaseLoadError("case " + path + " is not usable: " + issues.front().message);
    return grid;
}

double metric_value(const EpisodeMetrics& m, const std::string& name) {
    if (name == "cumulative_reward") return m.cumulative_reward;
    if (name == "generator_cost") return m.generator_cost;
    if (name == "voltage_violation") return m.voltage_violation;
    if (name == "power_loss") return m.power_loss;
    if (name == "line_overload") return m.line_overload;
    if (name == "open_lines") return m.open_lines;
    return m.penalties;
}

std::vector<EpisodeMetrics> train_one(const RunConfig& config, const GridCase& grid,
                                      std::uint64_t seed) {
    EnvConfig env_cfg = config.env;
    env_cfg.seed = seed;
    Environment env(grid, env_cfg);

    std::vector<EpisodeMetrics> rows;
    rows.reserve(static_cast<std::size_t>(config.episodes));

    Checkpoint ckpt;
    switch (config.algorithm) {
        case Algo::Ddsac: {
            DdsacConfig cfg = config.ddsac;
            cfg.seed = seed;
            DdsacAgent agent(env.layout().size(), env.action_space_size(), cfg);
            for (int ep = 0; ep < config.episodes; ++ep) {
                EpisodeSummary s = agent.train_episode(env);
                rows.push_back(EpisodeMetrics::from_summary(ep, s));
                log_debug("seed " + std::to_string(seed) + " episode " +
                          std::to_string(ep) + " reward " +
                          std::to_string(s.cumulative_reward));
            }
            agent.save(ckpt);
            break;
        }
        case Algo::Ddqn: {
            DdqnConfig cfg = config.ddqn;
            cfg.seed = seed;
            DdqnAgent agent(env.layout().size(), env.action_space_size(), cfg);
            for (int ep = 0; ep < config.episodes; ++ep) {
                EpisodeSummary s = agent.train_episode(env);
                rows.push_back(EpisodeMetrics::from_summary(ep, s));
            }
            agent.save(ckpt);
            break;
        }
        case Algo::Ppo: {
            PpoConfig cfg = config.ppo;
            cfg.seed = seed;
            PpoAgent agent(env.layout().size(), env.action_space_size(), cfg);
            while (rows.size() < static_cast<std::size_t>(config.episodes)) {
                PpoRollout roll = agent.collect_and_estimate(env);
                agent.update(roll);
                for (const EpisodeSummary& s : roll.completed) {
                    if (rows.size() >= static_cast<std::size_t>(config.episodes)) break;
                    rows.push_back(
                        EpisodeMetrics::from_summary(static_cast<int>(rows.size()), s));
                }
            }
            agent.save(ckpt);
            break;
        }
    }

    ckpt.put_string("case_path", config.case_path);
    const std::string ckpt_path = checkpoint_file_path(config.out_dir, seed);
    ckpt.save(ckpt_path);
    return rows;
}

} // namespace

std::string run_training(const RunConfig& config, std::uint64_t seed) {
    validate_run_config(config);
    GridCase grid = load_validated_case(config.case_path);

    std::error_code ec;
    fs::create_directories(config.out_dir, ec);
    if (ec) throw IoError("cannot create output directory " + config.out_dir);

    log_info("training " + algo_name(config.algorithm) + " on " + config.case_path +
             ", seed " + std::to_string(seed) + ", " +
             std::to_string(config.episodes) + " episodes");
    std::vector<EpisodeMetrics> rows = train_one(config, grid, seed);

    const std::string path = metrics_csv_path(config.out_dir, seed);
    write_metrics_csv(path, rows);
    log_info("wrote " + path);
    return path;
}

AggregateSeries aggregate_series(const std::vector<std::vector<double>>& per_seed) {
    AggregateSeries out;
    if (per_seed.empty()) return out;
    const std::size_t n_seeds = per_seed.size();
    const std::size_t n_rows = per_seed.front().size();
    for (const auto& series : per_seed)
        if (series.size() != n_rows)
            throw ConfigError("per-seed series lengths disagree");

    out.mean.resize(n_rows);
    out.stderr_values.resize(n_rows);
    for (std::size_t i = 0; i < n_rows; ++i) {
        double sum = 0.0;
        for (const auto& series : per_seed) sum += series[i];
        const double mean = sum / static_cast<double>(n_seeds);
        double ss = 0.0;
        for (const auto& series : per_seed) {
            const double d = series[i] - mean;
            ss += d * d;
        }
        const double stddev =
            n_seeds > 1 ? std::sqrt(ss / static_cast<double>(n_seeds - 1)) : 0.0;
        out.mean[i] = mean;
        out.stderr_values[i] = stddev / std::sqrt(static_cast<double>(n_seeds));
    }
    return out;
}

namespace {

std::vector<std::string> write_aggregates(
    const std::string& dir, const std::vector<std::vector<EpisodeMetrics>>& runs) {
    std::vector<std::string> written;
    for (const std::string& metric : kMetricNames) {
        std::vector<std::vector<double>> per_seed;
        for (const auto& rows : runs) {
            std::vector<double> series;
            series.reserve(rows.size());
            for (const auto& m : rows) series.push_back(metric_value(m, metric));
            per_seed.push_back(std::move(series));
        }
        AggregateSeries agg = aggregate_series(per_seed);
        const std::string path =
            (fs::path(dir) / ("aggregate_" + metric + ".csv")).string();
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write aggregate file: " + path);
        out << "episode,mean,stderr\n";
        for (std::size_t i = 0; i < agg.mean.size(); ++i)
            out << i << ',' << fmt_double(agg.mean[i]) << ','
                << fmt_double(agg.stderr_values[i]) << "\n";
        written.push_back(path);
    }
    return written;
}

} // namespace

std::vector<std::string> run_multi_seed(const RunConfig& config) {
    validate_run_config(config);
    if (config.seeds.size() < 2)
        throw ConfigError("multi-seed aggregation needs at least 2 seeds");

    // one future per seed; runs are fully independent
    std::vector<std::future<std::string>> futures;
    futures.reserve(config.seeds.size());
    for (std::uint64_t seed : config.seeds)
        futures.push_back(std::async(std::launch::async, [&config, seed]() {
            return run_training(config, seed);
        }));

    std::vector<std::vector<EpisodeMetrics>> runs;
    for (std::size_t i = 0; i < futures.size(); ++i) {
        // propagate the first child failure with seed context, keeping the
        // error class so exit codes stay meaningful
        const std::string ctx = "seed " + std::to_string(config.seeds[i]) + ": ";
        try {
            runs.push_back(read_metrics_csv(futures[i].get()));
        } catch (const ConfigError& e) {
            throw ConfigError(ctx + e.what());
        } catch (const IoError& e) {
            throw IoError(ctx + e.what());
        } catch (const CaseLoadError& e) {
            throw CaseLoadError(ctx + e.what());
        } catch (const Error& e) {
            throw CaseLoadError(ctx + e.what());
        }
    }
    return write_aggregates(config.out_dir, runs);
}

std::vector<std::string> aggregate_runs(const std::string& dir) {
    std::vector<fs::path> files;
    std::error_code ec;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("metrics_seed", 0) == 0 && name.size() > 4 &&
            name.substr(name.size() - 4) == ".csv")
            files.push_back(entry.path());
    }
    if (ec) throw IoError("cannot list directory " + dir);
    if (files.size() < 2)
        throw ConfigError("need at least 2 metrics_seed*.csv files in " + dir);
    std::sort(files.begin(), files.end());

    std::vector<std::vector<EpisodeMetrics>> runs;
    for (const auto& path : files) runs.push_back(read_metrics_csv(path.string()));
    return write_aggregates(dir, runs);
}

// ------------------------------------------------------------ evaluation ----

EvaluationReport evaluate_policy(const std::string& checkpoint_path,
                                 const GridCase& grid, int episodes,
                                 const EnvConfig& env_config) {
    if (episodes < 1) throw ConfigError("evaluation needs episodes >= 1");
    Checkpoint ckpt = Checkpoint::load(checkpoint_path);
    Environment env(grid, env_config);
    const std::size_t obs_dim = env.layout().size();
    const std::size_t act_dim = env.action_space_size();

    const std::string algo = ckpt.get_string("algo");
    auto greedy = [&](auto& agent) {
        EvaluationReport report;
        report.algo = algo;
        report.episodes = episodes;
        for (int ep = 0; ep < episodes; ++ep) {
            EpisodeSummary summary;
            Eigen::VectorXd obs = env.reset().values;
            bool done = false;
            while (!done) {
                StepResult r =
                    env.step(agent.select_action(obs, ActionMode::Greedy));
                summary.add(r);
                obs = r.observation.values;
                done = r.done;
            }
            report.mean_reward += summary.cumulative_reward;
            report.mean_generator_cost += summary.cost_delta_sum;
            report.mean_voltage_violation += summary.voltage_violation_sum;
            report.mean_power_loss += summary.loss_mw_sum;
            report.mean_line_overload += summary.overload_sum;
            report.mean_open_lines += summary.open_lines_end;
            if (summary.penalties > 0) report.penalty_rate += 1.0;
        }
        const double n = episodes;
        report.mean_reward /= n;
        report.mean_generator_cost /= n;
        report.mean_voltage_violation /= n;
        report.mean_power_loss /= n;
        report.mean_line_overload /= n;
        report.mean_open_lines /= n;
        report.penalty_rate /= n;
        return report;
    };

    const std::size_t hidden =
        ckpt.has("hidden") ? static_cast<std::size_t>(ckpt.get_int("hidden")) : 256;
    if (algo == "ddsac") {
        DdsacConfig cfg;
        cfg.hidden = hidden;
        DdsacAgent agent(obs_dim, act_dim, cfg);
        agent.restore(ckpt);
        return greedy(agent);
    }
    if (algo == "ddqn") {
        DdqnConfig cfg;
        cfg.hidden = hidden;
        DdqnAgent agent(obs_dim, act_dim, cfg);
        agent.restore(ckpt);
        return greedy(agent);
    }
    if (algo == "ppo") {
        PpoConfig cfg;
        cfg.hidden = hidden;
        PpoAgent agent(obs_dim, act_dim, cfg);
        agent.restore(ckpt);
        return greedy(agent);
    }
    throw CheckpointMismatch("unknown algo in checkpoint: " + algo);
}

} // namespace gridswitch
