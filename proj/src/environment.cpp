#include "gridswitch/environment.hpp"

#include "gridswitch/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gridswitch {

std::size_t action_space_size(const GridCase& grid) {
    return grid.n_branch() + 1;
}

double effective_w5(const EnvConfig& config, std::size_t n_line) {
    if (config.w5) return *config.w5;
    return n_line > 0 ? 10.0 / static_cast<double>(n_line) : 0.0;
}

ObjectiveValues objective_values(const GridCase& grid, const PowerFlowSolution& sol,
                                 const TopologyStatus& status, double baseline_cost,
                                 const EnvConfig& config) {
    ObjectiveValues out;
    out.cost_delta = generation_cost(grid, sol) - baseline_cost;

    for (std::size_t i = 0; i < grid.n_bus(); ++i) {
        const double v = sol.v_mag[i];
        if (v <= 0.0) continue;  // de-energized bus, no voltage to violate
        out.voltage_violation +=
            std::max(0.0, config.v_min - v) + std::max(0.0, v - config.v_max);
    }

    for (std::size_t k = 0; k < grid.n_branch(); ++k) {
        if (!status.in_service(k)) {
            ++out.open_lines;
            continue;
        }
        const double rate = grid.branches[k].rate_a;
        if (rate > 0.0) {
            const double s = std::max(std::abs(sol.s_from[k]), std::abs(sol.s_to[k]));
            out.overload += std::max(0.0, s / rate - 1.0);
        }
    }
    out.loss_mw = sol.total_loss;
    return out;
}

RewardBreakdown compute_reward(const GridCase& grid, const PowerFlowSolution& sol,
                               const TopologyStatus& status, double baseline_cost,
                               const EnvConfig& config) {
    const ObjectiveValues v = objective_values(grid, sol, status, baseline_cost, config);
    RewardBreakdown b;
    b.cost_term = config.w1 * v.cost_delta;
    b.voltage_term = config.w2 * v.voltage_violation;
    b.overload_term = config.w3 * v.overload;
    b.loss_term = config.w4 * v.loss_mw;
    b.open_lines_term = effective_w5(config, grid.n_branch()) * v.open_lines;
    b.penalty_applied = false;
    b.total = -(b.cost_term + b.voltage_term + b.overload_term + b.loss_term +
                b.open_lines_term);
    return b;
}

Observation encode_state(const GridCase& grid, const PowerFlowSolution& sol,
                         const std::vector<double>& p_load_mw,
                         const TopologyStatus& status, int t, int horizon) {
    ObservationLayout layout{grid.n_gen(), grid.n_bus(), grid.n_branch()};
    Observation obs;
    obs.layout = layout;
    obs.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(layout.size()));

    Eigen::Index at = 0;
    for (std::size_t g = 0; g < grid.n_gen(); ++g)
        obs.values[at++] = sol.p_gen_total[g];
    for (std::size_t i = 0; i < grid.n_bus(); ++i)
        obs.values[at++] = sol.v_mag[i];
    for (std::size_t k = 0; k < grid.n_branch(); ++k)
        obs.values[at++] = std::max(std::abs(sol.s_from[k]), std::abs(sol.s_to[k]));
    for (std::size_t k = 0; k < grid.n_branch(); ++k)
        obs.values[at++] = sol.p_loss_per_line[k];
    for (std::size_t i = 0; i < grid.n_bus(); ++i)
        obs.values[at++] = p_load_mw[i];
    for (std::size_t k = 0; k < grid.n_branch(); ++k)
        obs.values[at++] = status.in_service(k) ? 1.0 : 0.0;
    obs.values[at++] = horizon > 0 ? static_cast<double>(t) / horizon : 0.0;
    return obs;
}

Environment::Environment(GridCase grid, EnvConfig config)
    : base_case_(std::move(grid)),
      config_(config),
      n_line_(base_case_.n_branch()),
      layout_{base_case_.n_gen(), base_case_.n_bus(), base_case_.n_branch()},
      rng_(config.seed, Stream::env_loads),
      episode_case_(base_case_),
      status_(TopologyStatus::all_in(n_line_)) {
    auto issues = validate(base_case_);
    if (!issues.empty())
        throw InvalidCase("case fails validation: " + issues.front().message +
                          (issues.size() > 1 ? " (+more)" : ""));
    if (config_.horizon < 1) throw ConfigError("horizon must be >= 1");
    if (config_.load_noise < 0.0 || config_.load_noise >= 1.0)
        throw ConfigError("load_noise must be in [0, 1)");
    for (double w : {config_.w1, config_.w2, config_.w3, config_.w4})
        if (w < 0.0) throw ConfigError("reward weights must be >= 0");
    if (config_.w5 && *config_.w5 < 0.0)
        throw ConfigError("reward weights must be >= 0");
}

Observation Environment::reset() {
    episode_case_ = base_case_;
    if (config_.load_noise > 0.0) {
        for (Bus& bus : episode_case_.buses) {
            const double u = rng_.uniform(-config_.load_noise, config_.load_noise);
            bus.p_load *= 1.0 + u;
            bus.q_load *= 1.0 + u;
        }
    }
    p_load_mw_.resize(episode_case_.n_bus());
    for (std::size_t i = 0; i < episode_case_.n_bus(); ++i)
        p_load_mw_[i] = episode_case_.buses[i].p_load;

    status_ = TopologyStatus::all_in(n_line_);
    t_ = 0;

    if (!check_connectivity(episode_case_, status_).connected)
        throw InfeasibleBaseCase("base topology is not connected");
    PowerFlowSolution sol =
        solve_newton_raphson(episode_case_, status_, config_.powerflow);
    if (!sol.converged)
        throw InfeasibleBaseCase("initial power flow did not converge");

    baseline_cost_ = generation_cost(episode_case_, sol);
    episode_open_ = true;
    last_obs_ = encode_state(episode_case_, sol, p_load_mw_, status_, t_, config_.horizon);
    return last_obs_;
}

StepResult Environment::penalty_result(bool islanded, int iterations) {
    StepResult result;
    result.breakdown.penalty_applied = true;
    result.breakdown.total = -config_.penalty;
    result.reward = -config_.penalty;
    result.done = true;
    result.info = {false, islanded, iterations};
    for (std::size_t k = 0; k < n_line_; ++k)
        if (!status_.in_service(k)) ++result.objectives.open_lines;
    // no solved state exists; carry the previous physics forward with the
    // switching and clock slices refreshed (masked by done for learning)
    result.observation = last_obs_;
    Eigen::Index off = static_cast<Eigen::Index>(layout_.line_status_offset());
    for (std::size_t k = 0; k < n_line_; ++k)
        result.observation.values[off + static_cast<Eigen::Index>(k)] =
            status_.in_service(k) ? 1.0 : 0.0;
    result.observation.values[static_cast<Eigen::Index>(layout_.t_offset())] =
        static_cast<double>(t_) / config_.horizon;
    return result;
}

StepResult Environment::step(int action) {
    if (!episode_open_) throw EpisodeFinished();
    const int n_actions = static_cast<int>(action_space_size());
    if (action < 0 || action >= n_actions)
        throw ActionOutOfRange(action, n_actions);

    if (action > 0) {
        const std::size_t k = static_cast<std::size_t>(action - 1);
        status_.line_status[k] ^= 1;
    }
    ++t_;

    StepResult result;
    if (!check_connectivity(episode_case_, status_).connected) {
        result = penalty_result(true, 0);
    } else {
        PowerFlowSolution sol =
            solve_newton_raphson(episode_case_, status_, config_.powerflow);
        if (!sol.converged) {
            result = penalty_result(false, sol.iterations);
        } else {
            result.breakdown =
                compute_reward(episode_case_, sol, status_, baseline_cost_, config_);
            result.objectives =
                objective_values(episode_case_, sol, status_, baseline_cost_, config_);
            result.reward = result.breakdown.total;
            result.done = t_ >= config_.horizon;
            result.info = {true, false, sol.iterations};
            result.observation =
                encode_state(episode_case_, sol, p_load_mw_, status_, t_, config_.horizon);
            last_obs_ = result.observation;
        }
    }
    episode_open_ = !result.done;
    return result;
}

} // namespace gridswitch
