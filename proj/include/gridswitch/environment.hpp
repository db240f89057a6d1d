#pragma once

#include "gridswitch/case_model.hpp"
#include "gridswitch/powerflow.hpp"
#include "gridswitch/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <optional>
#include <vector>

namespace gridswitch {

/// Reward weights and episode settings. Weight defaults follow the
/// multi-objective setup this project targets; w5 falls back to 10 / N_L
/// when not set explicitly.
struct EnvConfig {
    double w1 = 0.1;    // generator cost delta
    double w2 = 100.0;  // voltage band violations
    double w3 = 1.0;    // thermal overloads
    double w4 = 0.1;    // active power losses
    std::optional<double> w5;  // open-line count; default 10 / N_L
    double penalty = 1000.0;   // R_e, islanding / divergence penalty
    double v_max = 1.05;       // pu
    double v_min = 0.95;       // pu
    int horizon = 10;          // steps per episode
    double load_noise = 0.0;   // uniform fractional half-width, 0 disables
    std::uint64_t seed = 0;
    PowerFlowOptions powerflow;
};

/// Slice layout of the flat observation vector:
/// [p_gen | v_mag | s_apparent | p_loss | p_load | line_status | t/T].
struct ObservationLayout {
    std::size_t n_gen = 0;
    std::size_t n_bus = 0;
    std::size_t n_line = 0;

    std::size_t size() const { return n_gen + 2 * n_bus + 3 * n_line + 1; }
    std::size_t p_gen_offset() const { return 0; }
    std::size_t v_mag_offset() const { return n_gen; }
    std::size_t s_apparent_offset() const { return n_gen + n_bus; }
    std::size_t p_loss_offset() const { return n_gen + n_bus + n_line; }
    std::size_t p_load_offset() const { return n_gen + n_bus + 2 * n_line; }
    std::size_t line_status_offset() const { return n_gen + 2 * n_bus + 2 * n_line; }
    std::size_t t_offset() const { return size() - 1; }

    bool operator==(const ObservationLayout&) const = default;
};

struct Observation {
    Eigen::VectorXd values;
    ObservationLayout layout;
};

/// Raw (unweighted) objective readings of one post-action state.
struct ObjectiveValues {
    double cost_delta = 0.0;         // $/h above the all-lines-in baseline
    double voltage_violation = 0.0;  // pu sum outside [v_min, v_max]
    double overload = 0.0;           // sum of (S/S_max - 1)+ over rated lines
    double loss_mw = 0.0;
    int open_lines = 0;
};

/// Weighted reward components; total is -penalty or -(sum of terms).
struct RewardBreakdown {
    double cost_term = 0.0;
    double voltage_term = 0.0;
    double overload_term = 0.0;
    double loss_term = 0.0;
    double open_lines_term = 0.0;
    bool penalty_applied = false;
    double total = 0.0;
};

struct StepInfo {
    bool converged = false;
    bool islanded = false;
    int iterations = 0;
};

struct StepResult {
    Observation observation;
    double reward = 0.0;
    bool done = false;
    RewardBreakdown breakdown;
    ObjectiveValues objectives;
    StepInfo info;
};

/// Per-episode accumulation of rewards and raw objective readings, the
/// basis of the training metrics rows.
struct EpisodeSummary {
    double cumulative_reward = 0.0;
    double cost_delta_sum = 0.0;
    double voltage_violation_sum = 0.0;
    double loss_mw_sum = 0.0;
    double overload_sum = 0.0;
    int open_lines_end = 0;
    int penalties = 0;
    int steps = 0;

    void add(const StepResult& r) {
        cumulative_reward += r.reward;
        steps += 1;
        open_lines_end = r.objectives.open_lines;
        if (r.breakdown.penalty_applied) {
            penalties += 1;
        } else {
            cost_delta_sum += r.objectives.cost_delta;
            voltage_violation_sum += r.objectives.voltage_violation;
            loss_mw_sum += r.objectives.loss_mw;
            overload_sum += r.objectives.overload;
        }
    }
};

/// Discrete action space: action 0 is a no-op, action k >= 1 toggles the
/// service status of line k-1.
std::size_t action_space_size(const GridCase& grid);

double effective_w5(const EnvConfig& config, std::size_t n_line);

ObjectiveValues objective_values(const GridCase& grid, const PowerFlowSolution& sol,
                                 const TopologyStatus& status, double baseline_cost,
                                 const EnvConfig& config);

/// Weighted reward for a converged, connected state. The penalty branch is
/// the caller's responsibility.
RewardBreakdown compute_reward(const GridCase& grid, const PowerFlowSolution& sol,
                               const TopologyStatus& status, double baseline_cost,
                               const EnvConfig& config);

/// Flat state encoding. Per-line apparent power is the larger of the two
/// line-end magnitudes; open and de-energized lines contribute zeros.
Observation encode_state(const GridCase& grid, const PowerFlowSolution& sol,
                         const std::vector<double>& p_load_mw,
                         const TopologyStatus& status, int t, int horizon);

/// The switching MDP: line-toggle actions on a fixed-dispatch AC grid with
/// the weighted multi-objective reward and a hard penalty on islanding or
/// solver divergence. Single-threaded; independent instances may run in
/// parallel.
class Environment {
public:
    Environment(GridCase grid, EnvConfig config);

    std::size_t action_space_size() const { return n_line_ + 1; }
    const ObservationLayout& layout() const { return layout_; }
    const GridCase& base_case() const { return base_case_; }
    const EnvConfig& config() const { return config_; }

    /// Start a new episode: all lines in service, loads drawn from the
    /// seeded stream (nominal when load_noise is 0), baseline cost taken
    /// from the all-lines-in solution. Throws InfeasibleBaseCase if that
    /// initial power flow fails.
    Observation reset();

    StepResult step(int action);

    bool episode_open() const { return episode_open_; }
    int t() const { return t_; }
    double baseline_cost() const { return baseline_cost_; }
    const TopologyStatus& status() const { return status_; }
    const GridCase& episode_case() const { return episode_case_; }

private:
    StepResult penalty_result(bool islanded, int iterations);

    GridCase base_case_;
    EnvConfig config_;
    std::size_t n_line_;
    ObservationLayout layout_;
    Rng rng_;

    GridCase episode_case_;  // base case with this episode's loads
    std::vector<double> p_load_mw_;
    TopologyStatus status_;
    double baseline_cost_ = 0.0;
    int t_ = 0;
    bool episode_open_ = false;
    Observation last_obs_;
};

} // namespace gridswitch
