#pragma once

#include "gridswitch/checkpoint.hpp"
#include "gridswitch/ddsac.hpp"
#include "gridswitch/environment.hpp"
#include "gridswitch/neuralnet.hpp"
#include "gridswitch/replay.hpp"

#include <cstdint>
#include <vector>

namespace gridswitch {

// ---------------------------------------------------------------- DDQN ----

struct DdqnConfig {
    std::size_t hidden = 256;
    double lr = 1e-4;
    double gamma = 0.99;
    double epsilon_start = 1.0;
    double epsilon_decay = 0.995;  // applied once per episode
    double epsilon_min = 0.05;
    int target_update_freq = 100;  // gradient steps between hard copies
    std::size_t batch_size = 32;
    std::size_t replay_capacity = 100000;
    int updates_per_episode = -1;  // -1: one update per collected step
    std::uint64_t seed = 0;
};

/// Double DQN: the online network selects the bootstrap action, the target
/// network evaluates it. Plain (non-dueling) Q head on the shared MLP core.
class DdqnAgent {
public:
    DdqnAgent(std::size_t obs_dim, std::size_t action_dim, DdqnConfig config);

    std::size_t obs_dim() const { return obs_dim_; }
    std::size_t action_dim() const { return action_dim_; }
    double epsilon() const { return epsilon_; }
    std::int64_t gradient_steps() const { return gradient_steps_; }

    /// Stochastic mode is epsilon-greedy over the online Q; greedy mode is
    /// the pure argmax (ties to the lowest index).
    int select_action(const Eigen::VectorXd& raw_obs, ActionMode mode);

    void observe(Transition t);
    TransitionBatch make_batch(const std::vector<std::size_t>& indices) const;
    TransitionBatch sample_batch();

    /// y = r + (1 - done) * gamma * Q_target(s', argmax_a Q_online(s', a)).
    Eigen::VectorXd compute_targets(const TransitionBatch& batch) const;

    /// One mean-squared-error step on the selected actions; hard-copies the
    /// target from the online net every target_update_freq gradient steps.
    double train_step(const TransitionBatch& batch);

    void decay_epsilon();

    EpisodeSummary train_episode(Environment& env);

    void save(Checkpoint& ckpt) const;
    void restore(const Checkpoint& ckpt);

    Mlp& online() { return online_; }
    Mlp& target() { return target_; }
    ReplayBuffer& buffer() { return buffer_; }
    RunningStats& stats() { return stats_; }
    const DdqnConfig& config() const { return config_; }

private:
    std::size_t obs_dim_;
    std::size_t action_dim_;
    DdqnConfig config_;
    Mlp online_, target_;
    AdamState opt_;
    double epsilon_;
    std::int64_t gradient_steps_ = 0;
    ReplayBuffer buffer_;
    RunningStats stats_;
    Rng explore_rng_;
};

// ----------------------------------------------------------------- PPO ----

struct PpoConfig {
    std::size_t hidden = 256;
    double lr = 1e-4;
    double gamma = 0.99;
    double clip = 0.2;
    double entropy_coef = 0.02;
    double value_coef = 0.5;
    double gae_lambda = 0.95;
    std::size_t rollout_length = 256;
    int epochs = 4;
    std::size_t minibatch = 64;
    std::uint64_t seed = 0;
};

/// On-policy rollout with generalized advantage estimates; advantages are
/// normalized to zero mean and unit variance per rollout. States are stored
/// exactly as the networks saw them (standardized at collection time), so
/// first-epoch probability ratios are exactly one.
struct PpoRollout {
    Eigen::MatrixXd states;  // obs_dim x N, standardized at collection
    std::vector<int> actions;
    Eigen::VectorXd rewards;
    Eigen::VectorXd dones;          // 1.0 where the episode ended at that step
    Eigen::VectorXd log_probs_old;  // log pi(a|s) at collection time
    Eigen::VectorXd values;         // V(s) at collection time
    Eigen::VectorXd advantages;     // normalized
    Eigen::VectorXd returns;        // advantage + value, pre-normalization
    std::vector<EpisodeSummary> completed;  // episodes finished while collecting
};

/// The clipped-surrogate objective term for one sample.
double ppo_clipped_objective(double ratio, double advantage, double clip);

class PpoAgent {
public:
    PpoAgent(std::size_t obs_dim, std::size_t action_dim, PpoConfig config);

    std::size_t obs_dim() const { return obs_dim_; }
    std::size_t action_dim() const { return action_dim_; }

    int select_action(const Eigen::VectorXd& raw_obs, ActionMode mode);

    /// Collect rollout_length steps, resetting the environment across
    /// episode boundaries, and attach GAE advantages and returns.
    PpoRollout collect_and_estimate(Environment& env);

    struct UpdateStats {
        double policy_loss = 0.0;
        double value_loss = 0.0;
        double entropy = 0.0;
    };
    /// epochs passes of shuffled minibatches over the rollout.
    UpdateStats update(const PpoRollout& rollout);

    void save(Checkpoint& ckpt) const;
    void restore(const Checkpoint& ckpt);

    Mlp& policy() { return policy_; }
    Mlp& value_net() { return value_; }
    RunningStats& stats() { return stats_; }
    const PpoConfig& config() const { return config_; }

private:
    double state_value(const Eigen::MatrixXd& states_std_col) const;

    std::size_t obs_dim_;
    std::size_t action_dim_;
    PpoConfig config_;
    Mlp policy_, value_;
    AdamState opt_policy_, opt_value_;
    RunningStats stats_;
    Rng action_rng_;
    Rng shuffle_rng_;
    EpisodeSummary partial_;   // episode spanning rollout boundaries
    Eigen::VectorXd last_obs_;  // latest observation of the driven episode
};

} // namespace gridswitch
