#pragma once

#include "gridswitch/checkpoint.hpp"
#include "gridswitch/environment.hpp"
#include "gridswitch/neuralnet.hpp"
#include "gridswitch/replay.hpp"
#include "gridswitch/rng.hpp"

#include <cstdint>
#include <vector>

namespace gridswitch {

enum class ActionMode { Stochastic, Greedy };

/// Entropy target of the discrete-action temperature controller:
/// 0.25 * ln(action_dim). Throws InvalidDim for action_dim < 2.
double target_entropy(std::size_t action_dim);

/// A mini-batch materialized from the replay buffer. States are stored
/// raw; standardization happens inside the agent at network input.
struct TransitionBatch {
    Eigen::MatrixXd states;       // obs_dim x batch
    Eigen::MatrixXd next_states;  // obs_dim x batch
    std::vector<int> actions;
    Eigen::VectorXd rewards;
    Eigen::VectorXd done;  // 1.0 terminal, 0.0 otherwise
};

struct DdsacConfig {
    std::size_t hidden = 256;
    double lr = 1e-4;
    double critic_lr = 0.0;  // 0: use lr
    double policy_lr = 0.0;  // 0: use lr
    double alpha_lr = 1e-4;
    double gamma = 0.99;
    double tau = 0.005;
    std::size_t batch_size = 32;
    std::size_t replay_capacity = 100000;
    int updates_per_episode = -1;  // -1: one update per collected step
    std::uint64_t seed = 0;
};

/// Discrete soft actor-critic with twin dueling critics, slow-moving
/// targets, a categorical policy and a learned temperature tracking the
/// entropy target.
class DdsacAgent {
public:
    DdsacAgent(std::size_t obs_dim, std::size_t action_dim, DdsacConfig config);

    std::size_t obs_dim() const { return obs_dim_; }
    std::size_t action_dim() const { return action_dim_; }
    double alpha() const { return std::exp(log_alpha_); }
    double log_alpha() const { return log_alpha_; }
    double entropy_target() const { return target_entropy_; }

    int select_action(const Eigen::VectorXd& raw_obs, ActionMode mode);

    /// Store a transition and fold its state into the running statistics.
    void observe(Transition t);

    TransitionBatch make_batch(const std::vector<std::size_t>& indices) const;
    TransitionBatch sample_batch();

    /// Soft bootstrap targets, one per batch column:
    /// y = r + (1 - done) * gamma * sum_a pi(a|s') [min_i Q_i'(s',a)
    ///       - alpha log pi(a|s')], the expectation taken exactly.
    Eigen::VectorXd compute_targets(const TransitionBatch& batch) const;

    struct CriticLosses {
        double loss1 = 0.0;
        double loss2 = 0.0;
    };
    CriticLosses update_critics(const TransitionBatch& batch);

    struct PolicyUpdate {
        double policy_loss = 0.0;
        double alpha_loss = 0.0;
        double entropy = 0.0;
    };
    PolicyUpdate update_policy_and_temperature(const TransitionBatch& batch);

    void soft_update_targets();

    /// One full pass of the training loop: roll the environment for a whole
    /// episode storing transitions, then run the configured number of
    /// update steps (critics, policy, temperature, target blend each).
    EpisodeSummary train_episode(Environment& env);

    void save(Checkpoint& ckpt) const;
    void restore(const Checkpoint& ckpt);

    // direct access for tests and evaluation tools
    Mlp& policy() { return policy_; }
    const Mlp& policy() const { return policy_; }
    DuelingNet& critic1() { return critic1_; }
    DuelingNet& critic2() { return critic2_; }
    DuelingNet& target1() { return target1_; }
    DuelingNet& target2() { return target2_; }
    ReplayBuffer& buffer() { return buffer_; }
    RunningStats& stats() { return stats_; }
    const DdsacConfig& config() const { return config_; }
    void set_log_alpha(double v) { log_alpha_ = v; }

private:
    Eigen::MatrixXd min_q(const Eigen::MatrixXd& states_std, const DuelingNet& a,
                          const DuelingNet& b) const;

    std::size_t obs_dim_;
    std::size_t action_dim_;
    DdsacConfig config_;
    double target_entropy_;

    Mlp policy_;
    DuelingNet critic1_, critic2_;
    DuelingNet target1_, target2_;
    double log_alpha_ = 0.0;

    AdamState opt_policy_, opt_critic1_, opt_critic2_;
    ScalarAdam opt_alpha_;

    ReplayBuffer buffer_;
    RunningStats stats_;
    Rng action_rng_;
};

} // namespace gridswitch
