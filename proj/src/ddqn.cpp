#include "gridswitch/baselines.hpp"

#include "gridswitch/errors.hpp"
#include "gridswitch/serialize.hpp"

namespace gridswitch {

namespace {

int argmax_lowest(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

} // namespace

DdqnAgent::DdqnAgent(std::size_t obs_dim, std::size_t action_dim, DdqnConfig config)
    : obs_dim_(obs_dim),
      action_dim_(action_dim),
      config_(config),
      epsilon_(config.epsilon_start),
      buffer_(config.replay_capacity, config.seed, Stream::replay_sampler),
      stats_(obs_dim),
      explore_rng_(config.seed, Stream::exploration) {
    Rng init_rng(config.seed, Stream::policy_init);
    online_ = make_mlp({obs_dim, config.hidden, config.hidden, action_dim}, init_rng);
    target_ = online_;
    opt_ = AdamState::like(online_.params(), config.lr);
}

int DdqnAgent::select_action(const Eigen::VectorXd& raw_obs, ActionMode mode) {
    if (mode == ActionMode::Stochastic && explore_rng_.uniform() < epsilon_)
        return static_cast<int>(explore_rng_.uniform_index(action_dim_));
    Eigen::VectorXd q =
        mlp_forward(online_, stats_.standardize(raw_obs), /*relu_output=*/false);
    return argmax_lowest(q);
}

void DdqnAgent::observe(Transition t) {
    stats_.update(t.state);
    buffer_.push(std::move(t));
}

TransitionBatch DdqnAgent::make_batch(const std::vector<std::size_t>& indices) const {
    TransitionBatch batch;
    const Eigen::Index b = static_cast<Eigen::Index>(indices.size());
    batch.states.resize(static_cast<Eigen::Index>(obs_dim_), b);
    batch.next_states.resize(static_cast<Eigen::Index>(obs_dim_), b);
    batch.actions.resize(indices.size());
    batch.rewards.resize(b);
    batch.done.resize(b);
    for (Eigen::Index j = 0; j < b; ++j) {
        const Transition& t = buffer_.at(indices[static_cast<std::size_t>(j)]);
        batch.states.col(j) = t.state;
        batch.next_states.col(j) = t.next_state;
        batch.actions[static_cast<std::size_t>(j)] = t.action;
        batch.rewards[j] = t.reward;
        batch.done[j] = t.done ? 1.0 : 0.0;
    }
    return batch;
}

TransitionBatch DdqnAgent::sample_batch() {
    return make_batch(buffer_.sample_indices(config_.batch_size));
}

Eigen::VectorXd DdqnAgent::compute_targets(const TransitionBatch& batch) const {
    const Eigen::MatrixXd next_std = stats_.standardize_columns(batch.next_states);
    const Eigen::MatrixXd q_online = mlp_forward(online_, next_std, false);
    const Eigen::MatrixXd q_target = mlp_forward(target_, next_std, false);
    Eigen::VectorXd y(batch.rewards.size());
    for (Eigen::Index j = 0; j < y.size(); ++j) {
        const int a_star = argmax_lowest(q_online.col(j));  // online selects
        y[j] = batch.rewards[j] +
               (1.0 - batch.done[j]) * config_.gamma * q_target(a_star, j);
    }
    return y;
}

double DdqnAgent::train_step(const TransitionBatch& batch) {
    const Eigen::VectorXd y = compute_targets(batch);
    const Eigen::MatrixXd states_std = stats_.standardize_columns(batch.states);
    const Eigen::Index b = states_std.cols();

    ForwardCache cache;
    const Eigen::MatrixXd q = mlp_forward(online_, states_std, false, &cache);
    Eigen::MatrixXd d_q = Eigen::MatrixXd::Zero(q.rows(), q.cols());
    double loss = 0.0;
    for (Eigen::Index j = 0; j < b; ++j) {
        const Eigen::Index a = batch.actions[static_cast<std::size_t>(j)];
        const double diff = q(a, j) - y[j];
        loss += diff * diff;
        d_q(a, j) = 2.0 * diff / static_cast<double>(b);
    }
    loss /= static_cast<double>(b);
    GradientBundle grads = mlp_backward(online_, cache, d_q, false);
    adam_step(online_.params(), grads, opt_);

    ++gradient_steps_;
    if (gradient_steps_ % config_.target_update_freq == 0)
        hard_copy(online_.params(), target_.params());
    return loss;
}

void DdqnAgent::decay_epsilon() {
    epsilon_ = std::max(epsilon_ * config_.epsilon_decay, config_.epsilon_min);
}

EpisodeSummary DdqnAgent::train_episode(Environment& env) {
    EpisodeSummary summary;
    Eigen::VectorXd obs = env.reset().values;
    bool done = false;
    int collected = 0;
    while (!done) {
        const int action = select_action(obs, ActionMode::Stochastic);
        StepResult r = env.step(action);
        summary.add(r);
        observe({obs, action, r.reward, r.observation.values, r.done});
        obs = r.observation.values;
        done = r.done;
        ++collected;
    }
    const int updates = config_.updates_per_episode >= 0
                            ? config_.updates_per_episode
                            : collected;
    for (int u = 0; u < updates; ++u) {
        if (buffer_.size() < config_.batch_size) break;
        train_step(sample_batch());
    }
    decay_epsilon();
    return summary;
}

void DdqnAgent::save(Checkpoint& ckpt) const {
    ckpt.put_string("algo", "ddqn");
    ckpt.put_int("obs_dim", static_cast<std::int64_t>(obs_dim_));
    ckpt.put_int("action_dim", static_cast<std::int64_t>(action_dim_));
    ckpt.put_int("hidden", static_cast<std::int64_t>(config_.hidden));
    put_layers(ckpt, "online", online_.params());
    put_layers(ckpt, "target", target_.params());
    put_adam(ckpt, "opt", opt_);
    ckpt.put_scalar("epsilon", epsilon_);
    ckpt.put_int("gradient_steps", gradient_steps_);
    put_stats(ckpt, "stats", stats_);
}

void DdqnAgent::restore(const Checkpoint& ckpt) {
    if (ckpt.get_string("algo") != "ddqn")
        throw CheckpointMismatch("checkpoint algo is not ddqn");
    if (ckpt.get_int("obs_dim") != static_cast<std::int64_t>(obs_dim_) ||
        ckpt.get_int("action_dim") != static_cast<std::int64_t>(action_dim_))
        throw CheckpointMismatch("checkpoint dimensions do not match the case");
    get_layers(ckpt, "online", online_.params());
    get_layers(ckpt, "target", target_.params());
    get_adam(ckpt, "opt", opt_);
    epsilon_ = ckpt.get_scalar("epsilon");
    gradient_steps_ = ckpt.get_int("gradient_steps");
    get_stats(ckpt, "stats", stats_);
}

} // namespace gridswitch
