#include "gridswitch/ddsac.hpp"

#include "gridswitch/errors.hpp"
#include "gridswitch/serialize.hpp"

#include <cmath>

namespace gridswitch {

namespace {

constexpr double kLogFloor = 1e-8;  // probabilities clamped inside logs

Eigen::MatrixXd clamped_log(const Eigen::MatrixXd& log_probs) {
    return log_probs.cwiseMax(std::log(kLogFloor));
}

} // namespace

double target_entropy(std::size_t action_dim) {
    if (action_dim < 2)
        throw InvalidDim("target entropy needs at least 2 actions, got " +
                         std::to_string(action_dim));
    return 0.25 * std::log(static_cast<double>(action_dim));
}

DdsacAgent::DdsacAgent(std::size_t obs_dim, std::size_t action_dim, DdsacConfig config)
    : obs_dim_(obs_dim),
      action_dim_(action_dim),
      config_(config),
      target_entropy_(target_entropy(action_dim)),
      buffer_(config.replay_capacity, config.seed, Stream::replay_sampler),
      stats_(obs_dim),
      action_rng_(config.seed, Stream::action_sampler) {
    Rng policy_rng(config.seed, Stream::policy_init);
    Rng c1_rng(config.seed, Stream::critic1_init);
    Rng c2_rng(config.seed, Stream::critic2_init);
    policy_ = make_mlp({obs_dim, config.hidden, config.hidden, action_dim}, policy_rng);
    critic1_ = make_dueling(obs_dim, config.hidden, action_dim, c1_rng);
    critic2_ = make_dueling(obs_dim, config.hidden, action_dim, c2_rng);
    target1_ = critic1_;
    target2_ = critic2_;
    const double policy_lr = config.policy_lr > 0.0 ? config.policy_lr : config.lr;
    const double critic_lr = config.critic_lr > 0.0 ? config.critic_lr : config.lr;
    opt_policy_ = AdamState::like(policy_.params(), policy_lr);
    opt_critic1_ = AdamState::like(critic1_.params(), critic_lr);
    opt_critic2_ = AdamState::like(critic2_.params(), critic_lr);
    opt_alpha_.lr = config.alpha_lr;
}

int DdsacAgent::select_action(const Eigen::VectorXd& raw_obs, ActionMode mode) {
    SoftmaxResult sm =
        policy_forward(policy_, Eigen::MatrixXd(stats_.standardize(raw_obs)));
    const Eigen::VectorXd probs = sm.probs.col(0);
    if (mode == ActionMode::Greedy) {
        int best = 0;
        for (int a = 1; a < probs.size(); ++a)
            if (probs[a] > probs[best]) best = a;  // ties keep the lowest index
        return best;
    }
    return static_cast<int>(action_rng_.categorical(probs));
}

void DdsacAgent::observe(Transition t) {
    stats_.update(t.state);
    buffer_.push(std::move(t));
}

TransitionBatch DdsacAgent::make_batch(const std::vector<std::size_t>& indices) const {
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

TransitionBatch DdsacAgent::sample_batch() {
    return make_batch(buffer_.sample_indices(config_.batch_size));
}

Eigen::MatrixXd DdsacAgent::min_q(const Eigen::MatrixXd& states_std,
                                  const DuelingNet& a, const DuelingNet& b) const {
    return dueling_forward(a, states_std).cwiseMin(dueling_forward(b, states_std));
}

Eigen::VectorXd DdsacAgent::compute_targets(const TransitionBatch& batch) const {
    const Eigen::MatrixXd next_std = stats_.standardize_columns(batch.next_states);
    const SoftmaxResult pi = policy_forward(policy_, next_std);
    const Eigen::MatrixXd q_min = min_q(next_std, target1_, target2_);
    const double alpha = std::exp(log_alpha_);
    // exact expectation over the discrete distribution, no action sampling
    const Eigen::MatrixXd inner = q_min - alpha * clamped_log(pi.log_probs);
    const Eigen::VectorXd soft_value =
        pi.probs.cwiseProduct(inner).colwise().sum().transpose();
    return batch.rewards.array() +
           (1.0 - batch.done.array()) * config_.gamma * soft_value.array();
}

DdsacAgent::CriticLosses DdsacAgent::update_critics(const TransitionBatch& batch) {
    const Eigen::VectorXd y = compute_targets(batch);  // constant w.r.t. critics
    const Eigen::MatrixXd states_std = stats_.standardize_columns(batch.states);
    const Eigen::Index b = states_std.cols();

    CriticLosses losses;
    auto update_one = [&](DuelingNet& critic, AdamState& opt) {
        DuelingCache cache;
        const Eigen::MatrixXd q = dueling_forward(critic, states_std, &cache);
        Eigen::MatrixXd d_q = Eigen::MatrixXd::Zero(q.rows(), q.cols());
        double loss = 0.0;
        for (Eigen::Index j = 0; j < b; ++j) {
            const Eigen::Index a = batch.actions[static_cast<std::size_t>(j)];
            const double diff = q(a, j) - y[j];
            loss += diff * diff;
            d_q(a, j) = 2.0 * diff / static_cast<double>(b);
        }
        loss /= static_cast<double>(b);
        GradientBundle grads = dueling_backward(critic, cache, d_q);
        adam_step(critic.params(), grads, opt);
        return loss;
    };
    losses.loss1 = update_one(critic1_, opt_critic1_);
    losses.loss2 = update_one(critic2_, opt_critic2_);
    return losses;
}

DdsacAgent::PolicyUpdate DdsacAgent::update_policy_and_temperature(
    const TransitionBatch& batch) {
    const Eigen::MatrixXd states_std = stats_.standardize_columns(batch.states);
    const Eigen::Index b = states_std.cols();
    const double alpha = std::exp(log_alpha_);

    ForwardCache cache;
    const SoftmaxResult pi = policy_forward(policy_, states_std, &cache);
    const Eigen::MatrixXd log_pi = clamped_log(pi.log_probs);
    const Eigen::MatrixXd q_min = min_q(states_std, critic1_, critic2_);  // constant

    // L = mean_j sum_a pi(a|s_j) [alpha log pi(a|s_j) - Qmin(s_j, a)]
    const Eigen::MatrixXd f = alpha * log_pi - q_min;
    const Eigen::RowVectorXd f_mean = pi.probs.cwiseProduct(f).colwise().sum();
    const double policy_loss = f_mean.mean();

    // d L / d logits_k = pi_k (f_k - E_pi[f]) / batch
    Eigen::MatrixXd d_logits =
        pi.probs.cwiseProduct(f.rowwise() - f_mean) / static_cast<double>(b);
    GradientBundle grads = mlp_backward(policy_, cache, d_logits, false);
    adam_step(policy_.params(), grads, opt_policy_);

    // temperature: L(alpha) = mean_j -alpha * sum_a pi(a|s_j)[log pi + H_target],
    // with the policy treated as constant; gradient taken w.r.t. log alpha
    const Eigen::RowVectorXd entropy =
        -(pi.probs.cwiseProduct(log_pi)).colwise().sum();
    const double mean_entropy = entropy.mean();
    const double alpha_loss = alpha * (mean_entropy - target_entropy_);
    const double d_log_alpha = alpha * (mean_entropy - target_entropy_);
    opt_alpha_.step(log_alpha_, d_log_alpha);

    return {policy_loss, alpha_loss, mean_entropy};
}

void DdsacAgent::soft_update_targets() {
    soft_update(critic1_.params(), target1_.params(), config_.tau);
    soft_update(critic2_.params(), target2_.params(), config_.tau);
}

EpisodeSummary DdsacAgent::train_episode(Environment& env) {
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
        if (buffer_.size() < config_.batch_size) break;  // warm-up
        TransitionBatch batch = sample_batch();
        update_critics(batch);
        update_policy_and_temperature(batch);
        soft_update_targets();
    }
    return summary;
}

void DdsacAgent::save(Checkpoint& ckpt) const {
    ckpt.put_string("algo", "ddsac");
    ckpt.put_int("obs_dim", static_cast<std::int64_t>(obs_dim_));
    ckpt.put_int("action_dim", static_cast<std::int64_t>(action_dim_));
    ckpt.put_int("hidden", static_cast<std::int64_t>(config_.hidden));
    put_layers(ckpt, "policy", policy_.params());
    put_layers(ckpt, "critic1", critic1_.params());
    put_layers(ckpt, "critic2", critic2_.params());
    put_layers(ckpt, "target1", target1_.params());
    put_layers(ckpt, "target2", target2_.params());
    ckpt.put_scalar("log_alpha", log_alpha_);
    put_adam(ckpt, "opt.policy", opt_policy_);
    put_adam(ckpt, "opt.critic1", opt_critic1_);
    put_adam(ckpt, "opt.critic2", opt_critic2_);
    put_scalar_adam(ckpt, "opt.alpha", opt_alpha_);
    put_stats(ckpt, "stats", stats_);
}

void DdsacAgent::restore(const Checkpoint& ckpt) {
    if (ckpt.get_string("algo") != "ddsac")
        throw CheckpointMismatch("checkpoint algo is not ddsac");
    if (ckpt.get_int("obs_dim") != static_cast<std::int64_t>(obs_dim_) ||
        ckpt.get_int("action_dim") != static_cast<std::int64_t>(action_dim_))
        throw CheckpointMismatch("checkpoint dimensions do not match the case");
    get_layers(ckpt, "policy", policy_.params());
    get_layers(ckpt, "critic1", critic1_.params());
    get_layers(ckpt, "critic2", critic2_.params());
    get_layers(ckpt, "target1", target1_.params());
    get_layers(ckpt, "target2", target2_.params());
    log_alpha_ = ckpt.get_scalar("log_alpha");
    get_adam(ckpt, "opt.policy", opt_policy_);
    get_adam(ckpt, "opt.critic1", opt_critic1_);
    get_adam(ckpt, "opt.critic2", opt_critic2_);
    get_scalar_adam(ckpt, "opt.alpha", opt_alpha_);
    get_stats(ckpt, "stats", stats_);
}

} // namespace gridswitch
