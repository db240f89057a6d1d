#include "gridswitch/baselines.hpp"

#include "gridswitch/errors.hpp"
#include "gridswitch/serialize.hpp"

#include <cmath>

namespace gridswitch {

double ppo_clipped_objective(double ratio, double advantage, double clip) {
    const double clipped = std::clamp(ratio, 1.0 - clip, 1.0 + clip);
    return std::min(ratio * advantage, clipped * advantage);
}

PpoAgent::PpoAgent(std::size_t obs_dim, std::size_t action_dim, PpoConfig config)
    : obs_dim_(obs_dim),
      action_dim_(action_dim),
      config_(config),
      stats_(obs_dim),
      action_rng_(config.seed, Stream::action_sampler),
      shuffle_rng_(config.seed, Stream::shuffle) {
    Rng policy_rng(config.seed, Stream::policy_init);
    Rng value_rng(config.seed, Stream::value_init);
    policy_ = make_mlp({obs_dim, config.hidden, config.hidden, action_dim}, policy_rng);
    value_ = make_mlp({obs_dim, config.hidden, config.hidden, 1}, value_rng);
    opt_policy_ = AdamState::like(policy_.params(), config.lr);
    opt_value_ = AdamState::like(value_.params(), config.lr);
}

int PpoAgent::select_action(const Eigen::VectorXd& raw_obs, ActionMode mode) {
    SoftmaxResult sm =
        policy_forward(policy_, Eigen::MatrixXd(stats_.standardize(raw_obs)));
    const Eigen::VectorXd probs = sm.probs.col(0);
    if (mode == ActionMode::Greedy) {
        int best = 0;
        for (int a = 1; a < probs.size(); ++a)
            if (probs[a] > probs[best]) best = a;
        return best;
    }
    return static_cast<int>(action_rng_.categorical(probs));
}

PpoRollout PpoAgent::collect_and_estimate(Environment& env) {
    const std::size_t n = config_.rollout_length;
    PpoRollout roll;
    roll.states.resize(static_cast<Eigen::Index>(obs_dim_), static_cast<Eigen::Index>(n));
    roll.actions.resize(n);
    roll.rewards.resize(static_cast<Eigen::Index>(n));
    roll.dones.resize(static_cast<Eigen::Index>(n));
    roll.log_probs_old.resize(static_cast<Eigen::Index>(n));
    roll.values.resize(static_cast<Eigen::Index>(n));

    // the agent drives its environment exclusively: collection continues
    // the episode left open by the previous rollout, tracking the latest
    // observation itself
    if (!env.episode_open() || last_obs_.size() == 0) {
        last_obs_ = env.reset().values;
        partial_ = EpisodeSummary{};
    }
    Eigen::VectorXd obs = last_obs_;

    for (std::size_t t = 0; t < n; ++t) {
        const Eigen::VectorXd obs_std = stats_.standardize(obs);
        SoftmaxResult sm = policy_forward(policy_, Eigen::MatrixXd(obs_std));
        const int action = static_cast<int>(action_rng_.categorical(sm.probs.col(0)));
        const double v = mlp_forward(value_, obs_std, false)[0];

        StepResult r = env.step(action);
        partial_.add(r);
        stats_.update(obs);

        const Eigen::Index ti = static_cast<Eigen::Index>(t);
        roll.states.col(ti) = obs_std;
        roll.actions[t] = action;
        roll.rewards[ti] = r.reward;
        roll.dones[ti] = r.done ? 1.0 : 0.0;
        roll.log_probs_old[ti] =
            std::max(sm.log_probs(action, 0), std::log(1e-8));
        roll.values[ti] = v;

        if (r.done) {
            roll.completed.push_back(partial_);
            partial_ = EpisodeSummary{};
            obs = env.reset().values;
        } else {
            obs = r.observation.values;
        }
    }
    last_obs_ = obs;

    // bootstrap with V(s_N) unless the last stored step was terminal
    const double tail_value =
        roll.dones[static_cast<Eigen::Index>(n - 1)] != 0.0
            ? 0.0
            : mlp_forward(value_, stats_.standardize(obs), false)[0];

    roll.advantages.resize(static_cast<Eigen::Index>(n));
    roll.returns.resize(static_cast<Eigen::Index>(n));
    double adv_next = 0.0;
    for (std::size_t t = n; t-- > 0;) {
        const Eigen::Index ti = static_cast<Eigen::Index>(t);
        const double not_done = 1.0 - roll.dones[ti];
        const double v_next =
            t + 1 < n ? roll.values[static_cast<Eigen::Index>(t + 1)] : tail_value;
        const double delta = roll.rewards[ti] +
                             config_.gamma * not_done * v_next - roll.values[ti];
        adv_next = delta + config_.gamma * config_.gae_lambda * not_done * adv_next;
        roll.advantages[ti] = adv_next;
    }
    roll.returns = roll.advantages + roll.values;

    const double mean = roll.advantages.mean();
    const double var =
        (roll.advantages.array() - mean).square().sum() / static_cast<double>(n);
    roll.advantages = (roll.advantages.array() - mean) / (std::sqrt(var) + 1e-8);
    return roll;
}

PpoAgent::UpdateStats PpoAgent::update(const PpoRollout& rollout) {
    const std::size_t n = static_cast<std::size_t>(rollout.actions.size());
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    UpdateStats stats;
    int stat_batches = 0;
    for (int epoch = 0; epoch < config_.epochs; ++epoch) {
        shuffle_rng_.shuffle(order);
        for (std::size_t start = 0; start < n; start += config_.minibatch) {
            const std::size_t stop = std::min(n, start + config_.minibatch);
            const Eigen::Index b = static_cast<Eigen::Index>(stop - start);

            // rollout states are already standardized
            Eigen::MatrixXd states_std(static_cast<Eigen::Index>(obs_dim_), b);
            for (Eigen::Index j = 0; j < b; ++j)
                states_std.col(j) = rollout.states.col(
                    static_cast<Eigen::Index>(order[start + static_cast<std::size_t>(j)]));

            ForwardCache policy_cache, value_cache;
            SoftmaxResult pi = policy_forward(policy_, states_std, &policy_cache);
            Eigen::MatrixXd v = mlp_forward(value_, states_std, false, &value_cache);

            Eigen::MatrixXd d_logits =
                Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(action_dim_), b);
            Eigen::MatrixXd d_v = Eigen::MatrixXd::Zero(1, b);
            double policy_loss = 0.0, value_loss = 0.0, entropy_sum = 0.0;

            for (Eigen::Index j = 0; j < b; ++j) {
                const std::size_t i = order[start + static_cast<std::size_t>(j)];
                const Eigen::Index ii = static_cast<Eigen::Index>(i);
                const int a = rollout.actions[i];
                const double adv = rollout.advantages[ii];
                const double log_new = std::max(pi.log_probs(a, j), std::log(1e-8));
                const double ratio = std::exp(log_new - rollout.log_probs_old[ii]);
                policy_loss -= ppo_clipped_objective(ratio, adv, config_.clip);

                const bool clipped_out =
                    (adv >= 0.0 && ratio > 1.0 + config_.clip) ||
                    (adv < 0.0 && ratio < 1.0 - config_.clip);
                if (!clipped_out) {
                    // d(-ratio*adv)/dlogit_k = -ratio*adv*(1{k=a} - pi_k)
                    const double coef = -ratio * adv / static_cast<double>(b);
                    for (Eigen::Index k = 0; k < d_logits.rows(); ++k) {
                        const double indicator = k == a ? 1.0 : 0.0;
                        d_logits(k, j) += coef * (indicator - pi.probs(k, j));
                    }
                }

                // entropy bonus: L -= c_H * H; dH/dz_k = -pi_k (log pi_k + H)
                double h = 0.0;
                for (Eigen::Index k = 0; k < pi.probs.rows(); ++k)
                    h -= pi.probs(k, j) *
                         std::max(pi.log_probs(k, j), std::log(1e-8));
                entropy_sum += h;
                for (Eigen::Index k = 0; k < d_logits.rows(); ++k) {
                    const double log_k = std::max(pi.log_probs(k, j), std::log(1e-8));
                    d_logits(k, j) += config_.entropy_coef / static_cast<double>(b) *
                                      pi.probs(k, j) * (log_k + h);
                }

                const double verr = v(0, j) - rollout.returns[ii];
                value_loss += 0.5 * verr * verr;
                d_v(0, j) = config_.value_coef * verr / static_cast<double>(b);
            }

            GradientBundle pg = mlp_backward(policy_, policy_cache, d_logits, false);
            adam_step(policy_.params(), pg, opt_policy_);
            GradientBundle vg = mlp_backward(value_, value_cache, d_v, false);
            adam_step(value_.params(), vg, opt_value_);

            stats.policy_loss += policy_loss / static_cast<double>(b);
            stats.value_loss += value_loss / static_cast<double>(b);
            stats.entropy += entropy_sum / static_cast<double>(b);
            ++stat_batches;
        }
    }
    if (stat_batches > 0) {
        stats.policy_loss /= stat_batches;
        stats.value_loss /= stat_batches;
        stats.entropy /= stat_batches;
    }
    return stats;
}

void PpoAgent::save(Checkpoint& ckpt) const {
    ckpt.put_string("algo", "ppo");
    ckpt.put_int("obs_dim", static_cast<std::int64_t>(obs_dim_));
    ckpt.put_int("action_dim", static_cast<std::int64_t>(action_dim_));
    ckpt.put_int("hidden", static_cast<std::int64_t>(config_.hidden));
    put_layers(ckpt, "policy", policy_.params());
    put_layers(ckpt, "value", value_.params());
    put_adam(ckpt, "opt.policy", opt_policy_);
    put_adam(ckpt, "opt.value", opt_value_);
    put_stats(ckpt, "stats", stats_);
}

void PpoAgent::restore(const Checkpoint& ckpt) {
    if (ckpt.get_string("algo") != "ppo")
        throw CheckpointMismatch("checkpoint algo is not ppo");
    if (ckpt.get_int("obs_dim") != static_cast<std::int64_t>(obs_dim_) ||
        ckpt.get_int("action_dim") != static_cast<std::int64_t>(action_dim_))
        throw CheckpointMismatch("checkpoint dimensions do not match the case");
    get_layers(ckpt, "policy", policy_.params());
    get_layers(ckpt, "value", value_.params());
    get_adam(ckpt, "opt.policy", opt_policy_);
    get_adam(ckpt, "opt.value", opt_value_);
    get_stats(ckpt, "stats", stats_);
}

} // namespace gridswitch
