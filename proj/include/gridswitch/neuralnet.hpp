#pragma once

#include "gridswitch/rng.hpp"

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <vector>

namespace gridswitch {

/// One dense layer. Batched activations are matrices with one column per
/// sample throughout this module.
struct LayerParams {
    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;  // out

    std::size_t fan_in() const { return static_cast<std::size_t>(w.cols()); }
    std::size_t fan_out() const { return static_cast<std::size_t>(w.rows()); }
};

/// Per-layer gradients, shape-congruent with the owning network's layers.
struct GradientBundle {
    std::vector<LayerParams> layers;
};

/// Forward-pass cache consumed by the backward pass.
struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // input to each layer, in x batch
    std::vector<Eigen::MatrixXd> pre;     // affine outputs before activation
};

/// Plain MLP; rectified-linear after every layer except (optionally) the
/// last.
struct Mlp {
    std::vector<LayerParams> layers;

    std::size_t input_dim() const { return layers.front().fan_in(); }
    std::size_t output_dim() const { return layers.back().fan_out(); }
    std::vector<LayerParams*> params();
    std::vector<const LayerParams*> params() const;
};

/// Uniform fan-in initialization on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
LayerParams init_layer(std::size_t out, std::size_t in, Rng& rng);

/// widths = {input, hidden..., output}
Mlp make_mlp(const std::vector<std::size_t>& widths, Rng& rng);

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                            bool relu_output, ForwardCache* cache = nullptr);
Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input,
                            bool relu_output, ForwardCache* cache = nullptr);

/// Exact reverse-mode gradients for the cached forward pass. d_output is
/// dLoss/d(final affine output), including any batch-mean scaling.
GradientBundle mlp_backward(const Mlp& net, const ForwardCache& cache,
                            const Eigen::MatrixXd& d_output, bool relu_output,
                            Eigen::MatrixXd* d_input = nullptr);

/// Q-network split into a state-value stream and an action-advantage
/// stream: Q(s,a) = V(s) + A(s,a) - mean_a' A(s,a').
struct DuelingNet {
    Mlp trunk;  // rectified-linear after every trunk layer
    LayerParams value_head;      // -> 1
    LayerParams advantage_head;  // -> action_dim

    std::size_t input_dim() const { return trunk.input_dim(); }
    std::size_t action_dim() const { return advantage_head.fan_out(); }
    std::vector<LayerParams*> params();
    std::vector<const LayerParams*> params() const;
};

DuelingNet make_dueling(std::size_t state_dim, std::size_t hidden,
                        std::size_t action_dim, Rng& rng);

struct DuelingCache {
    ForwardCache trunk;
    Eigen::MatrixXd trunk_out;  // hidden x batch
    Eigen::MatrixXd value;      // 1 x batch
    Eigen::MatrixXd advantage;  // action_dim x batch
};

/// Q values, action_dim x batch.
Eigen::MatrixXd dueling_forward(const DuelingNet& net, const Eigen::MatrixXd& states,
                                DuelingCache* cache = nullptr);
Eigen::VectorXd dueling_forward(const DuelingNet& net, const Eigen::VectorXd& state);

/// Gradients w.r.t. every dueling parameter given dLoss/dQ. Layer order in
/// the bundle matches DuelingNet::params(): trunk layers, value head,
/// advantage head.
GradientBundle dueling_backward(const DuelingNet& net, const DuelingCache& cache,
                                const Eigen::MatrixXd& d_q);

struct SoftmaxResult {
    Eigen::MatrixXd probs;      // action_dim x batch, columns sum to 1
    Eigen::MatrixXd log_probs;  // consistent with probs, max-subtracted
};

/// Numerically stable softmax over logits columns.
SoftmaxResult stable_softmax(const Eigen::MatrixXd& logits);

/// Policy network: plain MLP to logits plus the softmax head.
SoftmaxResult policy_forward(const Mlp& net, const Eigen::MatrixXd& states,
                             ForwardCache* cache = nullptr);

/// Bias-corrected adaptive-moment optimizer state for one parameter list.
struct AdamState {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step_count = 0;
    std::vector<LayerParams> first_moment;   // same shapes as the parameters
    std::vector<LayerParams> second_moment;

    static AdamState like(const std::vector<const LayerParams*>& params, double lr);
    static AdamState like(const std::vector<LayerParams*>& params, double lr);
};

void adam_step(const std::vector<LayerParams*>& params, const GradientBundle& grads,
               AdamState& state);

/// Adam for a single scalar parameter (the temperature's log_alpha).
struct ScalarAdam {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step_count = 0;
    double m = 0.0;
    double v = 0.0;

    void step(double& param, double grad) {
        step_count += 1;
        m = beta1 * m + (1.0 - beta1) * grad;
        v = beta2 * v + (1.0 - beta2) * grad * grad;
        const double mh = m / (1.0 - std::pow(beta1, static_cast<double>(step_count)));
        const double vh = v / (1.0 - std::pow(beta2, static_cast<double>(step_count)));
        param -= lr * mh / (std::sqrt(vh) + epsilon);
    }
};

/// target <- tau * online + (1 - tau) * target, elementwise.
void soft_update(const std::vector<const LayerParams*>& online,
                 const std::vector<LayerParams*>& target, double tau);

void hard_copy(const std::vector<const LayerParams*>& from,
               const std::vector<LayerParams*>& to);

inline std::vector<const LayerParams*> as_const(const std::vector<LayerParams*>& v) {
    return {v.begin(), v.end()};
}

inline void soft_update(const std::vector<LayerParams*>& online,
                        const std::vector<LayerParams*>& target, double tau) {
    soft_update(as_const(online), target, tau);
}

inline void hard_copy(const std::vector<LayerParams*>& from,
                      const std::vector<LayerParams*>& to) {
    hard_copy(as_const(from), to);
}

} // namespace gridswitch
