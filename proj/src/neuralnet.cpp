#include "gridswitch/neuralnet.hpp"

#include "gridswitch/errors.hpp"

#include <cmath>

namespace gridswitch {

namespace {

void check_input(const LayerParams& layer, const Eigen::MatrixXd& input) {
    if (input.rows() != layer.w.cols())
        throw ShapeMismatch("layer expects " + std::to_string(layer.w.cols()) +
                            " inputs, got " + std::to_string(input.rows()));
}

Eigen::MatrixXd affine(const LayerParams& layer, const Eigen::MatrixXd& input) {
    return (layer.w * input).colwise() + layer.b;
}

} // namespace

std::vector<LayerParams*> Mlp::params() {
    std::vector<LayerParams*> out;
    for (auto& l : layers) out.push_back(&l);
    return out;
}

std::vector<const LayerParams*> Mlp::params() const {
    std::vector<const LayerParams*> out;
    for (const auto& l : layers) out.push_back(&l);
    return out;
}

LayerParams init_layer(std::size_t out, std::size_t in, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    LayerParams layer;
    layer.w.resize(static_cast<Eigen::Index>(out), static_cast<Eigen::Index>(in));
    layer.b.resize(static_cast<Eigen::Index>(out));
    for (Eigen::Index r = 0; r < layer.w.rows(); ++r)
        for (Eigen::Index c = 0; c < layer.w.cols(); ++c)
            layer.w(r, c) = rng.uniform(-bound, bound);
    for (Eigen::Index r = 0; r < layer.b.size(); ++r)
        layer.b[r] = rng.uniform(-bound, bound);
    return layer;
}

Mlp make_mlp(const std::vector<std::size_t>& widths, Rng& rng) {
    Mlp net;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l)
        net.layers.push_back(init_layer(widths[l + 1], widths[l], rng));
    return net;
}

Eigen::MatrixXd mlp_forward(const Mlp& net, const Eigen::MatrixXd& input,
                            bool relu_output, ForwardCache* cache) {
    if (cache) {
        cache->inputs.clear();
        cache->pre.clear();
    }
    Eigen::MatrixXd x = input;
    for (std::size_t l = 0; l < net.layers.size(); ++l) {
        check_input(net.layers[l], x);
        Eigen::MatrixXd z = affine(net.layers[l], x);
        if (cache) {
            cache->inputs.push_back(std::move(x));
            cache->pre.push_back(z);
        }
        const bool relu = relu_output || l + 1 < net.layers.size();
        x = relu ? z.cwiseMax(0.0) : std::move(z);
    }
    return x;
}

Eigen::VectorXd mlp_forward(const Mlp& net, const Eigen::VectorXd& input,
                            bool relu_output, ForwardCache* cache) {
    return mlp_forward(net, Eigen::MatrixXd(input), relu_output, cache).col(0);
}

GradientBundle mlp_backward(const Mlp& net, const ForwardCache& cache,
                            const Eigen::MatrixXd& d_output, bool relu_output,
                            Eigen::MatrixXd* d_input) {
    if (cache.inputs.size() != net.layers.size() ||
        cache.pre.size() != net.layers.size())
        throw StaleCache("cache depth does not match the network");
    if (d_output.rows() != net.layers.back().w.rows() ||
        (!cache.pre.empty() && d_output.cols() != cache.pre.back().cols()))
        throw StaleCache("output gradient shape does not match the cache");

    GradientBundle grads;
    grads.layers.resize(net.layers.size());

    Eigen::MatrixXd dz;
    for (std::size_t li = net.layers.size(); li-- > 0;) {
        const bool relu = relu_output || li + 1 < net.layers.size();
        if (li + 1 == net.layers.size()) {
            dz = d_output;
        }  // else dz already propagated below
        if (relu)
            dz = dz.cwiseProduct(
                (cache.pre[li].array() > 0.0).cast<double>().matrix());
        grads.layers[li].w.noalias() = dz * cache.inputs[li].transpose();
        grads.layers[li].b = dz.rowwise().sum();
        if (li > 0 || d_input) {
            Eigen::MatrixXd prev = net.layers[li].w.transpose() * dz;
            if (li == 0) {
                if (d_input) *d_input = std::move(prev);
            } else {
                dz = std::move(prev);
            }
        }
    }
    return grads;
}

std::vector<LayerParams*> DuelingNet::params() {
    auto out = trunk.params();
    out.push_back(&value_head);
    out.push_back(&advantage_head);
    return out;
}

std::vector<const LayerParams*> DuelingNet::params() const {
    auto out = trunk.params();
    out.push_back(&value_head);
    out.push_back(&advantage_head);
    return out;
}

DuelingNet make_dueling(std::size_t state_dim, std::size_t hidden,
                        std::size_t action_dim, Rng& rng) {
    DuelingNet net;
    net.trunk = make_mlp({state_dim, hidden, hidden}, rng);
    net.value_head = init_layer(1, hidden, rng);
    net.advantage_head = init_layer(action_dim, hidden, rng);
    return net;
}

Eigen::MatrixXd dueling_forward(const DuelingNet& net, const Eigen::MatrixXd& states,
                                DuelingCache* cache) {
    ForwardCache local;
    ForwardCache* trunk_cache = cache ? &cache->trunk : &local;
    Eigen::MatrixXd h = mlp_forward(net.trunk, states, /*relu_output=*/true, trunk_cache);
    check_input(net.value_head, h);
    Eigen::MatrixXd v = affine(net.value_head, h);       // 1 x B
    Eigen::MatrixXd a = affine(net.advantage_head, h);   // A x B
    Eigen::RowVectorXd a_mean = a.colwise().mean();
    Eigen::MatrixXd q = a;
    q.rowwise() -= a_mean;
    q.rowwise() += v.row(0);
    if (cache) {
        cache->trunk_out = std::move(h);
        cache->value = std::move(v);
        cache->advantage = std::move(a);
    }
    return q;
}

Eigen::VectorXd dueling_forward(const DuelingNet& net, const Eigen::VectorXd& state) {
    return dueling_forward(net, Eigen::MatrixXd(state), nullptr).col(0);
}

GradientBundle dueling_backward(const DuelingNet& net, const DuelingCache& cache,
                                const Eigen::MatrixXd& d_q) {
    if (d_q.rows() != net.advantage_head.w.rows() ||
        d_q.cols() != cache.trunk_out.cols())
        throw StaleCache("dQ shape does not match the cache");

    // Q = V + A - mean(A):  dV = sum_a dQ_a,  dA = dQ - mean_a dQ
    Eigen::RowVectorXd d_v = d_q.colwise().sum();
    Eigen::MatrixXd d_a = d_q;
    d_a.rowwise() -= Eigen::RowVectorXd(d_q.colwise().mean());

    GradientBundle grads;
    grads.layers.resize(net.trunk.layers.size() + 2);

    LayerParams& gv = grads.layers[net.trunk.layers.size()];
    gv.w = d_v * cache.trunk_out.transpose();
    gv.b = Eigen::VectorXd::Constant(1, d_v.sum());

    LayerParams& ga = grads.layers[net.trunk.layers.size() + 1];
    ga.w.noalias() = d_a * cache.trunk_out.transpose();
    ga.b = d_a.rowwise().sum();

    Eigen::MatrixXd d_h = net.value_head.w.transpose() * d_v +
                          net.advantage_head.w.transpose() * d_a;
    GradientBundle trunk_grads =
        mlp_backward(net.trunk, cache.trunk, d_h, /*relu_output=*/true);
    for (std::size_t l = 0; l < trunk_grads.layers.size(); ++l)
        grads.layers[l] = std::move(trunk_grads.layers[l]);
    return grads;
}

SoftmaxResult stable_softmax(const Eigen::MatrixXd& logits) {
    SoftmaxResult out;
    Eigen::RowVectorXd max = logits.colwise().maxCoeff();
    Eigen::MatrixXd shifted = logits;
    shifted.rowwise() -= max;
    Eigen::MatrixXd ex = shifted.array().exp().matrix();
    Eigen::RowVectorXd sums = ex.colwise().sum();
    out.probs = ex.array().rowwise() / sums.array();
    out.log_probs = shifted.array().rowwise() - sums.array().log();
    return out;
}

SoftmaxResult policy_forward(const Mlp& net, const Eigen::MatrixXd& states,
                             ForwardCache* cache) {
    return stable_softmax(mlp_forward(net, states, /*relu_output=*/false, cache));
}

AdamState AdamState::like(const std::vector<LayerParams*>& params, double lr) {
    return like(as_const(params), lr);
}

AdamState AdamState::like(const std::vector<const LayerParams*>& params, double lr) {
    AdamState state;
    state.lr = lr;
    for (const LayerParams* p : params) {
        LayerParams zero;
        zero.w = Eigen::MatrixXd::Zero(p->w.rows(), p->w.cols());
        zero.b = Eigen::VectorXd::Zero(p->b.size());
        state.first_moment.push_back(zero);
        state.second_moment.push_back(std::move(zero));
    }
    return state;
}

void adam_step(const std::vector<LayerParams*>& params, const GradientBundle& grads,
               AdamState& state) {
    if (params.size() != grads.layers.size() ||
        params.size() != state.first_moment.size())
        throw ShapeMismatch("optimizer, gradient and parameter lists disagree");
    state.step_count += 1;
    const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const LayerParams& g = grads.layers[i];
        LayerParams& p = *params[i];
        if (g.w.rows() != p.w.rows() || g.w.cols() != p.w.cols() ||
            g.b.size() != p.b.size())
            throw ShapeMismatch("gradient shape does not match parameter");
        LayerParams& m = state.first_moment[i];
        LayerParams& v = state.second_moment[i];
        m.w = state.beta1 * m.w + (1.0 - state.beta1) * g.w;
        m.b = state.beta1 * m.b + (1.0 - state.beta1) * g.b;
        v.w = state.beta2 * v.w + (1.0 - state.beta2) * g.w.cwiseProduct(g.w);
        v.b = state.beta2 * v.b + (1.0 - state.beta2) * g.b.cwiseProduct(g.b);
        p.w.array() -= state.lr * (m.w.array() / bc1) /
                       ((v.w.array() / bc2).sqrt() + state.epsilon);
        p.b.array() -= state.lr * (m.b.array() / bc1) /
                       ((v.b.array() / bc2).sqrt() + state.epsilon);
    }
}

void soft_update(const std::vector<const LayerParams*>& online,
                 const std::vector<LayerParams*>& target, double tau) {
    if (online.size() != target.size())
        throw ShapeMismatch("online/target parameter lists disagree");
    for (std::size_t i = 0; i < online.size(); ++i) {
        target[i]->w = tau * online[i]->w + (1.0 - tau) * target[i]->w;
        target[i]->b = tau * online[i]->b + (1.0 - tau) * target[i]->b;
    }
}

void hard_copy(const std::vector<const LayerParams*>& from,
               const std::vector<LayerParams*>& to) {
    if (from.size() != to.size())
        throw ShapeMismatch("parameter lists disagree");
    for (std::size_t i = 0; i < from.size(); ++i) {
        to[i]->w = from[i]->w;
        to[i]->b = from[i]->b;
    }
}

} // namespace gridswitch
