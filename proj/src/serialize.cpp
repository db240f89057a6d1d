#include "gridswitch/serialize.hpp"

#include "gridswitch/errors.hpp"

namespace gridswitch {

void put_layers(Checkpoint& ckpt, const std::string& prefix,
                const std::vector<const LayerParams*>& layers) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        ckpt.put(base + ".w", layers[i]->w);
        ckpt.put(base + ".b", layers[i]->b);
    }
}

void get_layers(const Checkpoint& ckpt, const std::string& prefix,
                const std::vector<LayerParams*>& layers) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        layers[i]->w = ckpt.get_matrix(base + ".w", layers[i]->w.rows(),
                                       layers[i]->w.cols());
        layers[i]->b = ckpt.get_vector(base + ".b", layers[i]->b.size());
    }
}

void put_adam(Checkpoint& ckpt, const std::string& prefix, const AdamState& state) {
    ckpt.put_int(prefix + ".step_count", state.step_count);
    ckpt.put_scalar(prefix + ".lr", state.lr);
    for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        ckpt.put(base + ".mw", state.first_moment[i].w);
        ckpt.put(base + ".mb", state.first_moment[i].b);
        ckpt.put(base + ".vw", state.second_moment[i].w);
        ckpt.put(base + ".vb", state.second_moment[i].b);
    }
}

void get_adam(const Checkpoint& ckpt, const std::string& prefix, AdamState& state) {
    state.step_count = ckpt.get_int(prefix + ".step_count");
    state.lr = ckpt.get_scalar(prefix + ".lr");
    for (std::size_t i = 0; i < state.first_moment.size(); ++i) {
        const std::string base = prefix + "." + std::to_string(i);
        LayerParams& m = state.first_moment[i];
        LayerParams& v = state.second_moment[i];
        m.w = ckpt.get_matrix(base + ".mw", m.w.rows(), m.w.cols());
        m.b = ckpt.get_vector(base + ".mb", m.b.size());
        v.w = ckpt.get_matrix(base + ".vw", v.w.rows(), v.w.cols());
        v.b = ckpt.get_vector(base + ".vb", v.b.size());
    }
}

void put_scalar_adam(Checkpoint& ckpt, const std::string& prefix, const ScalarAdam& s) {
    ckpt.put_int(prefix + ".step_count", s.step_count);
    ckpt.put_scalar(prefix + ".lr", s.lr);
    ckpt.put_scalar(prefix + ".m", s.m);
    ckpt.put_scalar(prefix + ".v", s.v);
}

void get_scalar_adam(const Checkpoint& ckpt, const std::string& prefix, ScalarAdam& s) {
    s.step_count = ckpt.get_int(prefix + ".step_count");
    s.lr = ckpt.get_scalar(prefix + ".lr");
    s.m = ckpt.get_scalar(prefix + ".m");
    s.v = ckpt.get_scalar(prefix + ".v");
}

void put_stats(Checkpoint& ckpt, const std::string& prefix, const RunningStats& stats) {
    ckpt.put_int(prefix + ".count", stats.count());
    ckpt.put(prefix + ".mean", stats.mean());
    ckpt.put(prefix + ".m2", stats.m2());
}

void get_stats(const Checkpoint& ckpt, const std::string& prefix, RunningStats& stats) {
    const auto count = ckpt.get_int(prefix + ".count");
    Eigen::VectorXd mean = ckpt.get_vector(prefix + ".mean", stats.mean().size());
    Eigen::VectorXd m2 = ckpt.get_vector(prefix + ".m2", stats.mean().size());
    stats.restore(count, std::move(mean), std::move(m2));
}

} // namespace gridswitch
