#pragma once

#include "gridswitch/rng.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace gridswitch {

struct Transition {
    Eigen::VectorXd state;
    int action = 0;
    double reward = 0.0;
    Eigen::VectorXd next_state;
    bool done = false;
};

/// Bounded ring of transitions with a seeded uniform sampler.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, std::uint64_t seed, Stream stream)
        : capacity_(capacity), rng_(seed, stream) {
        storage_.reserve(std::min<std::size_t>(capacity, 4096));
    }

    void push(Transition t) {
        if (storage_.size() < capacity_) {
            storage_.push_back(std::move(t));
        } else {
            storage_[write_] = std::move(t);
        }
        write_ = (write_ + 1) % capacity_;
    }

    std::size_t size() const { return storage_.size(); }
    std::size_t capacity() const { return capacity_; }
    const Transition& at(std::size_t i) const { return storage_[i]; }

    /// Uniform over stored items, sampled independently per slot.
    std::vector<std::size_t> sample_indices(std::size_t batch) {
        std::vector<std::size_t> idx(batch);
        for (auto& i : idx) i = rng_.uniform_index(storage_.size());
        return idx;
    }

private:
    std::size_t capacity_;
    std::size_t write_ = 0;
    std::vector<Transition> storage_;
    Rng rng_;
};

/// Welford running mean/variance used to standardize observations whose
/// physical units span several orders of magnitude.
class RunningStats {
public:
    explicit RunningStats(std::size_t dim)
        : mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))),
          m2_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {}

    void update(const Eigen::VectorXd& x) {
        count_ += 1;
        Eigen::VectorXd delta = x - mean_;
        mean_ += delta / static_cast<double>(count_);
        m2_ += delta.cwiseProduct(x - mean_);
    }

    std::int64_t count() const { return count_; }
    const Eigen::VectorXd& mean() const { return mean_; }
    Eigen::VectorXd variance() const {
        if (count_ < 2) return Eigen::VectorXd::Ones(mean_.size());
        return m2_ / static_cast<double>(count_ - 1);
    }

    Eigen::VectorXd standardize(const Eigen::VectorXd& x) const {
        if (count_ < 1) return x;
        return (x - mean_).cwiseQuotient(scale());
    }

    Eigen::MatrixXd standardize_columns(const Eigen::MatrixXd& x) const {
        if (count_ < 1) return x;
        return (x.colwise() - mean_).array().colwise() / scale().array();
    }

    // serialization access
    void restore(std::int64_t count, Eigen::VectorXd mean, Eigen::VectorXd m2) {
        count_ = count;
        mean_ = std::move(mean);
        m2_ = std::move(m2);
    }
    const Eigen::VectorXd& m2() const { return m2_; }

private:
    Eigen::VectorXd scale() const {
        return (variance().array() + 1e-8).sqrt().matrix();
    }

    std::int64_t count_ = 0;
    Eigen::VectorXd mean_;
    Eigen::VectorXd m2_;
};

} // namespace gridswitch
