#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace gridswitch {

/// splitmix64 step; used to derive independent substreams from one seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic substream derivation: every random stream in a run is
/// seeded as derive_stream(run_seed, stream_id), so a single seed fixes
/// all randomness (environment noise, network init, samplers).
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t stream_id) {
    std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL * (stream_id + 1));
    splitmix64(s);
    return splitmix64(s);
}

/// Stream ids, one per consumer of randomness within a run.
enum class Stream : std::uint64_t {
    env_loads = 0,
    policy_init = 1,
    critic1_init = 2,
    critic2_init = 3,
    replay_sampler = 4,
    action_sampler = 5,
    exploration = 6,
    value_init = 7,
    shuffle = 8,
};

/// mt19937_64-backed generator with explicit double conversion so the byte
/// stream does not depend on the standard library's distribution code.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    Rng(std::uint64_t seed, Stream stream)
        : gen_(derive_stream(seed, static_cast<std::uint64_t>(stream))) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    /// Uniform on [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). n must be > 0.
    std::size_t uniform_index(std::size_t n) {
        // modulo bias is negligible for n << 2^64 and keeps the stream simple
        return static_cast<std::size_t>(gen_() % n);
    }

    /// Sample an index from an (unnormalized is not allowed) probability
    /// vector by inverse CDF walk; falls back to the last index on rounding.
    template <typename Vec>
    std::size_t categorical(const Vec& probs) {
        double u = uniform();
        double acc = 0.0;
        const std::size_t n = static_cast<std::size_t>(probs.size());
        for (std::size_t i = 0; i < n; ++i) {
            acc += probs[i];
            if (u < acc) return i;
        }
        return n - 1;
    }

    /// Fisher-Yates shuffle of an index vector.
    void shuffle(std::vector<std::size_t>& idx) {
        for (std::size_t i = idx.size(); i > 1; --i) {
            std::size_t j = uniform_index(i);
            std::swap(idx[i - 1], idx[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

} // namespace gridswitch
