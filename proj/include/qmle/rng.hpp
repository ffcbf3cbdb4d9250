#pragma once

#include <cstdint>

namespace qmle {

// Counter-based generator: draw k is the SplitMix64 finalizer applied to
// seed + k * golden-ratio increment. Output depends only on (seed, counter),
// so streams can be split deterministically across replications and the same
// seed reproduces the same path on any platform.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : key_(seed), counter_(0) {}

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Independent stream key for sub-task `index` (replication splitting).
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
        return mix(seed ^ mix(index + 0x9E3779B97F4A7C15ULL));
    }

    std::uint64_t next_u64() { return mix(key_ + (++counter_) * 0x9E3779B97F4A7C15ULL); }

    /// Uniform on the open interval (0,1); never returns an endpoint.
    double next_uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    /// Standard normal via the inverse CDF (deterministic, one draw consumed).
    double next_gaussian() { return normal_quantile(next_uniform()); }

    /// Wichura's PPND16 algorithm (AS 241), |error| < 1e-15 over (0,1).
    static double normal_quantile(double p);

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

}  // namespace qmle
