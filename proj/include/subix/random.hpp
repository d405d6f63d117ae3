#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace subix {

/// Seeded generator with distributions computed from the raw engine output,
/// so sequences are identical across standard library implementations.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n); n must be > 0.
    std::uint64_t index(std::uint64_t n) {
        // rejection sampling keeps the draw unbiased
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t value;
        do {
            value = engine_();
        } while (value >= limit);
        return value % n;
    }

    /// Exp(1) variate.
    double exponential() { return -std::log1p(-uniform()); }

    /// Log-uniform in [low, high], both > 0.
    double log_uniform(double low, double high) {
        return std::exp(std::log(low) + uniform() * (std::log(high) - std::log(low)));
    }

    double uniform(double low, double high) { return low + uniform() * (high - low); }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent per-item seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace subix
