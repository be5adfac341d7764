#pragma once

#include <cmath>
#include <cstdint>

namespace fnucb {

/// Counter-style generator built on SplitMix64. Every consumer derives its
/// own stream from a master seed plus a tag path, so draws never depend on
/// evaluation order or thread scheduling.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(mix(seed ^ kGamma)) {}

    std::uint64_t next_u64() {
        state_ += kGamma;
        return mix(state_);
    }

    /// Uniform in [0,1) with 53 random bits.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t next_below(std::uint64_t n) { return next_u64() % n; }

    /// Standard normal via Box-Muller. No spare-value caching: forked
    /// streams stay independent and replay is position-exact.
    double next_gaussian() {
        double u1 = next_double();
        while (u1 <= 0.0) u1 = next_double();
        const double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    /// Child stream, a pure function of the current lineage and the tag.
    Rng fork(std::uint64_t tag) const { return Rng(mix(state_ ^ mix(tag + kGamma))); }

    /// Convenience for multi-level tags: fork(a).fork(b) without temporaries.
    Rng fork(std::uint64_t a, std::uint64_t b) const { return fork(a).fork(b); }
    Rng fork(std::uint64_t a, std::uint64_t b, std::uint64_t c) const { return fork(a).fork(b).fork(c); }

private:
    static constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;
    static constexpr double kTwoPi = 6.283185307179586476925286766559;

    static std::uint64_t mix(std::uint64_t z) {
        z ^= z >> 30;
        z *= 0xBF58476D1CE4E5B9ULL;
        z ^= z >> 27;
        z *= 0x94D049BB133111EBULL;
        z ^= z >> 31;
        return z;
    }

    std::uint64_t state_;
};

// Stream tags used to partition the master seed. Keeping them in one place
// guards against accidental collisions between modules.
namespace stream {
inline constexpr std::uint64_t kInit = 1;        // network initialization
inline constexpr std::uint64_t kEnvContext = 2;  // context draws
inline constexpr std::uint64_t kEnvNoise = 3;    // observation noise
inline constexpr std::uint64_t kEnvHidden = 4;   // hidden environment parameters
inline constexpr std::uint64_t kTrain = 5;       // minibatch sampling
inline constexpr std::uint64_t kPolicy = 6;      // posterior sampling (Thompson)
inline constexpr std::uint64_t kReference = 7;   // alpha reference set
}  // namespace stream

}  // namespace fnucb
