#pragma once

#include <cmath>
#include <cstdint>

namespace segnoise {

// splitmix64 finalizer. Bijective on 64-bit values; the constants are the
// published ones, so streams are reproducible across platforms and builds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

// Derives an independent stream seed from a master seed and a stable id
// (annotation id, image id, stream tag). Depends only on the two values,
// never on iteration order, so parallel schedules cannot perturb draws.
inline std::uint64_t sub_seed(std::uint64_t master_seed, std::uint64_t id) {
    return mix64(master_seed ^ mix64(id));
}

// FNV-1a, used to turn stable names (sweep tier names) into stream ids.
inline std::uint64_t fnv1a64(const char* s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (; *s; ++s) {
        h ^= static_cast<unsigned char>(*s);
        h *= 0x100000001b3ull;
    }
    return h;
}

// Deterministic 64-bit generator (splitmix64 core). Every draw helper
// consumes a fixed number of core steps, so the draw sequence for a stream
// is a pure function of its seed.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform on (0, 1]: 53-bit mantissa draws, zero mapped to 1 so the
    // value is always a valid log() argument.
    double uniform01() {
        double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        return u == 0.0 ? 1.0 : u;
    }

    // Uniform integer in [0, n), n >= 1. Rejection sampling, unbiased.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n <= 1) {
            next_u64(); // consume one step even when the result is forced
            return 0;
        }
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        for (;;) {
            std::uint64_t v = next_u64();
            if (v < limit)
                return v % n;
        }
    }

    // P(true) = p. uniform01() is in (0,1], so p = 0 never fires and
    // p = 1 always fires.
    bool bernoulli(double p) { return uniform01() <= p; }

    // +1 or -1 with equal probability.
    int rademacher() { return (next_u64() >> 63) ? -1 : 1; }

    // Box-Muller, cosine branch only: exactly two uniforms per call, no
    // cached second variate, so consumption per draw is constant.
    double normal(double mu, double sigma) {
        double u1 = uniform01();
        double u2 = uniform01();
        double r = std::sqrt(-2.0 * std::log(u1));
        constexpr double two_pi = 6.283185307179586476925286766559;
        return mu + sigma * (r * std::cos(two_pi * u2));
    }

private:
    std::uint64_t state_;
};

} // namespace segnoise
