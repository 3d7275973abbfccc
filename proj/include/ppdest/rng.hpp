#pragma once

#include <cmath>
#include <cstdint>

namespace ppdest {

/// Deterministic splitmix64 generator. Used instead of <random> distributions so
/// that streams are reproducible bit-for-bit independent of the standard library.
struct Rng {
    std::uint64_t state;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0,1) with 53 bits.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (no caching, two uniforms per draw).
    double normal() {
        double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;  // (0,1]
        double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Uniform integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t x;
        do { x = next(); } while (x >= limit);
        return x % n;
    }

    /// Derive an independent stream for sub-task k of a seeded job.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t k) {
        Rng r(seed ^ (0xD1B54A32D192ED03ull * (k + 1)));
        return r.next();
    }
};

}  // namespace ppdest
