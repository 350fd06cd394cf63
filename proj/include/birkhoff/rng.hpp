#ifndef BIRKHOFF_RNG_HPP
#define BIRKHOFF_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace birkhoff::rng {

// Deterministic draws built directly on the mt19937_64 engine output.
// The standard <random> distributions are implementation-defined, so the
// corpus generator cannot use them and stay byte-reproducible across
// standard libraries.

// Uniform integer in [0, n), rejection-sampled to avoid modulo bias.
inline std::uint64_t bounded(std::mt19937_64& gen, std::uint64_t n) {
    if (n <= 1) return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x;
    do {
        x = gen();
    } while (x >= limit);
    return x % n;
}

// Uniform integer in [lo, hi], inclusive.
inline int uniform_int(std::mt19937_64& gen, int lo, int hi) {
    if (hi <= lo) return lo;
    return lo + static_cast<int>(bounded(gen, static_cast<std::uint64_t>(hi - lo) + 1));
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform_real(std::mt19937_64& gen) {
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

inline double uniform_range(std::mt19937_64& gen, double lo, double hi) {
    return lo + (hi - lo) * uniform_real(gen);
}

// Standard normal via Box-Muller; always consumes exactly two draws.
inline double gaussian(std::mt19937_64& gen, double sigma = 1.0) {
    const double u1 = 1.0 - uniform_real(gen); // (0, 1], keeps log finite
    const double u2 = uniform_real(gen);
    return sigma * std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
}

} // namespace birkhoff::rng

#endif
