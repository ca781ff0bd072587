#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace ntfhmm {

// splitmix64: used to derive independent per-task seeds from a master seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Mixes a master seed with stream identifiers (run id, rank, member, ...).
inline std::uint64_t mix_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t s = splitmix64(seed);
    for (std::uint64_t k : keys) s = splitmix64(s ^ (k + 0x632be59bd9b4e019ULL));
    return s;
}

inline std::mt19937_64 make_engine(std::uint64_t seed) { return std::mt19937_64(splitmix64(seed)); }

// Hand-rolled draws so streams are identical across standard libraries.
inline double uniform01(std::mt19937_64& eng) {
    return static_cast<double>(eng() >> 11) * 0x1.0p-53;  // [0, 1)
}

inline double uniform(std::mt19937_64& eng, double a, double b) {
    return a + (b - a) * uniform01(eng);
}

inline double exponential(std::mt19937_64& eng, double mean) {
    return -mean * std::log1p(-uniform01(eng));
}

// Marsaglia-Tsang for shape >= 1; boosted by u^(1/shape) below 1.
inline double gamma_draw(std::mt19937_64& eng, double shape) {
    if (shape < 1.0) {
        double u = uniform01(eng);
        while (u <= 0.0) u = uniform01(eng);
        return gamma_draw(eng, shape + 1.0) * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x, v;
        do {
            double u1 = uniform01(eng), u2 = uniform01(eng);
            while (u1 <= 0.0) u1 = uniform01(eng);
            x = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = uniform01(eng);
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

inline double beta_draw(std::mt19937_64& eng, double alpha, double beta) {
    const double x = gamma_draw(eng, alpha);
    const double y = gamma_draw(eng, beta);
    return x / (x + y);
}

/// Inverse-CDF draw from a discrete distribution given as one row of a stochastic matrix.
template <typename Row>
int categorical(std::mt19937_64& eng, const Row& probs, int n) {
    const double u = uniform01(eng);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        acc += probs(i);
        if (u < acc) return i;
    }
    return n - 1;
}

}  // namespace ntfhmm
