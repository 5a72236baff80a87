#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>

namespace pairsim::rng {

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer (Vigna / Steele et al.), a bijective 64-bit mix.
inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based random stream on the splitmix64 orbit.
///
/// Stream `s` of a run owns orbit positions [s*2^20, (s+1)*2^20), so any two
/// streams of the same run are disjoint by construction no matter how many
/// values they consume (up to the 2^20 per-stream budget). This is what makes
/// trial-level parallelism reproducible: trial j always draws the same values
/// regardless of which thread runs it or how trials are chunked.
class Stream {
public:
    static constexpr unsigned kDrawBits = 20;
    static constexpr std::uint64_t kDrawBudget = 1ULL << kDrawBits;

    Stream(std::uint64_t run_key, std::uint64_t stream_id)
        : state_(run_key + (stream_id << kDrawBits) * kGamma) {}

    std::uint64_t next_u64() {
        state_ += kGamma;
#ifndef NDEBUG
        ++draws_;
        assert(draws_ < kDrawBudget && "per-stream draw budget exceeded");
#endif
        return mix64(state_);
    }

    /// Uniform double in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double prob) { return uniform01() < prob; }

private:
    std::uint64_t state_;
#ifndef NDEBUG
    std::uint64_t draws_ = 0;
#endif
};

/// Derives the orbit origin for one run from a user seed and a salt
/// (e.g. the splitter mode), so distinct runs use unrelated streams.
inline std::uint64_t run_key(std::uint64_t seed, std::uint64_t salt) {
    return mix64(mix64(seed + kGamma) ^ mix64(salt + 0x5851F42D4C957F2DULL));
}

/// Standard normal via the Marsaglia polar method (no libm trig).
inline double gaussian(Stream& s) {
    for (;;) {
        const double x = 2.0 * s.uniform01() - 1.0;
        const double y = 2.0 * s.uniform01() - 1.0;
        const double r2 = x * x + y * y;
        if (r2 > 0.0 && r2 < 1.0) return x * std::sqrt(-2.0 * std::log(r2) / r2);
    }
}

/// Poisson sample by the multiplication method, chunked so that large means
/// stay exact (Pois(a+b) = Pois(a) + Pois(b)).
inline std::uint64_t poisson(Stream& s, double mean) {
    assert(mean >= 0.0);
    std::uint64_t n = 0;
    while (mean > 32.0) {
        double l = std::exp(-32.0), prod = s.uniform01();
        std::uint64_t k = 0;
        while (prod > l) { ++k; prod *= s.uniform01(); }
        n += k;
        mean -= 32.0;
    }
    if (mean <= 0.0) return n;
    const double l = std::exp(-mean);
    double prod = s.uniform01();
    std::uint64_t k = 0;
    while (prod > l) { ++k; prod *= s.uniform01(); }
    return n + k;
}

/// Exponential with the given mean; returns 0 for mean 0.
inline double exponential(Stream& s, double mean) {
    return mean <= 0.0 ? 0.0 : -mean * std::log1p(-s.uniform01());
}

/// Pair count n with P(n) = p^n / (1+p)^(n+1)  (geometric, mean p).
inline std::uint64_t pair_count(Stream& s, double p) {
    if (p <= 0.0) return 0;
    const double q = p / (1.0 + p);
    const double u = s.uniform01();
    const double n = std::floor(std::log1p(-u) / std::log(q));
    return n > 4096.0 ? 4096 : static_cast<std::uint64_t>(n);
}

inline std::uint64_t binomial(Stream& s, std::uint64_t n, double prob) {
    std::uint64_t k = 0;
    for (std::uint64_t i = 0; i < n; ++i) k += s.bernoulli(prob) ? 1 : 0;
    return k;
}

}  // namespace pairsim::rng
