// Independent test oracles: brute-force reimplementations kept deliberately
// separate from the library code paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "pairsim/engine.hpp"
#include "pairsim/stats.hpp"
#include "pairsim/tia.hpp"

namespace oracles {

struct BruteMoments {
    double mean1 = 0, mean2 = 0;
    double fact11 = 0;  // <n1 (n1 - 1)>
    double fact22 = 0;
    double cross = 0;  // <n1 n2>
};

// Direct summation over the pmf, written independently of stats::moments.
inline BruteMoments brute_moments(const pairsim::stats::PhotonDistribution& d) {
    BruteMoments m;
    for (int a = 0; a <= d.cutoff(); ++a)
        for (int b = 0; b <= d.cutoff(); ++b) {
            const double w = d.at(a, b);
            m.mean1 += a * w;
            m.mean2 += b * w;
            m.fact11 += a * (a - 1.0) * w;
            m.fact22 += b * (b - 1.0) * w;
            m.cross += static_cast<double>(a) * b * w;
        }
    return m;
}

// All-pairs O(n^2) coincidence counter, the reference for tia::correlate.
inline std::vector<std::uint64_t> allpairs_correlate(
    std::span<const pairsim::engine::GatedEvent> events, pairsim::tia::ChannelPlan plan, int k_max,
    double bin_width, double trial_period) {
    const auto per = static_cast<std::size_t>(std::llround(trial_period / bin_width));
    std::vector<std::uint64_t> bins(per * (static_cast<std::size_t>(k_max) + 1), 0);
    const double tau_min = -trial_period / 2.0;
    for (const auto& start : events) {
        if (start.detector != plan.start.detector || start.gate != plan.start.gate) continue;
        for (const auto& stop : events) {
            if (stop.detector != plan.stop.detector || stop.gate != plan.stop.gate) continue;
            if (stop.trial_index < start.trial_index) continue;
            if (stop.trial_index > start.trial_index + static_cast<std::uint64_t>(k_max)) continue;
            const double tau =
                (static_cast<double>(stop.trial_index) * trial_period + stop.time) -
                (static_cast<double>(start.trial_index) * trial_period + start.time);
            const double off = tau - tau_min;
            if (off < 0.0) continue;
            const auto bin = static_cast<std::size_t>(off / bin_width);
            if (bin < bins.size()) ++bins[bin];
        }
    }
    return bins;
}

// One-sample Kolmogorov-Smirnov test statistic against a CDF.
template <typename Cdf>
double ks_statistic(std::vector<double> samples, Cdf cdf) {
    std::sort(samples.begin(), samples.end());
    const double n = static_cast<double>(samples.size());
    double d = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const double f = cdf(samples[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(f - (static_cast<double>(i) + 1.0) / n));
    }
    return d;
}

// KS critical value at the 1% level for large n.
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

// Mean and standard error from per-block statistics.
struct BlockStat {
    double mean = 0.0;
    double se = 0.0;
};

inline BlockStat block_stat(std::span<const double> values) {
    BlockStat s;
    const double n = static_cast<double>(values.size());
    for (double v : values) s.mean += v / n;
    double var = 0.0;
    for (double v : values) var += (v - s.mean) * (v - s.mean) / (n - 1.0);
    s.se = std::sqrt(var / n);
    return s;
}

// Truncated-Gaussian CDF on [0, period).
inline double envelope_cdf(double t, double center, double fwhm, double period) {
    const double sigma = fwhm / 2.3548200450309493;
    auto phi = [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); };
    const double lo = phi((0.0 - center) / sigma);
    const double hi = phi((period - center) / sigma);
    return (phi((t - center) / sigma) - lo) / (hi - lo);
}

}  // namespace oracles
