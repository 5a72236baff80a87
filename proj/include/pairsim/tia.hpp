#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pairsim/engine.hpp"

namespace pairsim::tia {

/// One side of a correlation: events of this detector inside this gate.
struct Channel {
    engine::Detector detector;
    engine::Gate gate;
    bool operator==(const Channel&) const = default;
};

struct ChannelPlan {
    Channel start;
    Channel stop;
};

/// Time-resolved coincidence counts n(tau), tau = stop - start in absolute
/// time. Bins cover tau in [-trial_period/2, (K + 1/2) * trial_period), so
/// peak k (stop k trials after the start) occupies
/// [k*trial_period - trial_period/2, k*trial_period + trial_period/2).
/// Peak 0 holds same-trial coincidences; a small negative range is needed
/// because same-gate stops may precede their start.
struct CoincidenceHistogram {
    double bin_width = 2.0;
    double trial_period = 4000.0;
    int offset_trials = 10;  // K
    std::string label;       // channel pair, e.g. "12"
    std::uint64_t start_count = 0;
    std::vector<std::uint64_t> bins;

    double tau_min() const { return -trial_period / 2.0; }
    std::size_t bins_per_peak() const;
    /// Sum of counts in peak k, k in [0, offset_trials].
    std::uint64_t peak_sum(int k) const;
    std::uint64_t total() const;
    double bin_center(std::size_t i) const { return tau_min() + (static_cast<double>(i) + 0.5) * bin_width; }
};

/// Streaming coincidence accumulator over a sliding window of K+1 trials;
/// the serial reference implementation of the correlation kernel. Trials must
/// be pushed in order, including empty ones.
class Correlator {
public:
    Correlator(ChannelPlan plan, int offset_trials, double bin_width,
               const engine::TrialTiming& timing, std::string label);

    void push_trial(std::uint64_t trial, std::span<const engine::GatedEvent> events);
    CoincidenceHistogram finish();

private:
    void record(double tau);

    ChannelPlan plan_;
    double trial_period_;
    CoincidenceHistogram hist_;
    std::vector<std::vector<double>> start_ring_;  // absolute start times, last K+1 trials
    std::uint64_t next_trial_ = 0;
};

/// Time-resolved coincidences between start- and stop-channel events for
/// stops in trials j..j+K of each start's trial j. OpenMP-parallel kernel;
/// bit-identical to the Correlator reference for any thread count.
CoincidenceHistogram correlate(std::span<const engine::GatedEvent> events, ChannelPlan plan,
                               int offset_trials, double bin_width,
                               const engine::TrialTiming& timing, std::string label = {});

/// Same result via the streaming reference path.
CoincidenceHistogram correlate_serial(std::span<const engine::GatedEvent> events, ChannelPlan plan,
                                      int offset_trials, double bin_width,
                                      const engine::TrialTiming& timing, std::string label = {});

/// Bin-wise mean of the K offset peaks, each shifted back onto one trial
/// period. Output has bins_per_peak entries.
std::vector<double> offset_average(const CoincidenceHistogram& h);

struct Totals {
    std::uint64_t same_trial = 0;             // N: peak-0 coincidences
    double offset_mean = 0.0;                 // M: mean offset-peak sum
    std::vector<std::uint64_t> offset_sums;   // raw per-peak sums S_1..S_K
};

Totals totals(const CoincidenceHistogram& h);

/// Normalized correlation estimate g = N / M with M the mean offset-peak sum.
/// sigma is independent-Poisson propagation on N and on the total offset
/// count: sigma = g * sqrt(1/N + 1/sum(S_k)).
struct GEstimate {
    double value = 0.0;
    double sigma = 0.0;
    std::uint64_t n_total = 0;
    double m_total = 0.0;
    std::uint64_t offset_total = 0;
    bool degenerate = false;  // N == 0: value 0 with no meaningful sigma
};

GEstimate estimate_g(std::uint64_t n_total, std::span<const std::uint64_t> offset_sums);

/// Cauchy-Schwarz test on the three estimates, with first-order error
/// propagation: sigma_R/R = sqrt(4 (s12/g12)^2 + (s11/g11)^2 + (s22/g22)^2).
struct CsReport {
    GEstimate g11, g22, g12;
    double ratio = 0.0;
    double ratio_sigma = 0.0;
    bool violated = false;       // ratio > 1
    double significance = 0.0;   // (ratio - 1) / ratio_sigma
    double numerator = 0.0;      // g12^2
    double numerator_sigma = 0.0;
    double denominator = 0.0;    // g11 * g22
    double denominator_sigma = 0.0;
};

CsReport cs_test(const GEstimate& g11, const GEstimate& g22, const GEstimate& g12);

struct AnalysisParams {
    int offset_trials = 10;
    double bin_width = 2.0;  // ns
    int cutoff = 20;         // analytic-prediction support cutoff
    bool operator==(const AnalysisParams&) const = default;
};

/// Channel plans of the standard three-run measurement.
ChannelPlan plan_g12();  // pair run:  D1 in gate 1 vs D2 in gate 2
ChannelPlan plan_g11();  // auto1 run: D1 in gate 1 vs D2 in gate 1
ChannelPlan plan_g22();  // auto2 run: D1 in gate 2 vs D2 in gate 2

struct CorrelationReport {
    GEstimate g11, g22, g12;
    CsReport cs;
    CoincidenceHistogram hist11, hist22, hist12;
    std::vector<double> m11, m22, m12;
    std::uint64_t trials = 0;
};

/// Full estimator pipeline over the three raw event streams (pair, auto1,
/// auto2 splitter runs sharing one timing config): gate, correlate, totals,
/// estimates, Cauchy-Schwarz verdict.
CorrelationReport analyze_run(std::span<const engine::DetectionEvent> pair_events,
                              std::span<const engine::DetectionEvent> auto1_events,
                              std::span<const engine::DetectionEvent> auto2_events,
                              const engine::TrialTiming& timing, const AnalysisParams& params);

}  // namespace pairsim::tia
