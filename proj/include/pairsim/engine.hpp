#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pairsim/rng.hpp"
#include "pairsim/stats.hpp"

namespace pairsim::engine {

enum class Detector : std::uint8_t { d1 = 1, d2 = 2 };
enum class Gate : std::uint8_t { g1 = 1, g2 = 2 };

/// Which field(s) the splitter directs onto the detector pair.
/// pair:  field-1 channel -> D1, field-2 channel -> D2 (cross-correlation).
/// auto1: field-1 channel split 50/50 onto D1 and D2; channel 2 not routed.
/// auto2: field-2 channel split 50/50 onto D1 and D2; channel 1 not routed.
/// A channel is the field plus the background and leakage light sharing its
/// optical path, so channel noise follows its field through the splitter.
enum class SplitterMode : std::uint8_t { pair, auto1, auto2 };

/// pair_source: diagonal pair law (stats::pair_distribution semantics).
/// classical_twin: one thermal intensity I ~ Exp(mean p) per trial drives
/// independent Poisson counts n1 ~ Pois(I), n2 ~ Pois(zeta*I). Classical
/// twin beams sit exactly on the Cauchy-Schwarz boundary.
enum class SourceModel : std::uint8_t { pair_source, classical_twin };

/// Trial timing in nanoseconds. Gate centers default to the pulse centers
/// (gate1 on the write pulse, gate2 on the read pulse) when left NaN.
struct TrialTiming {
    double trial_period = 4000.0;
    double write_center = 200.0;
    double pair_separation = 405.0;
    double write_fwhm = 51.0;
    double read_fwhm = 34.0;
    double gate_width = 60.0;
    double gate1_center = kDerived;
    double gate2_center = kDerived;
    std::uint64_t trials_per_run = 0;

    static constexpr double kDerived = -1.0;

    double read_center() const { return write_center + pair_separation; }
    void finalize_defaults();
    void validate() const;
    bool operator==(const TrialTiming&) const = default;
};

struct DetectionEvent {
    std::uint64_t trial_index = 0;
    Detector detector = Detector::d1;
    double time = 0.0;  // ns, relative to trial start
    bool operator==(const DetectionEvent&) const = default;
};

struct GatedEvent {
    std::uint64_t trial_index = 0;
    Detector detector = Detector::d1;
    Gate gate = Gate::g1;
    double time = 0.0;
    bool operator==(const GatedEvent&) const = default;
};

struct RunConfig {
    stats::SourceParams source;
    SourceModel source_model = SourceModel::pair_source;
    TrialTiming timing;
    std::uint64_t seed = 0;
    double dead_time = 0.0;  // ns
    SplitterMode splitter_mode = SplitterMode::pair;

    void validate() const;
    bool operator==(const RunConfig&) const = default;
};

/// Gaussian-envelope arrival time, sigma = fwhm / (2 sqrt(2 ln 2)),
/// resampled until it falls inside [0, trial_period).
double envelope_sample(double center, double fwhm, rng::Stream& rng, double trial_period);

/// Mass of the truncated Gaussian envelope inside [lo, hi).
double gate_acceptance(double center, double fwhm, double lo, double hi, double trial_period);

/// All events of trial j, sorted by (time, detector). rng must be the
/// dedicated stream of this trial.
void sample_trial(std::uint64_t j, const RunConfig& cfg, rng::Stream& rng,
                  std::vector<DetectionEvent>& out);

/// Events for trials [first, last), sorted by (trial, time, detector).
/// The parallel kernel and the serial reference produce identical output for
/// identical inputs, for any thread count.
void generate_trials(const RunConfig& cfg, std::uint64_t first, std::uint64_t last,
                     std::vector<DetectionEvent>& out);
void generate_trials_serial(const RunConfig& cfg, std::uint64_t first, std::uint64_t last,
                            std::vector<DetectionEvent>& out);

/// Full run, parallel kernel: trials [0, timing.trials_per_run).
std::vector<DetectionEvent> simulate(const RunConfig& cfg);
std::vector<DetectionEvent> simulate_serial(const RunConfig& cfg);

/// Per-detector non-paralyzable dead time: an event closer than dead_time to
/// the previously kept event on the same detector is dropped. Input must be
/// sorted; absolute times span trial boundaries.
std::vector<DetectionEvent> apply_dead_time(std::span<const DetectionEvent> events,
                                            double dead_time, double trial_period);

/// Dead-time filter that carries detector state across consecutive chunks of
/// one sorted stream, so block-wise processing matches the whole-stream rule.
class DeadTimeFilter {
public:
    DeadTimeFilter(double dead_time, double trial_period);
    /// Filters a sorted chunk in place; chunks must arrive in stream order.
    void filter(std::vector<DetectionEvent>& events);

private:
    double dead_time_;
    double trial_period_;
    double prev_abs_ = -1.0;
    double last_abs_[3] = {0.0, 0.0, 0.0};
    bool seen_[3] = {false, false, false};
};

/// Keeps events inside the half-open gate windows [center - T/2, center + T/2)
/// and tags them with their gate.
std::vector<GatedEvent> gate_events(std::span<const DetectionEvent> events,
                                    const TrialTiming& timing);

/// Effective per-gate source parameters after gate acceptance: detection
/// efficiencies pick up the envelope mass inside their gate window and leak2
/// its read-envelope acceptance, so stats::predict_report on the result is
/// the exact expectation oracle for gated per-trial counts.
stats::SourceParams gated_source_params(const stats::SourceParams& sp, const TrialTiming& timing);

/// RNG orbit origin for one run; splitter modes get independent streams.
std::uint64_t mode_run_key(std::uint64_t seed, SplitterMode mode);

}  // namespace pairsim::engine
