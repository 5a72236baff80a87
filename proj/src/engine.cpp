#include "pairsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pairsim::engine {

namespace {

constexpr double kFwhmToSigma = 2.3548200450309493;  // 2 sqrt(2 ln 2)

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

bool in_gate(double t, double center, double width) {
    return t >= center - width / 2.0 && t < center + width / 2.0;
}

// Routing of one detected photon of the given channel. Returns false when the
// channel is not directed onto the detectors in this splitter mode.
bool route_channel(int channel, SplitterMode mode, rng::Stream& rng, Detector& det) {
    switch (mode) {
        case SplitterMode::pair:
            det = channel == 1 ? Detector::d1 : Detector::d2;
            return true;
        case SplitterMode::auto1:
            if (channel != 1) return false;
            det = rng.bernoulli(0.5) ? Detector::d1 : Detector::d2;
            return true;
        case SplitterMode::auto2:
            if (channel != 2) return false;
            det = rng.bernoulli(0.5) ? Detector::d1 : Detector::d2;
            return true;
    }
    return false;
}

}  // namespace

void TrialTiming::finalize_defaults() {
    if (gate1_center == kDerived) gate1_center = write_center;
    if (gate2_center == kDerived) gate2_center = read_center();
}

void TrialTiming::validate() const {
    require(trial_period > 0.0, "timing.trial_period must be > 0");
    require(write_fwhm > 0.0, "timing.write_fwhm must be > 0");
    require(read_fwhm > 0.0, "timing.read_fwhm must be > 0");
    require(gate_width > 0.0, "timing.gate_width must be > 0");
    require(pair_separation > 0.0, "timing.pair_separation must be > 0");
    require(gate1_center != kDerived && gate2_center != kDerived,
            "timing gates not finalized; call finalize_defaults()");
    const double half = gate_width / 2.0;
    require(gate1_center - half >= 0.0 && gate1_center + half <= trial_period,
            "timing.gate1_center: gate extends outside the trial period");
    require(gate2_center - half >= 0.0 && gate2_center + half <= trial_period,
            "timing.gate2_center: gate extends outside the trial period");
    require(std::abs((gate2_center - gate1_center) - pair_separation) <= gate_width,
            "timing: gate separation inconsistent with pair_separation");
    require(gate2_center - gate1_center >= gate_width,
            "timing: gate windows overlap");
}

void RunConfig::validate() const {
    source.validate();
    timing.validate();
    require(dead_time >= 0.0, "run.dead_time must be >= 0");
    require(timing.trials_per_run > 0, "timing.trials_per_run must be > 0");
}

double envelope_sample(double center, double fwhm, rng::Stream& rng, double trial_period) {
    const double sigma = fwhm / kFwhmToSigma;
    for (int i = 0; i < 1000; ++i) {
        const double t = center + sigma * rng::gaussian(rng);
        if (t >= 0.0 && t < trial_period) return t;
    }
    // Pathological envelope placement; pin to the nearest in-range point.
    return std::clamp(center, 0.0, std::nexttoward(trial_period, 0.0));
}

double gate_acceptance(double center, double fwhm, double lo, double hi, double trial_period) {
    const double sigma = fwhm / kFwhmToSigma;
    const double norm = normal_cdf((trial_period - center) / sigma) - normal_cdf((0.0 - center) / sigma);
    if (norm <= 0.0) return 0.0;
    const double mass = normal_cdf((hi - center) / sigma) - normal_cdf((lo - center) / sigma);
    return std::clamp(mass / norm, 0.0, 1.0);
}

void sample_trial(std::uint64_t j, const RunConfig& cfg, rng::Stream& rng,
                  std::vector<DetectionEvent>& out) {
    const auto& src = cfg.source;
    const auto& t = cfg.timing;
    const std::size_t base = out.size();

    // Source counts before detection. Draw order is fixed: source counts,
    // field-1 photons, field-2 photons, channel backgrounds, leakage.
    std::uint64_t n1_raw = 0, n2_raw = 0;
    if (cfg.source_model == SourceModel::pair_source) {
        const std::uint64_t n = rng::pair_count(rng, src.p);
        n1_raw = n;
        n2_raw = rng::binomial(rng, n, src.zeta);
    } else {
        const double intensity = rng::exponential(rng, src.p);
        n1_raw = rng::poisson(rng, intensity);
        n2_raw = rng::poisson(rng, intensity * src.zeta);
    }

    Detector det{};
    for (std::uint64_t i = 0; i < n1_raw; ++i) {
        if (!rng.bernoulli(src.eta1)) continue;
        const double time = envelope_sample(t.write_center, t.write_fwhm, rng, t.trial_period);
        if (route_channel(1, cfg.splitter_mode, rng, det))
            out.push_back({j, det, time});
    }
    for (std::uint64_t i = 0; i < n2_raw; ++i) {
        if (!rng.bernoulli(src.eta2)) continue;
        const double time = envelope_sample(t.read_center(), t.read_fwhm, rng, t.trial_period);
        if (route_channel(2, cfg.splitter_mode, rng, det))
            out.push_back({j, det, time});
    }

    // Channel backgrounds: uniform over the whole trial at a density that
    // admits a mean of bg per gate window of the configured width.
    const double trials_per_gate = t.trial_period / t.gate_width;
    const double bg_mean[2] = {src.bg1 * trials_per_gate, src.bg2 * trials_per_gate};
    for (int channel = 1; channel <= 2; ++channel) {
        const std::uint64_t k = rng::poisson(rng, bg_mean[channel - 1]);
        for (std::uint64_t i = 0; i < k; ++i) {
            const double time = rng.uniform01() * t.trial_period;
            if (route_channel(channel, cfg.splitter_mode, rng, det))
                out.push_back({j, det, time});
        }
    }

    // Read-pulse leakage rides the field-2 channel with the read envelope.
    const std::uint64_t k = rng::poisson(rng, src.leak2);
    for (std::uint64_t i = 0; i < k; ++i) {
        const double time = envelope_sample(t.read_center(), t.read_fwhm, rng, t.trial_period);
        if (route_channel(2, cfg.splitter_mode, rng, det))
            out.push_back({j, det, time});
    }

    std::sort(out.begin() + static_cast<std::ptrdiff_t>(base), out.end(),
              [](const DetectionEvent& a, const DetectionEvent& b) {
                  if (a.time != b.time) return a.time < b.time;
                  return a.detector < b.detector;
              });
}

void generate_trials_serial(const RunConfig& cfg, std::uint64_t first, std::uint64_t last,
                            std::vector<DetectionEvent>& out) {
    cfg.validate();
    const std::uint64_t key = mode_run_key(cfg.seed, cfg.splitter_mode);
    for (std::uint64_t j = first; j < last; ++j) {
        rng::Stream stream(key, j);
        sample_trial(j, cfg, stream, out);
    }
}

void generate_trials(const RunConfig& cfg, std::uint64_t first, std::uint64_t last,
                     std::vector<DetectionEvent>& out) {
#ifndef _OPENMP
    generate_trials_serial(cfg, first, last, out);
#else
    cfg.validate();
    if (last <= first) return;
    const std::uint64_t key = mode_run_key(cfg.seed, cfg.splitter_mode);
    const int threads = omp_get_max_threads();
    const std::uint64_t n = last - first;
    // Contiguous trial ranges per worker; per-trial streams make the content
    // independent of the partitioning, so concatenation restores the global
    // (trial, time) order bit-identically for any worker count.
    std::vector<std::vector<DetectionEvent>> parts(static_cast<std::size_t>(threads));
#pragma omp parallel num_threads(threads)
    {
        const int tid = omp_get_thread_num();
        const std::uint64_t lo = first + n * static_cast<std::uint64_t>(tid) / static_cast<std::uint64_t>(threads);
        const std::uint64_t hi = first + n * (static_cast<std::uint64_t>(tid) + 1) / static_cast<std::uint64_t>(threads);
        auto& part = parts[static_cast<std::size_t>(tid)];
        part.reserve(static_cast<std::size_t>(hi - lo) * 4 + 64);
        for (std::uint64_t j = lo; j < hi; ++j) {
            rng::Stream stream(key, j);
            sample_trial(j, cfg, stream, part);
        }
    }
    std::size_t total = out.size();
    for (const auto& part : parts) total += part.size();
    out.reserve(total);
    for (auto& part : parts) out.insert(out.end(), part.begin(), part.end());
#endif
}

std::vector<DetectionEvent> simulate(const RunConfig& cfg) {
    std::vector<DetectionEvent> out;
    generate_trials(cfg, 0, cfg.timing.trials_per_run, out);
    return out;
}

std::vector<DetectionEvent> simulate_serial(const RunConfig& cfg) {
    std::vector<DetectionEvent> out;
    generate_trials_serial(cfg, 0, cfg.timing.trials_per_run, out);
    return out;
}

DeadTimeFilter::DeadTimeFilter(double dead_time, double trial_period)
    : dead_time_(dead_time), trial_period_(trial_period) {
    require(dead_time >= 0.0, "apply_dead_time: dead_time must be >= 0");
}

void DeadTimeFilter::filter(std::vector<DetectionEvent>& events) {
    if (dead_time_ == 0.0) {
        for (const auto& ev : events) {
            const double abs_time = static_cast<double>(ev.trial_index) * trial_period_ + ev.time;
            if (abs_time < prev_abs_) throw std::invalid_argument("apply_dead_time: events not sorted");
            prev_abs_ = abs_time;
        }
        return;
    }
    std::size_t kept = 0;
    for (const auto& ev : events) {
        const double abs_time = static_cast<double>(ev.trial_index) * trial_period_ + ev.time;
        if (abs_time < prev_abs_) throw std::invalid_argument("apply_dead_time: events not sorted");
        prev_abs_ = abs_time;
        const int d = static_cast<int>(ev.detector);
        if (seen_[d] && abs_time - last_abs_[d] < dead_time_) continue;
        seen_[d] = true;
        last_abs_[d] = abs_time;
        events[kept++] = ev;
    }
    events.resize(kept);
}

std::vector<DetectionEvent> apply_dead_time(std::span<const DetectionEvent> events,
                                            double dead_time, double trial_period) {
    DeadTimeFilter filter(dead_time, trial_period);
    std::vector<DetectionEvent> kept(events.begin(), events.end());
    filter.filter(kept);
    return kept;
}

std::vector<GatedEvent> gate_events(std::span<const DetectionEvent> events,
                                    const TrialTiming& timing) {
    std::vector<GatedEvent> out;
    out.reserve(events.size() / 4 + 16);
    for (const auto& ev : events) {
        if (in_gate(ev.time, timing.gate1_center, timing.gate_width))
            out.push_back({ev.trial_index, ev.detector, Gate::g1, ev.time});
        else if (in_gate(ev.time, timing.gate2_center, timing.gate_width))
            out.push_back({ev.trial_index, ev.detector, Gate::g2, ev.time});
    }
    return out;
}

stats::SourceParams gated_source_params(const stats::SourceParams& sp, const TrialTiming& timing) {
    const double half = timing.gate_width / 2.0;
    const double f1 = gate_acceptance(timing.write_center, timing.write_fwhm,
                                      timing.gate1_center - half, timing.gate1_center + half,
                                      timing.trial_period);
    const double f2 = gate_acceptance(timing.read_center(), timing.read_fwhm,
                                      timing.gate2_center - half, timing.gate2_center + half,
                                      timing.trial_period);
    stats::SourceParams out = sp;
    out.eta1 = sp.eta1 * f1;
    out.eta2 = sp.eta2 * f2;
    out.leak2 = sp.leak2 * f2;
    return out;
}

std::uint64_t mode_run_key(std::uint64_t seed, SplitterMode mode) {
    return rng::run_key(seed, static_cast<std::uint64_t>(mode));
}

}  // namespace pairsim::engine
