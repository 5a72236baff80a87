#include "pairsim/tia.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pairsim::tia {

namespace {

void require(bool ok, const char* msg) {
    if (!ok) throw std::invalid_argument(msg);
}

std::size_t checked_bins_per_peak(double trial_period, double bin_width) {
    require(bin_width > 0.0, "bin_width must be > 0");
    const double ratio = trial_period / bin_width;
    const auto n = static_cast<std::size_t>(std::llround(ratio));
    require(n >= 1 && std::abs(ratio - static_cast<double>(n)) < 1e-9,
            "bin_width must divide the trial period");
    return n;
}

bool matches(const engine::GatedEvent& ev, const Channel& ch) {
    return ev.detector == ch.detector && ev.gate == ch.gate;
}

std::string default_label(const ChannelPlan& plan) {
    auto tag = [](const Channel& c) {
        return std::string(c.detector == engine::Detector::d1 ? "D1" : "D2") +
               (c.gate == engine::Gate::g1 ? "g1" : "g2");
    };
    return tag(plan.start) + ":" + tag(plan.stop);
}

CoincidenceHistogram make_histogram(int offset_trials, double bin_width,
                                    const engine::TrialTiming& timing, std::string label) {
    require(offset_trials >= 1, "offset_trials (K) must be >= 1");
    CoincidenceHistogram h;
    h.bin_width = bin_width;
    h.trial_period = timing.trial_period;
    h.offset_trials = offset_trials;
    h.label = std::move(label);
    h.bins.assign(checked_bins_per_peak(timing.trial_period, bin_width) *
                      (static_cast<std::size_t>(offset_trials) + 1),
                  0);
    return h;
}

}  // namespace

std::size_t CoincidenceHistogram::bins_per_peak() const {
    return checked_bins_per_peak(trial_period, bin_width);
}

std::uint64_t CoincidenceHistogram::peak_sum(int k) const {
    const std::size_t per = bins_per_peak();
    std::uint64_t sum = 0;
    for (std::size_t i = static_cast<std::size_t>(k) * per; i < (static_cast<std::size_t>(k) + 1) * per; ++i)
        sum += bins[i];
    return sum;
}

std::uint64_t CoincidenceHistogram::total() const {
    std::uint64_t sum = 0;
    for (auto b : bins) sum += b;
    return sum;
}

Correlator::Correlator(ChannelPlan plan, int offset_trials, double bin_width,
                       const engine::TrialTiming& timing, std::string label)
    : plan_(plan),
      trial_period_(timing.trial_period),
      hist_(make_histogram(offset_trials, bin_width,
                           timing, label.empty() ? default_label(plan) : std::move(label))),
      start_ring_(static_cast<std::size_t>(offset_trials) + 1) {}

void Correlator::record(double tau) {
    const double offset = tau - hist_.tau_min();
    if (offset < 0.0) return;
    const auto bin = static_cast<std::size_t>(offset / hist_.bin_width);
    if (bin < hist_.bins.size()) ++hist_.bins[bin];
}

void Correlator::push_trial(std::uint64_t trial, std::span<const engine::GatedEvent> events) {
    require(trial == next_trial_, "Correlator: trials must be pushed in order");
    ++next_trial_;

    const std::size_t window = start_ring_.size();
    auto& starts = start_ring_[trial % window];
    starts.clear();
    std::vector<double> stops;
    for (const auto& ev : events) {
        require(ev.trial_index == trial, "Correlator: event from a different trial");
        const double abs_time = static_cast<double>(trial) * trial_period_ + ev.time;
        if (matches(ev, plan_.start)) starts.push_back(abs_time);
        if (matches(ev, plan_.stop)) stops.push_back(abs_time);
    }
    hist_.start_count += starts.size();
    if (stops.empty()) return;
    // Pair the new stops against starts of trials trial-K .. trial.
    const std::uint64_t oldest = trial >= static_cast<std::uint64_t>(hist_.offset_trials)
                                     ? trial - static_cast<std::uint64_t>(hist_.offset_trials)
                                     : 0;
    for (std::uint64_t s = oldest; s <= trial; ++s)
        for (double start : start_ring_[s % window])
            for (double stop : stops) record(stop - start);
}

CoincidenceHistogram Correlator::finish() { return hist_; }

CoincidenceHistogram correlate_serial(std::span<const engine::GatedEvent> events, ChannelPlan plan,
                                      int offset_trials, double bin_width,
                                      const engine::TrialTiming& timing, std::string label) {
    Correlator corr(plan, offset_trials, bin_width, timing, std::move(label));
    std::uint64_t trial = 0;
    std::size_t i = 0;
    while (i < events.size()) {
        require(events[i].trial_index >= trial, "correlate: events not sorted by trial");
        while (trial < events[i].trial_index) corr.push_trial(trial++, {});
        std::size_t j = i;
        while (j < events.size() && events[j].trial_index == trial) ++j;
        corr.push_trial(trial++, events.subspan(i, j - i));
        i = j;
    }
    return corr.finish();
}

CoincidenceHistogram correlate(std::span<const engine::GatedEvent> events, ChannelPlan plan,
                               int offset_trials, double bin_width,
                               const engine::TrialTiming& timing, std::string label) {
#ifndef _OPENMP
    return correlate_serial(events, plan, offset_trials, bin_width, timing, std::move(label));
#else
    CoincidenceHistogram hist = make_histogram(offset_trials, bin_width, timing,
                                               label.empty() ? default_label(plan) : std::move(label));
    // Slice the sorted stream into per-trial runs.
    struct Slice {
        std::uint64_t trial;
        std::size_t first, last;
    };
    std::vector<Slice> slices;
    for (std::size_t i = 0; i < events.size();) {
        const std::uint64_t trial = events[i].trial_index;
        std::size_t j = i;
        while (j < events.size() && events[j].trial_index == trial) ++j;
        if (!slices.empty()) require(slices.back().trial < trial, "correlate: events not sorted by trial");
        slices.push_back({trial, i, j});
        i = j;
    }

    const double period = timing.trial_period;
    const double tau_min = hist.tau_min();
    const std::size_t nbins = hist.bins.size();
    const auto nslices = static_cast<std::ptrdiff_t>(slices.size());
    std::uint64_t start_count = 0;

#pragma omp parallel reduction(+ : start_count)
    {
        std::vector<std::uint64_t> local(nbins, 0);
#pragma omp for schedule(static)
        for (std::ptrdiff_t si = 0; si < nslices; ++si) {
            const auto& slice = slices[static_cast<std::size_t>(si)];
            std::vector<double> starts;
            for (std::size_t e = slice.first; e < slice.last; ++e)
                if (matches(events[e], plan.start))
                    starts.push_back(static_cast<double>(slice.trial) * period + events[e].time);
            start_count += starts.size();
            if (starts.empty()) continue;
            for (std::size_t sj = static_cast<std::size_t>(si); sj < slices.size(); ++sj) {
                const auto& stop_slice = slices[sj];
                if (stop_slice.trial > slice.trial + static_cast<std::uint64_t>(offset_trials)) break;
                for (std::size_t e = stop_slice.first; e < stop_slice.last; ++e) {
                    if (!matches(events[e], plan.stop)) continue;
                    const double stop = static_cast<double>(stop_slice.trial) * period + events[e].time;
                    for (double start : starts) {
                        const double offset = stop - start - tau_min;
                        if (offset < 0.0) continue;
                        const auto bin = static_cast<std::size_t>(offset / hist.bin_width);
                        if (bin < nbins) ++local[bin];
                    }
                }
            }
        }
#pragma omp critical
        for (std::size_t b = 0; b < nbins; ++b) hist.bins[b] += local[b];
    }
    hist.start_count = start_count;
    return hist;
#endif
}

std::vector<double> offset_average(const CoincidenceHistogram& h) {
    const std::size_t per = h.bins_per_peak();
    require(h.bins.size() == per * (static_cast<std::size_t>(h.offset_trials) + 1),
            "offset_average: histogram does not span K offset peaks");
    std::vector<double> m(per, 0.0);
    for (int k = 1; k <= h.offset_trials; ++k)
        for (std::size_t i = 0; i < per; ++i)
            m[i] += static_cast<double>(h.bins[static_cast<std::size_t>(k) * per + i]);
    for (auto& v : m) v /= static_cast<double>(h.offset_trials);
    return m;
}

Totals totals(const CoincidenceHistogram& h) {
    Totals t;
    t.same_trial = h.peak_sum(0);
    std::uint64_t sum = 0;
    for (int k = 1; k <= h.offset_trials; ++k) {
        t.offset_sums.push_back(h.peak_sum(k));
        sum += t.offset_sums.back();
    }
    t.offset_mean = static_cast<double>(sum) / static_cast<double>(h.offset_trials);
    return t;
}

GEstimate estimate_g(std::uint64_t n_total, std::span<const std::uint64_t> offset_sums) {
    require(!offset_sums.empty(), "estimate_g: no offset-peak sums");
    std::uint64_t offset_total = 0;
    for (auto s : offset_sums) offset_total += s;
    if (offset_total == 0) throw std::invalid_argument("estimate_g: offset normalization is zero");

    GEstimate g;
    g.n_total = n_total;
    g.offset_total = offset_total;
    g.m_total = static_cast<double>(offset_total) / static_cast<double>(offset_sums.size());
    g.value = static_cast<double>(n_total) / g.m_total;
    if (n_total == 0) {
        g.degenerate = true;
        return g;
    }
    g.sigma = g.value * std::sqrt(1.0 / static_cast<double>(n_total) +
                                  1.0 / static_cast<double>(offset_total));
    return g;
}

CsReport cs_test(const GEstimate& g11, const GEstimate& g22, const GEstimate& g12) {
    for (const auto* g : {&g11, &g22, &g12})
        if (g->degenerate || g->value <= 0.0)
            throw std::invalid_argument("cs_test: estimates must be positive and non-degenerate");

    CsReport r;
    r.g11 = g11;
    r.g22 = g22;
    r.g12 = g12;
    r.numerator = g12.value * g12.value;
    r.numerator_sigma = 2.0 * g12.value * g12.sigma;
    r.denominator = g11.value * g22.value;
    const double rel11 = g11.sigma / g11.value;
    const double rel22 = g22.sigma / g22.value;
    const double rel12 = g12.sigma / g12.value;
    r.denominator_sigma = r.denominator * std::sqrt(rel11 * rel11 + rel22 * rel22);
    r.ratio = r.numerator / r.denominator;
    r.ratio_sigma = r.ratio * std::sqrt(4.0 * rel12 * rel12 + rel11 * rel11 + rel22 * rel22);
    r.violated = r.ratio > 1.0;
    r.significance = r.ratio_sigma > 0.0 ? (r.ratio - 1.0) / r.ratio_sigma : 0.0;
    return r;
}

ChannelPlan plan_g12() {
    return {{engine::Detector::d1, engine::Gate::g1}, {engine::Detector::d2, engine::Gate::g2}};
}
ChannelPlan plan_g11() {
    return {{engine::Detector::d1, engine::Gate::g1}, {engine::Detector::d2, engine::Gate::g1}};
}
ChannelPlan plan_g22() {
    return {{engine::Detector::d1, engine::Gate::g2}, {engine::Detector::d2, engine::Gate::g2}};
}

CorrelationReport analyze_run(std::span<const engine::DetectionEvent> pair_events,
                              std::span<const engine::DetectionEvent> auto1_events,
                              std::span<const engine::DetectionEvent> auto2_events,
                              const engine::TrialTiming& timing, const AnalysisParams& params) {
    const auto gated12 = engine::gate_events(pair_events, timing);
    const auto gated11 = engine::gate_events(auto1_events, timing);
    const auto gated22 = engine::gate_events(auto2_events, timing);

    CorrelationReport rep;
    rep.trials = timing.trials_per_run;
    rep.hist12 = correlate(gated12, plan_g12(), params.offset_trials, params.bin_width, timing, "12");
    rep.hist11 = correlate(gated11, plan_g11(), params.offset_trials, params.bin_width, timing, "11");
    rep.hist22 = correlate(gated22, plan_g22(), params.offset_trials, params.bin_width, timing, "22");
    rep.m12 = offset_average(rep.hist12);
    rep.m11 = offset_average(rep.hist11);
    rep.m22 = offset_average(rep.hist22);

    const auto t12 = totals(rep.hist12);
    const auto t11 = totals(rep.hist11);
    const auto t22 = totals(rep.hist22);
    rep.g12 = estimate_g(t12.same_trial, t12.offset_sums);
    rep.g11 = estimate_g(t11.same_trial, t11.offset_sums);
    rep.g22 = estimate_g(t22.same_trial, t22.offset_sums);
    rep.cs = cs_test(rep.g11, rep.g22, rep.g12);
    return rep;
}

}  // namespace pairsim::tia
