#include "pairsim/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace pairsim::pipeline {

namespace {

struct ModeTask {
    engine::SplitterMode mode;
    tia::ChannelPlan plan;
    const char* label;
    io::EventWriter* writer;
};

// One splitter run streamed block-wise into a correlator.
tia::CoincidenceHistogram stream_mode(const io::Scenario& sc, const ModeTask& task,
                                      std::uint64_t block_trials) {
    engine::RunConfig cfg = sc.run;
    cfg.splitter_mode = task.mode;
    cfg.validate();

    tia::Correlator corr(task.plan, sc.analysis.offset_trials, sc.analysis.bin_width, cfg.timing,
                         task.label);
    engine::DeadTimeFilter dead(cfg.dead_time, cfg.timing.trial_period);
    const std::uint64_t trials = cfg.timing.trials_per_run;
    std::vector<engine::DetectionEvent> block;
    for (std::uint64_t t0 = 0; t0 < trials; t0 += block_trials) {
        const std::uint64_t t1 = std::min(trials, t0 + block_trials);
        block.clear();
        engine::generate_trials(cfg, t0, t1, block);
        dead.filter(block);
        if (task.writer) task.writer->append(block);
        const auto gated = engine::gate_events(block, cfg.timing);
        std::size_t i = 0;
        for (std::uint64_t trial = t0; trial < t1; ++trial) {
            std::size_t j = i;
            while (j < gated.size() && gated[j].trial_index == trial) ++j;
            corr.push_trial(trial, std::span(gated).subspan(i, j - i));
            i = j;
        }
    }
    return corr.finish();
}

tia::CorrelationReport report_from_histograms(tia::CoincidenceHistogram h12,
                                              tia::CoincidenceHistogram h11,
                                              tia::CoincidenceHistogram h22,
                                              std::uint64_t trials) {
    tia::CorrelationReport rep;
    rep.trials = trials;
    rep.hist12 = std::move(h12);
    rep.hist11 = std::move(h11);
    rep.hist22 = std::move(h22);
    rep.m12 = tia::offset_average(rep.hist12);
    rep.m11 = tia::offset_average(rep.hist11);
    rep.m22 = tia::offset_average(rep.hist22);
    const auto t12 = tia::totals(rep.hist12);
    const auto t11 = tia::totals(rep.hist11);
    const auto t22 = tia::totals(rep.hist22);
    rep.g12 = tia::estimate_g(t12.same_trial, t12.offset_sums);
    rep.g11 = tia::estimate_g(t11.same_trial, t11.offset_sums);
    rep.g22 = tia::estimate_g(t22.same_trial, t22.offset_sums);
    rep.cs = tia::cs_test(rep.g11, rep.g22, rep.g12);
    return rep;
}

tia::CoincidenceHistogram correlate_file(const std::string& path, const io::Scenario& sc,
                                         engine::SplitterMode mode, tia::ChannelPlan plan,
                                         const char* label, AnalyzeWarnings* warnings) {
    engine::RunConfig cfg = sc.run;
    cfg.splitter_mode = mode;
    const std::string expect = io::digest_hex(io::config_digest(cfg));
    io::EventReader reader(path, expect);
    if (reader.digest_mismatch() && warnings)
        warnings->messages.push_back("digest mismatch: '" + path +
                                     "' was not generated by this configuration");
    tia::Correlator corr(plan, sc.analysis.offset_trials, sc.analysis.bin_width, sc.run.timing,
                         label);
    std::uint64_t trial = 0, next = 0;
    std::vector<engine::DetectionEvent> events;
    while (reader.next_trial(trial, events)) {
        while (next < trial) corr.push_trial(next++, {});
        const auto gated = engine::gate_events(events, sc.run.timing);
        corr.push_trial(trial, gated);
        next = trial + 1;
    }
    return corr.finish();
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Nelder-Mead on an n-dimensional objective; small and deterministic.
std::vector<double> nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                std::vector<double> x0, double step, int max_iter, int& evals) {
    const std::size_t n = x0.size();
    struct Vertex {
        std::vector<double> x;
        double fx;
    };
    std::vector<Vertex> simplex;
    auto eval = [&](std::vector<double> x) {
        ++evals;
        const double fx = f(x);
        return Vertex{std::move(x), fx};
    };
    simplex.push_back(eval(x0));
    for (std::size_t i = 0; i < n; ++i) {
        auto x = x0;
        x[i] += step;
        simplex.push_back(eval(std::move(x)));
    }
    for (int it = 0; it < max_iter; ++it) {
        std::sort(simplex.begin(), simplex.end(),
                  [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
        if (std::abs(simplex.front().fx - simplex.back().fx) < 1e-16) break;
        std::vector<double> centroid(n, 0.0);
        for (std::size_t v = 0; v < n; ++v)
            for (std::size_t i = 0; i < n; ++i) centroid[i] += simplex[v].x[i] / static_cast<double>(n);
        auto blend = [&](double w) {
            std::vector<double> x(n);
            for (std::size_t i = 0; i < n; ++i)
                x[i] = centroid[i] + w * (centroid[i] - simplex[n].x[i]);
            return x;
        };
        auto reflected = eval(blend(1.0));
        if (reflected.fx < simplex[0].fx) {
            auto expanded = eval(blend(2.0));
            simplex[n] = expanded.fx < reflected.fx ? std::move(expanded) : std::move(reflected);
        } else if (reflected.fx < simplex[n - 1].fx) {
            simplex[n] = std::move(reflected);
        } else {
            auto contracted = eval(blend(reflected.fx < simplex[n].fx ? 0.5 : -0.5));
            if (contracted.fx < std::min(reflected.fx, simplex[n].fx)) {
                simplex[n] = std::move(contracted);
            } else {
                for (std::size_t v = 1; v <= n; ++v) {
                    for (std::size_t i = 0; i < n; ++i)
                        simplex[v].x[i] = 0.5 * (simplex[v].x[i] + simplex[0].x[i]);
                    simplex[v] = eval(simplex[v].x);
                }
            }
        }
    }
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.fx < b.fx; });
    return simplex.front().x;
}

}  // namespace

tia::CorrelationReport run_scenario(const io::Scenario& sc, const RunOptions& opt) {
    const ModeTask tasks[3] = {
        {engine::SplitterMode::pair, tia::plan_g12(), "12", opt.pair_writer},
        {engine::SplitterMode::auto1, tia::plan_g11(), "11", opt.auto1_writer},
        {engine::SplitterMode::auto2, tia::plan_g22(), "22", opt.auto2_writer},
    };
    auto h12 = stream_mode(sc, tasks[0], opt.block_trials);
    auto h11 = stream_mode(sc, tasks[1], opt.block_trials);
    auto h22 = stream_mode(sc, tasks[2], opt.block_trials);
    return report_from_histograms(std::move(h12), std::move(h11), std::move(h22),
                                  sc.run.timing.trials_per_run);
}

void simulate_to_file(const engine::RunConfig& cfg, const std::string& path,
                      std::uint64_t block_trials) {
    cfg.validate();
    io::EventWriter writer(path, cfg);
    engine::DeadTimeFilter dead(cfg.dead_time, cfg.timing.trial_period);
    std::vector<engine::DetectionEvent> block;
    const std::uint64_t trials = cfg.timing.trials_per_run;
    for (std::uint64_t t0 = 0; t0 < trials; t0 += block_trials) {
        const std::uint64_t t1 = std::min(trials, t0 + block_trials);
        block.clear();
        engine::generate_trials(cfg, t0, t1, block);
        dead.filter(block);
        writer.append(block);
    }
    writer.close();
}

tia::CorrelationReport analyze_files(const std::string& pair_path, const std::string& auto1_path,
                                     const std::string& auto2_path, const io::Scenario& sc,
                                     AnalyzeWarnings* warnings) {
    auto h12 = correlate_file(pair_path, sc, engine::SplitterMode::pair, tia::plan_g12(), "12",
                              warnings);
    auto h11 = correlate_file(auto1_path, sc, engine::SplitterMode::auto1, tia::plan_g11(), "11",
                              warnings);
    auto h22 = correlate_file(auto2_path, sc, engine::SplitterMode::auto2, tia::plan_g22(), "22",
                              warnings);
    return report_from_histograms(std::move(h12), std::move(h11), std::move(h22),
                                  sc.run.timing.trials_per_run);
}

SingleStreamResult analyze_single_file(const std::string& path, const io::Scenario& sc,
                                       tia::ChannelPlan plan, AnalyzeWarnings* warnings) {
    SingleStreamResult out;
    out.histogram = correlate_file(path, sc, sc.run.splitter_mode, plan, "", warnings);
    out.offset_profile = tia::offset_average(out.histogram);
    const auto t = tia::totals(out.histogram);
    out.estimate = tia::estimate_g(t.same_trial, t.offset_sums);
    return out;
}

EstimatorOracle estimator_oracle(const io::Scenario& sc) {
    EstimatorOracle out;
    if (sc.run.source_model == engine::SourceModel::classical_twin) {
        // Classical twin beams: every normalized correlation is exactly 2.
        out.g11 = out.g22 = out.g12 = 2.0;
        out.defined = sc.run.source.p > 0.0;
        return out;
    }
    const auto gated = engine::gated_source_params(sc.run.source, sc.run.timing);
    const auto ms = stats::predict_report(gated, sc.analysis.cutoff);
    if (!ms.g2_11 || !ms.g2_22 || !ms.g2_12) return out;
    out.g11 = *ms.g2_11;
    out.g22 = *ms.g2_22;
    out.g12 = *ms.g2_12;
    out.defined = true;
    return out;
}

std::vector<SweepRow> sweep(const io::Scenario& base, const std::string& param, double from,
                            double to, int steps) {
    if (steps < 1) throw std::invalid_argument("sweep: steps must be >= 1");
    std::vector<SweepRow> rows;
    for (int i = 0; i < steps; ++i) {
        const double value =
            steps == 1 ? from : from + (to - from) * static_cast<double>(i) / (steps - 1);
        io::Scenario sc = base;
        io::set_param(sc, param, value);

        SweepRow row;
        row.value = value;
        row.p = sc.run.source.p;
        row.ratio_paper = sc.run.source.p > 0.0 ? stats::ideal_cs_ratio_paper(sc.run.source.p) : 0.0;
        const auto oracle = estimator_oracle(sc);
        if (oracle.defined) {
            row.ratio_oracle = oracle.g12 * oracle.g12 / (oracle.g11 * oracle.g22);
            row.oracle_defined = true;
        }
        try {
            row.cs = run_scenario(sc).cs;
            row.mc_defined = true;
        } catch (const std::invalid_argument&) {
            // degenerate run (no coincidences at this grid point); leave the
            // Monte Carlo columns empty instead of aborting the sweep
        }
        rows.push_back(row);
    }
    return rows;
}

std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows) {
    std::ostringstream out;
    out << param
        << ",p,ratio_paper,ratio_oracle,g11,g11_sigma,g22,g22_sigma,g12,g12_sigma,"
           "ratio,ratio_sigma,significance,violated\n";
    out.precision(10);
    for (const auto& r : rows) {
        out << r.value << ',' << r.p << ',' << r.ratio_paper << ',';
        if (r.oracle_defined) out << r.ratio_oracle;
        if (r.mc_defined) {
            out << ',' << r.cs.g11.value << ',' << r.cs.g11.sigma << ',' << r.cs.g22.value << ','
                << r.cs.g22.sigma << ',' << r.cs.g12.value << ',' << r.cs.g12.sigma << ','
                << r.cs.ratio << ',' << r.cs.ratio_sigma << ',' << r.cs.significance << ','
                << (r.cs.violated ? 1 : 0) << '\n';
        } else {
            out << ",,,,,,,,,,\n";
        }
    }
    return out.str();
}

CalibrationResult calibrate(const CalibrationTargets& targets, const engine::TrialTiming& timing,
                            double zeta, double eta) {
    constexpr double kMaxP = 0.999;
    const int cutoff = 64;

    auto make_params = [&](const std::vector<double>& x) {
        stats::SourceParams sp;
        sp.p = kMaxP * sigmoid(x[0]);
        sp.zeta = zeta;
        sp.eta1 = eta;
        sp.eta2 = eta;
        sp.bg1 = std::exp(x[1]);
        // The D2 noise lump is one degree of freedom; only bg2 + leak2 is
        // identifiable, so it is split evenly. leak2 is stored pre-acceptance
        // so that its gate-accepted mean equals the lump's half.
        const double lump = std::exp(x[2]);
        const auto probe = engine::gated_source_params({.leak2 = 1.0}, timing);
        sp.bg2 = lump / 2.0;
        sp.leak2 = probe.leak2 > 0.0 ? (lump / 2.0) / probe.leak2 : lump / 2.0;
        return sp;
    };

    auto predict = [&](const stats::SourceParams& sp) {
        const auto gated = engine::gated_source_params(sp, timing);
        return stats::predict_report(gated, cutoff);
    };

    const double w11 = 1.0, w22 = 1.0, w12 = 2.0;
    auto objective = [&](const std::vector<double>& x) {
        const auto ms = predict(make_params(x));
        if (!ms.g2_11 || !ms.g2_22 || !ms.g2_12) return 1e9;
        const double d11 = *ms.g2_11 - targets.g11;
        const double d22 = *ms.g2_22 - targets.g22;
        const double d12 = *ms.g2_12 - targets.g12;
        return w11 * d11 * d11 + w22 * d22 * d22 + w12 * d12 * d12;
    };

    CalibrationResult res;
    res.targets = targets;
    res.cutoff = cutoff;
    const std::vector<double> x0 = {2.0, std::log(0.02), std::log(0.03)};
    const auto best = nelder_mead(objective, x0, 0.5, 400, res.evaluations);
    res.params = make_params(best);
    const auto ms = predict(res.params);
    res.pred_g11 = *ms.g2_11;
    res.pred_g22 = *ms.g2_22;
    res.pred_g12 = *ms.g2_12;
    res.objective = objective(best);
    return res;
}

}  // namespace pairsim::pipeline
