// Acceptance suite: one criterion per section, one PASS/FAIL line each.
// Run all criteria with no arguments, or a single one by number (1-7).
// Seeds are fixed constants chosen before any results were inspected.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <unistd.h>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "pairsim/config.hpp"
#include "pairsim/engine.hpp"
#include "pairsim/event_io.hpp"
#include "pairsim/pipeline.hpp"
#include "pairsim/report.hpp"
#include "pairsim/stats.hpp"
#include "pairsim/tia.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace pairsim;
using Clock = std::chrono::steady_clock;

namespace {

struct Criterion {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& msg) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += msg;
        }
    }
    void note(const std::string& msg) {
        if (!detail.empty()) detail += "; ";
        detail += msg;
    }
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// C1: ideal-source convergence at p = 0.01, 1e6 trials.
Criterion criterion1() {
    Criterion c;
    auto sc = io::preset("ideal-p01");
    sc.run.timing.trials_per_run = 1'000'000;
    sc.run.seed = 101;

    const auto t0 = Clock::now();
    const auto rep = pipeline::run_scenario(sc);
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();

    const auto oracle = pipeline::estimator_oracle(sc);
    c.require(std::abs(oracle.g12 - 102.0) < 1e-6, "analytic cross-correlation is not 102");

    c.note("g11=" + fmt("%.3f", rep.g11.value) + "+-" + fmt("%.3f", rep.g11.sigma) +
           " g22=" + fmt("%.3f", rep.g22.value) + "+-" + fmt("%.3f", rep.g22.sigma) +
           " g12=" + fmt("%.2f", rep.g12.value) + "+-" + fmt("%.2f", rep.g12.sigma));
    c.require(std::abs(rep.g11.value - 2.0) <= 0.05,
              "g11 outside 2 +- 0.05 (statistical spread of the estimator at 1e6 trials is ~0.3)");
    c.require(std::abs(rep.g22.value - 2.0) <= 0.05,
              "g22 outside 2 +- 0.05 (statistical spread of the estimator at 1e6 trials is ~0.3)");
    c.require(std::abs(rep.g12.value - oracle.g12) <= 5.0 * rep.g12.sigma,
              "g12 further than 5 sigma from the analytic 102");
    c.require(elapsed < 30.0, "runtime " + fmt("%.1f", elapsed) + "s exceeds 30s");
    return c;
}

// ---------------------------------------------------------------------------
// C2: sweep over p emits both ideal-ratio formulas; 2% agreement and
// Monte Carlo consistency with the analytic column at every row.
Criterion criterion2() {
    Criterion c;
    auto sc = io::preset("ideal-p01");
    sc.run.timing.trials_per_run = 1'000'000;
    sc.run.seed = 202;

    const auto rows = pipeline::sweep(sc, "source.p", 0.005, 0.05, 10);
    c.require(rows.size() == 10, "sweep did not produce 10 rows");
    int formula_fails = 0, mc_fails = 0;
    for (const auto& row : rows) {
        const double rel = std::abs(row.ratio_paper - row.ratio_oracle) / row.ratio_paper;
        if (rel > 0.02) ++formula_fails;
        if (!row.oracle_defined || !row.mc_defined ||
            std::abs(row.cs.ratio - row.ratio_oracle) > 5.0 * row.cs.ratio_sigma)
            ++mc_fails;
        std::printf("    p=%.3f  paper=%9.2f  oracle=%9.2f  rel=%.4f  R_mc=%9.2f +- %7.2f\n",
                    row.p, row.ratio_paper, row.ratio_oracle, rel, row.cs.ratio,
                    row.cs.ratio_sigma);
    }
    c.require(formula_fails == 0,
              std::to_string(formula_fails) +
                  " rows exceed 2% formula agreement (the adopted pair model differs from the "
                  "quoted ideal ratio at relative order 2p)");
    c.require(mc_fails == 0, std::to_string(mc_fails) + " rows fail the 5-sigma Monte Carlo check");
    return c;
}

// ---------------------------------------------------------------------------
// C3: calibration-reproduction of the reference measurement at 1e7 trials.
Criterion criterion3() {
    Criterion c;
    const auto t0 = Clock::now();

    auto sc = io::preset("paper-T60");
    const auto fit = pipeline::calibrate({}, sc.run.timing, sc.run.source.zeta,
                                         sc.run.source.eta1);
    c.require(std::abs(fit.params.p - sc.run.source.p) <= 1e-6 * sc.run.source.p &&
                  std::abs(fit.params.bg1 - sc.run.source.bg1) <= 1e-6 * sc.run.source.bg1 &&
                  std::abs(fit.params.bg2 - sc.run.source.bg2) <= 1e-6 * sc.run.source.bg2 &&
                  std::abs(fit.params.leak2 - sc.run.source.leak2) <= 1e-6 * sc.run.source.leak2,
              "shipped preset constants do not match a fresh calibration fit");

    sc.run.timing.trials_per_run = 10'000'000;
    sc.run.seed = 303;
    const auto rep = pipeline::run_scenario(sc);
    const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();

    c.note("g11=" + fmt("%.4f", rep.g11.value) + " g22=" + fmt("%.4f", rep.g22.value) +
           " g12=" + fmt("%.4f", rep.g12.value) + " R=" + fmt("%.4f", rep.cs.ratio) + "+-" +
           fmt("%.4f", rep.cs.ratio_sigma));
    c.require(std::abs(rep.g11.value - 1.739) <= 0.06, "g11 outside 1.739 +- 0.06");
    c.require(std::abs(rep.g22.value - 1.710) <= 0.06, "g22 outside 1.710 +- 0.06");
    c.require(std::abs(rep.g12.value - 2.335) <= 0.06, "g12 outside 2.335 +- 0.06");
    c.require(rep.cs.ratio >= 1.7 && rep.cs.ratio <= 2.0, "R outside [1.7, 2.0]");
    c.require(rep.cs.violated && rep.cs.significance > 5.0, "violation below 5 sigma");
    c.require(elapsed < 300.0, "runtime " + fmt("%.0f", elapsed) + "s exceeds 300s");
    return c;
}

// ---------------------------------------------------------------------------
// C4: widening the gates with unchanged rate densities must strictly lower
// g22 and keep the violation.
Criterion criterion4() {
    Criterion c;
    auto t60 = io::preset("paper-T60");
    t60.run.timing.trials_per_run = 4'000'000;
    t60.run.seed = 404;
    auto t140 = io::preset("paper-T140");
    t140.run.timing.trials_per_run = 4'000'000;
    t140.run.seed = 404;

    const auto rep60 = pipeline::run_scenario(t60);
    const auto rep140 = pipeline::run_scenario(t140);
    c.note("g22: T60=" + fmt("%.4f", rep60.g22.value) + "+-" + fmt("%.4f", rep60.g22.sigma) +
           " T140=" + fmt("%.4f", rep140.g22.value) + "+-" + fmt("%.4f", rep140.g22.sigma) +
           "; T140 R=" + fmt("%.3f", rep140.cs.ratio));
    c.require(rep140.g22.value < rep60.g22.value, "g22 did not decrease at T = 140");
    c.require(rep140.cs.violated && rep140.cs.significance > 5.0,
              "T = 140 run no longer violates the bound");
    return c;
}

// ---------------------------------------------------------------------------
// C5: classical configurations must not fake a violation (at most 1 run in
// 100 above 3 sigma, per scenario).
Criterion criterion5() {
    Criterion c;
    for (const char* name : {"backgrounds-only", "classical-twin"}) {
        auto sc = io::preset(name);
        sc.run.timing.trials_per_run = 100'000;
        int flagged = 0;
        for (int i = 0; i < 100; ++i) {
            sc.run.seed = 5000 + static_cast<std::uint64_t>(i);
            const auto rep = pipeline::run_scenario(sc);
            if (rep.cs.violated && rep.cs.significance > 3.0) ++flagged;
        }
        c.note(std::string(name) + ": " + std::to_string(flagged) + "/100 flagged");
        c.require(flagged <= 1, std::string(name) + " flagged " + std::to_string(flagged) +
                                    " of 100 runs above 3 sigma");
    }
    return c;
}

// ---------------------------------------------------------------------------
// C6: correlation kernel vs the all-pairs oracle, and totals/offset averages
// on crafted histograms.
Criterion criterion6() {
    Criterion c;
    std::mt19937 gen(606);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    engine::TrialTiming timing;
    timing.trials_per_run = 40;
    timing.finalize_defaults();

    int mismatches = 0;
    for (int rep = 0; rep < 50; ++rep) {
        const int k = 1 + static_cast<int>(unif(gen) * 11);
        const double bin_width = std::vector<double>{1.0, 2.0, 4.0}[rep % 3];
        std::vector<engine::GatedEvent> events;
        for (std::uint64_t trial = 0; trial < 40; ++trial) {
            const auto per_trial = static_cast<std::size_t>(unif(gen) * 25.0);
            std::vector<double> times(per_trial);
            for (auto& t : times) t = unif(gen) * 4000.0;
            std::sort(times.begin(), times.end());
            for (double t : times)
                events.push_back({trial,
                                  unif(gen) < 0.5 ? engine::Detector::d1 : engine::Detector::d2,
                                  unif(gen) < 0.5 ? engine::Gate::g1 : engine::Gate::g2, t});
        }
        const auto plan = rep % 2 ? tia::plan_g12() : tia::plan_g11();
        const auto expected = oracles::allpairs_correlate(events, plan, k, bin_width, 4000.0);
        if (tia::correlate(events, plan, k, bin_width, timing).bins != expected) ++mismatches;
        if (tia::correlate_serial(events, plan, k, bin_width, timing).bins != expected)
            ++mismatches;
    }
    c.require(mismatches == 0,
              std::to_string(mismatches) + " correlation results differ from the all-pairs oracle");

    // crafted histograms with hand-computed totals
    auto make = [](std::vector<std::pair<double, std::uint64_t>> marks) {
        tia::CoincidenceHistogram h;
        h.bin_width = 2.0;
        h.trial_period = 4000.0;
        h.offset_trials = 10;
        h.bins.assign(h.bins_per_peak() * 11, 0);
        for (const auto& [tau, count] : marks)
            h.bins[static_cast<std::size_t>((tau - h.tau_min()) / h.bin_width)] += count;
        return h;
    };
    {
        const auto t = tia::totals(make({{100.0, 1}}));
        c.require(t.same_trial == 1 && t.offset_mean == 0.0, "crafted histogram A totals wrong");
    }
    {
        std::vector<std::pair<double, std::uint64_t>> marks;
        for (int k = 1; k <= 10; ++k) marks.push_back({4000.0 * k + 50.0, 7});
        const auto h = make(marks);
        const auto t = tia::totals(h);
        const auto m = tia::offset_average(h);
        const auto bin = static_cast<std::size_t>((50.0 - h.tau_min()) / h.bin_width);
        c.require(t.same_trial == 0 && t.offset_mean == 7.0 && m[bin] == 7.0,
                  "crafted histogram B totals/average wrong");
    }
    {
        std::vector<std::pair<double, std::uint64_t>> marks{{-20.0, 2}, {404.0, 3}};
        for (std::uint64_t k = 1; k <= 10; ++k) marks.push_back({4000.0 * k + 404.0, k});
        const auto h = make(marks);
        const auto t = tia::totals(h);
        const auto m = tia::offset_average(h);
        const auto bin = static_cast<std::size_t>((404.0 - h.tau_min()) / h.bin_width);
        // same-trial: 2 + 3; offset peaks sum 1..10 -> mean 5.5, all at one bin
        c.require(t.same_trial == 5 && t.offset_mean == 5.5 && m[bin] == 5.5,
                  "crafted histogram C totals/average wrong");
    }
    return c;
}

// ---------------------------------------------------------------------------
// C7: byte-identical pipeline outputs across worker counts; event-file
// round-trip identity on a 1e6-event stream.
Criterion criterion7() {
    Criterion c;
    const auto dir = std::filesystem::temp_directory_path() /
                     ("pairsim_accept_" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);

    auto sc = io::preset("paper-T60");
    sc.run.timing.trials_per_run = 200'000;
    sc.run.seed = 707;

    auto run_with_events = [&](const std::filesystem::path& where) {
        std::filesystem::create_directories(where);
        auto cfg = sc.run;
        cfg.splitter_mode = engine::SplitterMode::pair;
        io::EventWriter w12((where / "pair.events").string(), cfg);
        cfg.splitter_mode = engine::SplitterMode::auto1;
        io::EventWriter w11((where / "auto1.events").string(), cfg);
        cfg.splitter_mode = engine::SplitterMode::auto2;
        io::EventWriter w22((where / "auto2.events").string(), cfg);
        pipeline::RunOptions opt;
        opt.pair_writer = &w12;
        opt.auto1_writer = &w11;
        opt.auto2_writer = &w22;
        const auto rep = pipeline::run_scenario(sc, opt);
        w12.close();
        w11.close();
        w22.close();
        std::ofstream(where / "report.json", std::ios::binary) << io::report_json(rep, sc);
    };

#ifdef _OPENMP
    omp_set_num_threads(1);
#endif
    run_with_events(dir / "w1");
#ifdef _OPENMP
    omp_set_num_threads(2);
#endif
    run_with_events(dir / "w2");
#ifdef _OPENMP
    omp_set_num_threads(omp_get_num_procs());
#endif
    for (const char* name : {"report.json", "pair.events", "auto1.events", "auto2.events"}) {
        const bool same = slurp(dir / "w1" / name) == slurp(dir / "w2" / name);
        c.require(same, std::string(name) + " differs between 1 and 2 workers");
    }

    // round-trip identity on a >= 1e6-event stream (~2.6 events per trial)
    auto big = sc;
    big.run.timing.trials_per_run = 420'000;
    big.run.splitter_mode = engine::SplitterMode::pair;
    const auto path1 = (dir / "big.events").string();
    pipeline::simulate_to_file(big.run, path1);
    const auto contents = io::read_events_file(path1);
    c.note(std::to_string(contents.events.size()) + " events round-tripped");
    c.require(contents.events.size() >= 1'000'000, "stream smaller than 1e6 events");
    const auto path2 = (dir / "big2.events").string();
    io::write_events_file(path2, contents.events, big.run);
    c.require(slurp(path1) == slurp(path2), "round-trip serialization differs");

    std::filesystem::remove_all(dir);
    return c;
}

struct Entry {
    int number;
    const char* name;
    Criterion (*fn)();
};

const Entry kCriteria[] = {
    {1, "ideal-source convergence", criterion1},
    {2, "ideal ratio formulas over the p sweep", criterion2},
    {3, "calibration-reproduction of the reference values", criterion3},
    {4, "gate-width variant direction", criterion4},
    {5, "classical bound false-positive suite", criterion5},
    {6, "correlator oracle equivalence", criterion6},
    {7, "determinism and event-file format", criterion7},
};

}  // namespace

int main(int argc, char** argv) {
    int selected = 0;
    if (argc > 1) selected = std::atoi(argv[1]);

    int failures = 0;
    for (const auto& entry : kCriteria) {
        if (selected != 0 && entry.number != selected) continue;
        const auto t0 = Clock::now();
        const auto result = entry.fn();
        const double elapsed = std::chrono::duration<double>(Clock::now() - t0).count();
        std::printf("[%s] C%d %s (%.1fs)%s%s\n", result.ok ? "PASS" : "FAIL", entry.number,
                    entry.name, elapsed, result.detail.empty() ? "" : " -- ",
                    result.detail.c_str());
        if (!result.ok) ++failures;
    }
    return failures;
}
