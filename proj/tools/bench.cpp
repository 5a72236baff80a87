// Benchmark: OpenMP kernels against their serial reference implementations
// (trial generation and the coincidence correlator).

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "pairsim/config.hpp"
#include "pairsim/engine.hpp"
#include "pairsim/tia.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace pairsim;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void bench_generation(const engine::RunConfig& cfg) {
    std::vector<engine::DetectionEvent> events;
    auto t0 = Clock::now();
    events.clear();
    engine::generate_trials_serial(cfg, 0, cfg.timing.trials_per_run, events);
    const double serial = seconds_since(t0);
    const double trials = static_cast<double>(cfg.timing.trials_per_run);
    std::printf("generate  serial          %8.3f s  %10.0f trials/s  (%zu events)\n", serial,
                trials / serial, events.size());

#ifdef _OPENMP
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        t0 = Clock::now();
        std::vector<engine::DetectionEvent> par;
        engine::generate_trials(cfg, 0, cfg.timing.trials_per_run, par);
        const double dt = seconds_since(t0);
        std::printf("generate  openmp x%-2d      %8.3f s  %10.0f trials/s  speedup %.2f%s\n",
                    threads, dt, trials / dt, serial / dt,
                    par == events ? "" : "  MISMATCH");
    }
#endif
}

void bench_correlate(const engine::RunConfig& cfg, const tia::AnalysisParams& params) {
    std::vector<engine::DetectionEvent> events;
    engine::generate_trials(cfg, 0, cfg.timing.trials_per_run, events);
    const auto gated = engine::gate_events(events, cfg.timing);
    const auto plan = tia::plan_g12();

    auto t0 = Clock::now();
    const auto ref = tia::correlate_serial(gated, plan, params.offset_trials, params.bin_width,
                                           cfg.timing);
    const double serial = seconds_since(t0);
    std::printf("correlate serial          %8.3f s  (%llu coincidences)\n", serial,
                static_cast<unsigned long long>(ref.total()));

#ifdef _OPENMP
    for (int threads : {1, 2, 4}) {
        omp_set_num_threads(threads);
        t0 = Clock::now();
        const auto par = tia::correlate(gated, plan, params.offset_trials, params.bin_width,
                                        cfg.timing);
        const double dt = seconds_since(t0);
        std::printf("correlate openmp x%-2d      %8.3f s  speedup %.2f%s\n", threads, dt,
                    serial / dt, par.bins == ref.bins ? "" : "  MISMATCH");
    }
#endif
}

}  // namespace

int main(int argc, char** argv) {
    std::uint64_t trials = 2'000'000;
    if (argc > 1) trials = std::stoull(argv[1]);

    auto sc = io::preset("paper-T60");
    sc.run.timing.trials_per_run = trials;
    std::printf("scenario %s, %llu trials\n", sc.name.c_str(),
                static_cast<unsigned long long>(trials));
    bench_generation(sc.run);
    bench_correlate(sc.run, sc.analysis);
    return 0;
}
