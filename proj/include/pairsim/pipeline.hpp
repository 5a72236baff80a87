#pragma once

#include <string>
#include <vector>

#include "pairsim/config.hpp"
#include "pairsim/event_io.hpp"
#include "pairsim/tia.hpp"

namespace pairsim::pipeline {

struct RunOptions {
    io::EventWriter* pair_writer = nullptr;
    io::EventWriter* auto1_writer = nullptr;
    io::EventWriter* auto2_writer = nullptr;
    std::uint64_t block_trials = 16384;  // streaming granularity
};

/// Full measurement: three splitter runs (pair, auto1, auto2) with
/// independent seed streams derived from the scenario seed, streamed in
/// trial blocks through the estimator pipeline. Byte-identical results for
/// any worker count.
tia::CorrelationReport run_scenario(const io::Scenario& sc, const RunOptions& opt = {});

/// Streamed single-mode simulation straight to an event file.
void simulate_to_file(const engine::RunConfig& cfg, const std::string& path,
                      std::uint64_t block_trials = 16384);

struct AnalyzeWarnings {
    std::vector<std::string> messages;
};

/// Estimator pipeline over previously written event files (pair, auto1,
/// auto2 order). Digest mismatches against the scenario are warnings.
tia::CorrelationReport analyze_files(const std::string& pair_path, const std::string& auto1_path,
                                     const std::string& auto2_path, const io::Scenario& sc,
                                     AnalyzeWarnings* warnings = nullptr);

/// Single-stream analysis: correlates one event file under the given channel
/// plan and returns its histogram plus estimate.
struct SingleStreamResult {
    tia::CoincidenceHistogram histogram;
    std::vector<double> offset_profile;
    tia::GEstimate estimate;
};
SingleStreamResult analyze_single_file(const std::string& path, const io::Scenario& sc,
                                       tia::ChannelPlan plan, AnalyzeWarnings* warnings = nullptr);

struct SweepRow {
    double value = 0.0;          // swept parameter value
    double p = 0.0;              // source.p at this row
    double ratio_paper = 0.0;    // [(1+p)/(2p)]^2
    double ratio_oracle = 0.0;   // from the analytic prediction at this row
    bool oracle_defined = false;
    tia::CsReport cs;            // Monte Carlo result, valid when mc_defined
    bool mc_defined = false;     // false when a run had too few coincidences
};

/// Varies one numeric parameter over an inclusive grid and runs the full
/// pipeline at every point, alongside the analytic ratio columns.
std::vector<SweepRow> sweep(const io::Scenario& base, const std::string& param, double from,
                            double to, int steps);
std::string sweep_csv(const std::string& param, const std::vector<SweepRow>& rows);

struct CalibrationTargets {
    double g11 = 1.739;
    double g22 = 1.710;
    double g12 = 2.335;
};

/// Fit of (p, bg1, bg2 + leak2) against the three target estimates with zeta
/// and eta fixed, using the analytic per-gate prediction as forward model.
/// Weighted least squares, weights (1, 1, 2) on (g11, g22, g12); p bounded in
/// (0, 0.999]. See docs/calibration.md.
struct CalibrationResult {
    stats::SourceParams params;  // fitted source; D2 noise split evenly bg2/leak2
    double pred_g11 = 0.0, pred_g22 = 0.0, pred_g12 = 0.0;
    CalibrationTargets targets;
    double objective = 0.0;
    int cutoff = 64;
    int evaluations = 0;
};

CalibrationResult calibrate(const CalibrationTargets& targets, const engine::TrialTiming& timing,
                            double zeta = 0.6, double eta = 0.15);

/// Expected values of the three estimators for a scenario, from the analytic
/// chain over gate-accepted effective parameters.
struct EstimatorOracle {
    double g11 = 0.0, g22 = 0.0, g12 = 0.0;
    bool defined = false;
};
EstimatorOracle estimator_oracle(const io::Scenario& sc);

}  // namespace pairsim::pipeline
