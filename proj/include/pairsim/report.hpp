#pragma once

#include <string>

#include "pairsim/config.hpp"
#include "pairsim/tia.hpp"

namespace pairsim::io {

enum class ReportFormat { json, csv, both };

/// Deterministic text renderings; identical reports give identical strings.
std::string report_json(const tia::CorrelationReport& rep, const Scenario& sc);
std::string report_csv(const tia::CorrelationReport& rep);
std::string histogram_csv(const tia::CoincidenceHistogram& h);
std::string offset_profile_csv(const tia::CoincidenceHistogram& h, const std::vector<double>& m);

/// Writes report.json / report.csv plus hist_{11,22,12}.csv and
/// m_{11,22,12}.csv under `outdir` (created if missing).
void export_report(const tia::CorrelationReport& rep, const Scenario& sc,
                   const std::string& outdir, ReportFormat format = ReportFormat::both);

/// One-line console summary of the three estimates and the verdict.
std::string report_summary(const tia::CorrelationReport& rep);

}  // namespace pairsim::io
