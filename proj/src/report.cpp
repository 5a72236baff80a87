#include "pairsim/report.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace pairsim::io {

namespace {

using ordered_json = nlohmann::ordered_json;

ordered_json estimate_json(const tia::GEstimate& g) {
    return {{"value", g.value},        {"sigma", g.sigma},
            {"n_total", g.n_total},    {"m_total", g.m_total},
            {"offset_total", g.offset_total}, {"degenerate", g.degenerate}};
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("report: cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("report: write failed for '" + path + "'");
}

std::string fixed(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

}  // namespace

std::string report_json(const tia::CorrelationReport& rep, const Scenario& sc) {
    ordered_json j;
    j["format_version"] = 1;
    j["scenario"] = sc.name;
    j["seed"] = sc.run.seed;
    j["trials"] = rep.trials;
    j["config_digest"] = digest_hex(config_digest(sc.run));
    j["analysis"] = {{"offset_trials", sc.analysis.offset_trials},
                     {"bin_width", sc.analysis.bin_width}};
    j["g11"] = estimate_json(rep.g11);
    j["g22"] = estimate_json(rep.g22);
    j["g12"] = estimate_json(rep.g12);
    j["cauchy_schwarz"] = {{"ratio", rep.cs.ratio},
                           {"ratio_sigma", rep.cs.ratio_sigma},
                           {"numerator", rep.cs.numerator},
                           {"numerator_sigma", rep.cs.numerator_sigma},
                           {"denominator", rep.cs.denominator},
                           {"denominator_sigma", rep.cs.denominator_sigma},
                           {"violated", rep.cs.violated},
                           {"significance", rep.cs.significance}};
    return j.dump(2) + "\n";
}

std::string report_csv(const tia::CorrelationReport& rep) {
    std::ostringstream out;
    out.precision(12);
    out << "quantity,value,sigma,n_total,m_total,offset_total\n";
    const auto row = [&](const char* name, const tia::GEstimate& g) {
        out << name << ',' << g.value << ',' << g.sigma << ',' << g.n_total << ',' << g.m_total
            << ',' << g.offset_total << '\n';
    };
    row("g11", rep.g11);
    row("g22", rep.g22);
    row("g12", rep.g12);
    out << "cs_ratio," << rep.cs.ratio << ',' << rep.cs.ratio_sigma << ",,,\n";
    out << "cs_numerator," << rep.cs.numerator << ',' << rep.cs.numerator_sigma << ",,,\n";
    out << "cs_denominator," << rep.cs.denominator << ',' << rep.cs.denominator_sigma << ",,,\n";
    out << "cs_violated," << (rep.cs.violated ? 1 : 0) << ",,,,\n";
    out << "cs_significance," << rep.cs.significance << ",,,,\n";
    return out.str();
}

std::string histogram_csv(const tia::CoincidenceHistogram& h) {
    std::ostringstream out;
    out << "tau_ns,count\n";
    for (std::size_t i = 0; i < h.bins.size(); ++i)
        out << fixed(h.bin_center(i), 3) << ',' << h.bins[i] << '\n';
    return out.str();
}

std::string offset_profile_csv(const tia::CoincidenceHistogram& h, const std::vector<double>& m) {
    std::ostringstream out;
    out << "tau_ns,mean_count\n";
    for (std::size_t i = 0; i < m.size(); ++i)
        out << fixed(h.bin_center(i), 3) << ',' << fixed(m[i], 6) << '\n';
    return out.str();
}

void export_report(const tia::CorrelationReport& rep, const Scenario& sc,
                   const std::string& outdir, ReportFormat format) {
    std::filesystem::create_directories(outdir);
    const auto path = [&](const char* name) { return (std::filesystem::path(outdir) / name).string(); };
    if (format != ReportFormat::csv) write_text_file(path("report.json"), report_json(rep, sc));
    if (format != ReportFormat::json) write_text_file(path("report.csv"), report_csv(rep));
    write_text_file(path("hist_11.csv"), histogram_csv(rep.hist11));
    write_text_file(path("hist_22.csv"), histogram_csv(rep.hist22));
    write_text_file(path("hist_12.csv"), histogram_csv(rep.hist12));
    write_text_file(path("m_11.csv"), offset_profile_csv(rep.hist11, rep.m11));
    write_text_file(path("m_22.csv"), offset_profile_csv(rep.hist22, rep.m22));
    write_text_file(path("m_12.csv"), offset_profile_csv(rep.hist12, rep.m12));
}

std::string report_summary(const tia::CorrelationReport& rep) {
    std::ostringstream out;
    out << "g11 = " << fixed(rep.g11.value) << " +- " << fixed(rep.g11.sigma)
        << "  g22 = " << fixed(rep.g22.value) << " +- " << fixed(rep.g22.sigma)
        << "  g12 = " << fixed(rep.g12.value) << " +- " << fixed(rep.g12.sigma)
        << "  R = " << fixed(rep.cs.ratio) << " +- " << fixed(rep.cs.ratio_sigma)
        << (rep.cs.violated ? "  [violated, " : "  [satisfied, ")
        << fixed(rep.cs.significance, 1) << " sigma]";
    return out.str();
}

}  // namespace pairsim::io
