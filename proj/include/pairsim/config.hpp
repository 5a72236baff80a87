#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "pairsim/engine.hpp"
#include "pairsim/tia.hpp"

namespace pairsim::io {

/// A named, self-contained run + analysis configuration.
struct Scenario {
    std::string name;
    std::string description;
    engine::RunConfig run;
    tia::AnalysisParams analysis;

    bool operator==(const Scenario&) const = default;
};

/// Parses one scenario (or a {"scenarios": [...]} collection) from JSON text.
/// Unknown keys are fatal and named by path; out-of-range values name the
/// offending path.
Scenario parse_config(const std::string& text);
std::vector<Scenario> parse_config_multi(const std::string& text);
Scenario load_config_file(const std::string& path, std::string_view name = {});

std::string serialize(const Scenario& sc);
std::string serialize_multi(const std::vector<Scenario>& scenarios);

/// Built-in scenarios, including the fitted reference presets.
const std::vector<Scenario>& presets();
const Scenario& preset(std::string_view name);

/// Digest over every parameter that shapes an event stream (source, timing,
/// seed, dead time, splitter mode). FNV-1a 64 over the canonical text form.
std::uint64_t config_digest(const engine::RunConfig& cfg);
std::string digest_hex(std::uint64_t digest);

/// Assigns a numeric parameter by path (e.g. "source.p", "timing.gate_width",
/// "run.dead_time", "analysis.bin_width"). Unknown paths throw.
void set_param(Scenario& sc, std::string_view path, double value);
double get_param(const Scenario& sc, std::string_view path);

}  // namespace pairsim::io
