// pairsim: simulate pulsed photon-pair detection runs and analyze them with a
// time-interval-analyzer pipeline (normalized correlations, Cauchy-Schwarz test).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "pairsim/config.hpp"
#include "pairsim/event_io.hpp"
#include "pairsim/pipeline.hpp"
#include "pairsim/report.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace {

using namespace pairsim;

struct ScenarioArgs {
    std::string preset;
    std::string config_path;
    std::string name;
    std::uint64_t trials = 0;
    std::int64_t seed = -1;
    int threads = 0;
};

void add_scenario_options(CLI::App* cmd, ScenarioArgs& args) {
    auto* p = cmd->add_option("--preset", args.preset, "built-in scenario name");
    auto* c = cmd->add_option("--config", args.config_path, "scenario JSON file");
    p->excludes(c);
    cmd->add_option("--name", args.name, "scenario name inside a multi-scenario file");
    cmd->add_option("--trials", args.trials, "override timing.trials_per_run");
    cmd->add_option("--seed", args.seed, "override run.seed");
    cmd->add_option("--threads", args.threads, "worker threads (0 = library default)");
}

io::Scenario resolve_scenario(const ScenarioArgs& args) {
    io::Scenario sc;
    if (!args.preset.empty())
        sc = io::preset(args.preset);
    else if (!args.config_path.empty())
        sc = io::load_config_file(args.config_path, args.name);
    else
        throw std::runtime_error("pick a scenario with --preset or --config");
    if (args.trials > 0) sc.run.timing.trials_per_run = args.trials;
    if (args.seed >= 0) sc.run.seed = static_cast<std::uint64_t>(args.seed);
#ifdef _OPENMP
    if (args.threads > 0) omp_set_num_threads(args.threads);
#endif
    return sc;
}

void print_warnings(const pipeline::AnalyzeWarnings& warnings) {
    for (const auto& w : warnings.messages) std::cerr << "warning: " << w << "\n";
}

int cmd_presets() {
    for (const auto& sc : io::presets()) {
        std::printf("%-18s trials=%-9llu %s\n", sc.name.c_str(),
                    static_cast<unsigned long long>(sc.run.timing.trials_per_run),
                    sc.description.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"photon pair-correlation simulator and coincidence analyzer"};
    app.require_subcommand(1);

    // simulate
    ScenarioArgs sim_args;
    std::string sim_out = "events.txt";
    std::string sim_mode = "pair";
    auto* sim = app.add_subcommand("simulate", "generate a timestamped event stream");
    add_scenario_options(sim, sim_args);
    sim->add_option("-o,--output", sim_out, "output event file");
    sim->add_option("--mode", sim_mode, "splitter mode: pair|auto1|auto2")
        ->check(CLI::IsMember({"pair", "auto1", "auto2"}));

    // analyze
    ScenarioArgs an_args;
    std::vector<std::string> an_files;
    std::string an_out = "out";
    std::string an_format = "both";
    auto* an = app.add_subcommand("analyze", "correlate event file(s) into a report");
    add_scenario_options(an, an_args);
    an->add_option("files", an_files, "event files: PAIR [AUTO1 AUTO2]")->required();
    an->add_option("-o,--output", an_out, "output directory");
    an->add_option("--format", an_format, "report format: json|csv|both")
        ->check(CLI::IsMember({"json", "csv", "both"}));

    // run
    ScenarioArgs run_args;
    std::string run_out = "out";
    std::string run_format = "both";
    bool run_save_events = false;
    auto* run = app.add_subcommand("run", "simulate all three splitter runs and analyze them");
    add_scenario_options(run, run_args);
    run->add_option("-o,--output", run_out, "output directory");
    run->add_option("--format", run_format, "report format: json|csv|both")
        ->check(CLI::IsMember({"json", "csv", "both"}));
    run->add_flag("--save-events", run_save_events, "also write the three event streams");

    // sweep
    ScenarioArgs sweep_args;
    std::string sweep_param = "source.p";
    double sweep_from = 0.005, sweep_to = 0.05;
    int sweep_steps = 10;
    std::string sweep_out;
    auto* sw = app.add_subcommand("sweep", "vary one parameter over a grid");
    add_scenario_options(sw, sweep_args);
    sw->add_option("--param", sweep_param, "parameter path, e.g. source.p or timing.gate_width");
    sw->add_option("--from", sweep_from, "first value")->required();
    sw->add_option("--to", sweep_to, "last value")->required();
    sw->add_option("--steps", sweep_steps, "number of grid points");
    sw->add_option("-o,--output", sweep_out, "CSV output file (default: stdout)");

    // calibrate
    double cal_g11 = 1.739, cal_g22 = 1.710, cal_g12 = 2.335;
    std::string cal_preset = "paper-T60";
    auto* cal = app.add_subcommand("calibrate", "fit (p, bg1, bg2+leak2) to target estimates");
    cal->add_option("--g11", cal_g11, "target g11");
    cal->add_option("--g22", cal_g22, "target g22");
    cal->add_option("--g12", cal_g12, "target g12");
    cal->add_option("--preset", cal_preset, "timing/efficiency baseline");

    auto* pre = app.add_subcommand("presets", "list built-in scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (pre->parsed()) return cmd_presets();

        if (sim->parsed()) {
            auto sc = resolve_scenario(sim_args);
            if (sim_mode == "auto1") sc.run.splitter_mode = engine::SplitterMode::auto1;
            else if (sim_mode == "auto2") sc.run.splitter_mode = engine::SplitterMode::auto2;
            else sc.run.splitter_mode = engine::SplitterMode::pair;
            pipeline::simulate_to_file(sc.run, sim_out);
            std::printf("wrote %s (%llu trials, digest %s)\n", sim_out.c_str(),
                        static_cast<unsigned long long>(sc.run.timing.trials_per_run),
                        io::digest_hex(io::config_digest(sc.run)).c_str());
            return 0;
        }

        if (an->parsed()) {
            const auto sc = resolve_scenario(an_args);
            const auto format = an_format == "json" ? io::ReportFormat::json
                              : an_format == "csv" ? io::ReportFormat::csv
                                                   : io::ReportFormat::both;
            pipeline::AnalyzeWarnings warnings;
            if (an_files.size() == 3) {
                const auto rep = pipeline::analyze_files(an_files[0], an_files[1], an_files[2], sc,
                                                         &warnings);
                print_warnings(warnings);
                io::export_report(rep, sc, an_out, format);
                std::cout << io::report_summary(rep) << "\n";
            } else if (an_files.size() == 1) {
                const auto res = pipeline::analyze_single_file(an_files[0], sc, tia::plan_g12(),
                                                               &warnings);
                print_warnings(warnings);
                std::filesystem::create_directories(an_out);
                std::ofstream hist(std::filesystem::path(an_out) / "hist.csv");
                hist << io::histogram_csv(res.histogram);
                std::printf("g = %.4f +- %.4f (N=%llu, M=%.1f) -> %s/hist.csv\n",
                            res.estimate.value, res.estimate.sigma,
                            static_cast<unsigned long long>(res.estimate.n_total),
                            res.estimate.m_total, an_out.c_str());
            } else {
                throw std::runtime_error("analyze expects one event file or three (pair auto1 auto2)");
            }
            return 0;
        }

        if (run->parsed()) {
            const auto sc = resolve_scenario(run_args);
            const auto format = run_format == "json" ? io::ReportFormat::json
                              : run_format == "csv" ? io::ReportFormat::csv
                                                    : io::ReportFormat::both;
            std::filesystem::create_directories(run_out);
            pipeline::RunOptions opt;
            std::unique_ptr<io::EventWriter> w12, w11, w22;
            if (run_save_events) {
                auto base = std::filesystem::path(run_out);
                auto cfg = sc.run;
                cfg.splitter_mode = engine::SplitterMode::pair;
                w12 = std::make_unique<io::EventWriter>((base / "pair.events").string(), cfg);
                cfg.splitter_mode = engine::SplitterMode::auto1;
                w11 = std::make_unique<io::EventWriter>((base / "auto1.events").string(), cfg);
                cfg.splitter_mode = engine::SplitterMode::auto2;
                w22 = std::make_unique<io::EventWriter>((base / "auto2.events").string(), cfg);
                opt.pair_writer = w12.get();
                opt.auto1_writer = w11.get();
                opt.auto2_writer = w22.get();
            }
            const auto rep = pipeline::run_scenario(sc, opt);
            io::export_report(rep, sc, run_out, format);
            std::cout << io::report_summary(rep) << "\n";
            return 0;
        }

        if (sw->parsed()) {
            const auto sc = resolve_scenario(sweep_args);
            const auto rows = pipeline::sweep(sc, sweep_param, sweep_from, sweep_to, sweep_steps);
            const auto csv = pipeline::sweep_csv(sweep_param, rows);
            if (sweep_out.empty()) {
                std::cout << csv;
            } else {
                std::ofstream out(sweep_out);
                if (!out) throw std::runtime_error("cannot open '" + sweep_out + "' for writing");
                out << csv;
                std::printf("wrote %s (%zu rows)\n", sweep_out.c_str(), rows.size());
            }
            return 0;
        }

        if (cal->parsed()) {
            const auto base = io::preset(cal_preset);
            const auto res = pipeline::calibrate({cal_g11, cal_g22, cal_g12}, base.run.timing,
                                                 base.run.source.zeta, base.run.source.eta1);
            std::printf("fitted: p=%.16g bg1=%.16g bg2=%.16g leak2=%.16g\n", res.params.p,
                        res.params.bg1, res.params.bg2, res.params.leak2);
            std::printf("predicted: g11=%.6f g22=%.6f g12=%.6f (targets %.3f %.3f %.3f)\n",
                        res.pred_g11, res.pred_g22, res.pred_g12, res.targets.g11, res.targets.g22,
                        res.targets.g12);
            std::printf("objective=%.3e evaluations=%d cutoff=%d\n", res.objective,
                        res.evaluations, res.cutoff);
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
