// Command-line front end: ingestion, scene generation, resampling, virtual
// machine runs, metrics, energy accounting, and full before/after reports.

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>

#include "vtg/report_io.hpp"
#include "vtg/vtg.hpp"

namespace {

struct GlobalArgs {
    std::string config_file;
    std::string input;
    std::string out_dir = "out";
    std::string pattern;
    bool disable_vtg = false;
    long long seed = 0;  // reserved for randomized utilities; the pipeline is deterministic
};

vtg::PipelineConfig load_or_default(const GlobalArgs& args) {
    vtg::PipelineConfig cfg;
    if (!args.config_file.empty()) cfg = vtg::load_config(args.config_file);
    if (!args.pattern.empty()) {
        const auto p = vtg::pattern_from_string(args.pattern);
        if (!p) throw vtg::ConfigError("--pattern must be line, grid, or concentric");
        cfg.scene.infill.pattern = *p;
    }
    return cfg;
}

void write_json(const std::filesystem::path& file, const vtg::ordered_json& j) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw vtg::IoError("cannot write " + file.string());
    out << j.dump(2) << "\n";
}

int run(const std::string& cmd, const GlobalArgs& args) {
    namespace fs = std::filesystem;
    const vtg::PipelineConfig cfg = load_or_default(args);

    if (cmd == "check") {
        std::cout << vtg::config_to_json(cfg).dump(2) << "\n";
        std::cout << "config ok\n";
        return 0;
    }

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);

    if (cmd == "ingest") {
        const auto input = vtg::input_from_path(args.input);
        const vtg::Toolpath path = vtg::load_input_toolpath(cfg, input);
        vtg::save_toolpath_json(path, (out / "toolpath.json").string());
        std::cout << "wrote " << (out / "toolpath.json").string() << " (" << path.size()
                  << " points)\n";
        return 0;
    }
    if (cmd == "scene") {
        std::vector<std::string> warnings;
        const vtg::Toolpath path = vtg::build_scene_toolpath(cfg.scene, &warnings);
        vtg::save_toolpath_json(path, (out / "scene.json").string());
        for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
        std::cout << "wrote " << (out / "scene.json").string() << " (" << path.size()
                  << " points, pattern " << vtg::to_string(cfg.scene.infill.pattern) << ")\n";
        return 0;
    }

    const auto input = vtg::input_from_path(args.input);

    if (cmd == "vtg") {
        const vtg::Toolpath before = vtg::load_input_toolpath(cfg, input);
        const vtg::VtgApplication app = vtg::apply_vtg(before, cfg);
        vtg::save_toolpath_json(app.path, (out / "toolpath_vtg.json").string());
        vtg::ordered_json curves = vtg::ordered_json::array();
        for (const auto& c : app.curves) curves.push_back(vtg::curve_to_json(c));
        write_json(out / "curves.json", curves);
        std::cout << "wrote " << (out / "toolpath_vtg.json").string() << " ("
                  << before.size() << " -> " << app.path.size() << " points, "
                  << app.curves.size() << " curves)\n";
        return 0;
    }
    if (cmd == "simulate") {
        const vtg::Toolpath path = vtg::load_input_toolpath(cfg, input);
        std::vector<std::string> notices;
        const vtg::RunArtifacts run = vtg::analyze_run(path, cfg, &notices);
        vtg::ReportBundle bundle;
        bundle.after = run;
        bundle.before = run;
        const auto emitted = vtg::emit_plot_data(bundle, args.out_dir);
        vtg::ordered_json j;
        j["deviation_mm"] = {{"max", run.deviation.max},
                             {"min", run.deviation.min},
                             {"mean", run.deviation.mean}};
        j["duration_s"] = run.point_times.back();
        j["notices"] = notices;
        write_json(out / "simulation.json", j);
        std::cout << "simulated " << run.point_times.back() << " s of motion; mean deviation "
                  << run.deviation.mean << " mm\n";
        return 0;
    }
    if (cmd == "metrics") {
        const vtg::Toolpath path = vtg::load_input_toolpath(cfg, input);
        const vtg::PathMetrics m = vtg::compute_path_metrics(path, cfg.vtg.delta_theta);
        write_json(out / "metrics.json", vtg::detail::metrics_to_json(m));
        std::cout << "wrote " << (out / "metrics.json").string() << "\n";
        return 0;
    }
    if (cmd == "energy") {
        const vtg::Toolpath path = vtg::load_input_toolpath(cfg, input);
        std::vector<std::string> notices;
        const vtg::RunArtifacts run = vtg::analyze_run(path, cfg, &notices);
        vtg::ordered_json j;
        j["energy_J"] = {{"servo", run.energy.servo},
                         {"fuse", run.energy.fuse},
                         {"aux", run.energy.aux},
                         {"total_energy_J", run.energy.total}};
        j["carbon_emission_kg"] = run.carbon_kg;
        j["notices"] = notices;
        write_json(out / "energy.json", j);
        std::cout << "total energy " << run.energy.total << " J, carbon " << run.carbon_kg
                  << " kg\n";
        return 0;
    }
    if (cmd == "report") {
        const vtg::ReportBundle bundle = vtg::run_pipeline(cfg, input, args.disable_vtg);
        const auto files = vtg::write_report(bundle, args.out_dir);
        std::cout << "wrote " << files.size() << " artifact files to " << args.out_dir << "\n";
        for (const auto& row : bundle.comparison) {
            std::cout << "  " << row.metric << ": " << row.before << " -> " << row.after;
            if (row.ratio_pct) std::cout << " (" << *row.ratio_pct << "%)";
            std::cout << "\n";
        }
        return 0;
    }
    throw vtg::IoError("unknown subcommand: " + cmd);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"vibration-suppressed toolpath generation and analysis toolkit"};
    app.require_subcommand(1);

    GlobalArgs args;
    app.add_option("--config", args.config_file, "configuration file (JSON)");
    app.add_option("--seed", args.seed,
                   "seed for randomized utilities (the pipeline itself is deterministic)");

    auto add_io = [&](CLI::App* sub, bool needs_input) {
        auto* in = sub->add_option("--input", args.input,
                                   "input file (.gcode/.nc/.g/.json) or 'scene'");
        if (needs_input) in->required();
        sub->add_option("--out", args.out_dir, "output directory");
    };

    auto* check = app.add_subcommand("check", "validate the config and print resolved values");
    (void)check;
    auto* ingest = app.add_subcommand("ingest", "parse an input file to native toolpath JSON");
    add_io(ingest, true);
    auto* scene = app.add_subcommand("scene", "generate the configured analytic scene");
    scene->add_option("--pattern", args.pattern, "infill pattern: line|grid|concentric");
    scene->add_option("--out", args.out_dir, "output directory");
    auto* vtg_cmd = app.add_subcommand("vtg", "fit, resample, and schedule a toolpath");
    add_io(vtg_cmd, false);
    auto* simulate = app.add_subcommand("simulate", "run the virtual machine on a toolpath");
    add_io(simulate, false);
    auto* metrics = app.add_subcommand("metrics", "toolpath quality metrics");
    add_io(metrics, false);
    auto* energy = app.add_subcommand("energy", "energy and carbon accounting");
    add_io(energy, false);
    auto* report = app.add_subcommand("report", "full before/after pipeline report");
    add_io(report, false);
    report->add_option("--pattern", args.pattern, "infill pattern override");
    report->add_flag("--disable-vtg", args.disable_vtg, "compare the input path against itself");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;  // usage problems exit 1
    }

    try {
        return run(app.get_subcommands().front()->get_name(), args);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return vtg::classify_exit_code(e);
    }
}
