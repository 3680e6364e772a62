#pragma once

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "vtg/pipeline.hpp"

namespace vtg {

namespace detail {

/// Deterministic float formatting for plot CSVs.
inline std::string csv_num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline void write_text(const std::filesystem::path& file, const std::string& text) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << text;
}

inline ordered_json metrics_to_json(const PathMetrics& m) {
    ordered_json j;
    j["total_toolpath_length_mm"] = m.length_total;
    j["infill_toolpath_length_mm"] = m.length_infill;
    j["n_total_points"] = m.n_total;
    j["n_infill_points"] = m.n_infill;
    j["n_turning_points"] = m.n_turning;
    j["n_noncollinear_points"] = m.n_noncollinear;
    j["mean_chord_error_mm"] = m.mean_chord_error;
    ordered_json per_layer = ordered_json::array();
    for (const auto& [layer, len] : m.length_per_layer)
        per_layer.push_back({{"layer", layer}, {"length_mm", len}});
    j["length_per_layer"] = std::move(per_layer);
    return j;
}

inline ordered_json run_to_json(const RunArtifacts& run) {
    ordered_json j;
    j["metrics"] = metrics_to_json(run.metrics);
    j["deviation_mm"] = {{"max_toolpath_deviation_mm", run.deviation.max},
                         {"min_toolpath_deviation_mm", run.deviation.min},
                         {"mean_toolpath_deviation_mm", run.deviation.mean}};
    j["energy_J"] = {{"servo", run.energy.servo},
                     {"fuse", run.energy.fuse},
                     {"aux", run.energy.aux},
                     {"total_energy_J", run.energy.total}};
    j["carbon_emission_kg"] = run.carbon_kg;
    j["duration_s"] = run.point_times.empty() ? 0.0 : run.point_times.back();
    ordered_json peaks = ordered_json::array();
    for (const auto& p : run.peaks)
        peaks.push_back({{"frequency_hz", p.frequency_hz}, {"power", p.power}});
    j["psd_top_peaks"] = std::move(peaks);
    ordered_json layers = ordered_json::array();
    for (const auto& la : run.layer_amplitudes) {
        ordered_json jl;
        jl["layer"] = la.layer;
        jl["present"] = la.present;
        jl["rms"] = {la.rms[0], la.rms[1], la.rms[2]};
        jl["peak"] = {la.peak[0], la.peak[1], la.peak[2]};
        jl["combined_rms"] = la.combined_rms;
        layers.push_back(std::move(jl));
    }
    j["layer_amplitudes"] = std::move(layers);
    return j;
}

}  // namespace detail

struct EmitResult {
    std::vector<std::string> files;
    std::vector<std::string> notices;
};

/// Writes the per-figure-family plot CSVs. Sections missing from the bundle
/// are skipped with a notice; an empty bundle writes nothing.
inline EmitResult emit_plot_data(const ReportBundle& bundle, const std::string& out_dir) {
    namespace fs = std::filesystem;
    EmitResult result;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    auto emit = [&](const char* name, const std::string& content) {
        detail::write_text(dir / name, content);
        result.files.push_back(name);
    };
    auto skip = [&](const char* name, const char* why) {
        result.notices.push_back(std::string(name) + " skipped: " + why);
    };

    if (!bundle.after.psd.power.empty()) {
        std::string s = "frequency_hz,power\n";
        for (std::size_t k = 0; k < bundle.after.psd.power.size(); ++k)
            s += detail::csv_num(bundle.after.psd.frequency_hz[k]) + "," +
                 detail::csv_num(bundle.after.psd.power[k]) + "\n";
        emit("psd.csv", s);
    } else {
        skip("psd.csv", "no PSD section");
    }
    if (!bundle.before.psd.power.empty()) {
        std::string s = "frequency_hz,power\n";
        for (std::size_t k = 0; k < bundle.before.psd.power.size(); ++k)
            s += detail::csv_num(bundle.before.psd.frequency_hz[k]) + "," +
                 detail::csv_num(bundle.before.psd.power[k]) + "\n";
        emit("psd_before.csv", s);
    } else {
        skip("psd_before.csv", "no PSD section");
    }

    if (!bundle.after.layer_amplitudes.empty()) {
        std::string s = "layer,rms_x,rms_y,rms_z,relative_rate\n";
        for (std::size_t i = 0; i < bundle.after.layer_amplitudes.size(); ++i) {
            const auto& la = bundle.after.layer_amplitudes[i];
            s += std::to_string(la.layer) + "," + detail::csv_num(la.rms[0]) + "," +
                 detail::csv_num(la.rms[1]) + "," + detail::csv_num(la.rms[2]) + ",";
            if (i < bundle.layer_rates.size() && bundle.layer_rates[i])
                s += detail::csv_num(*bundle.layer_rates[i]);
            else
                s += "undefined";
            s += "\n";
        }
        emit("layers.csv", s);
    } else {
        skip("layers.csv", "no layered-amplitude section");
    }

    if (!bundle.after.sample_times.empty()) {
        std::string s = "time_s,x_cmd_mm,y_cmd_mm,z_cmd_mm,x_sim_mm,y_sim_mm,z_sim_mm,deviation_mm\n";
        for (std::size_t k = 0; k < bundle.after.sample_times.size(); ++k) {
            const auto& c = bundle.after.commanded_mm[k];
            const auto& m = bundle.after.simulated_mm[k];
            s += detail::csv_num(bundle.after.sample_times[k]) + "," + detail::csv_num(c.x()) +
                 "," + detail::csv_num(c.y()) + "," + detail::csv_num(c.z()) + "," +
                 detail::csv_num(m.x()) + "," + detail::csv_num(m.y()) + "," +
                 detail::csv_num(m.z()) + "," + detail::csv_num((c - m).norm()) + "\n";
        }
        emit("trajectory.csv", s);
    } else {
        skip("trajectory.csv", "no simulated trajectory");
    }

    if (!bundle.comparison.empty()) {
        std::string s = "metric,before,after,ratio_percent\n";
        for (const auto& row : bundle.comparison) {
            s += row.metric + "," + detail::csv_num(row.before) + "," +
                 detail::csv_num(row.after) + ",";
            s += row.ratio_pct ? detail::csv_num(*row.ratio_pct) : std::string("undefined");
            s += "\n";
        }
        emit("tables.csv", s);
    } else {
        skip("tables.csv", "no comparison section");
    }

    if (!bundle.pattern_lengths.empty()) {
        std::string s = "layer,h_n_percent,line_mm,grid_mm,concentric_mm\n";
        for (const auto& row : bundle.pattern_lengths)
            s += std::to_string(row.layer) + "," + detail::csv_num(row.h_n) + "," +
                 detail::csv_num(row.line_mm) + "," + detail::csv_num(row.grid_mm) + "," +
                 detail::csv_num(row.concentric_mm) + "\n";
        emit("pattern_lengths.csv", s);
    } else {
        result.notices.push_back("pattern_lengths.csv skipped: not a scene run");
    }
    return result;
}

inline ordered_json report_to_json(const ReportBundle& bundle) {
    ordered_json j;
    j["vtg_enabled"] = bundle.vtg_enabled;
    j["config"] = bundle.resolved_config;
    j["before"] = detail::run_to_json(bundle.before);
    j["after"] = detail::run_to_json(bundle.after);
    ordered_json rows = ordered_json::array();
    for (const auto& row : bundle.comparison) {
        ordered_json r;
        r["metric"] = row.metric;
        r["before"] = row.before;
        r["after"] = row.after;
        if (row.ratio_pct)
            r["ratio_percent"] = *row.ratio_pct;
        else
            r["ratio_percent"] = nullptr;
        rows.push_back(std::move(r));
    }
    j["comparison"] = std::move(rows);
    ordered_json rates = ordered_json::array();
    for (const auto& r : bundle.layer_rates) {
        if (r)
            rates.push_back(*r);
        else
            rates.push_back(nullptr);
    }
    j["layer_relative_rates"] = std::move(rates);
    ordered_json patterns = ordered_json::array();
    for (const auto& row : bundle.pattern_lengths)
        patterns.push_back({{"layer", row.layer},
                            {"h_n_percent", row.h_n},
                            {"line_mm", row.line_mm},
                            {"grid_mm", row.grid_mm},
                            {"concentric_mm", row.concentric_mm}});
    j["pattern_lengths"] = std::move(patterns);
    j["notices"] = bundle.notices;
    return j;
}

/// Writes report.json, the toolpaths, fitted curves, all plot CSVs, and the
/// timestamp sidecar. Returns every file name written.
inline std::vector<std::string> write_report(const ReportBundle& bundle,
                                             const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const fs::path dir(out_dir);

    std::vector<std::string> files;
    EmitResult plots = emit_plot_data(bundle, out_dir);
    files.insert(files.end(), plots.files.begin(), plots.files.end());

    ordered_json report = report_to_json(bundle);
    for (const auto& n : plots.notices) report["notices"].push_back(n);
    report["artifacts"] = files;

    detail::write_text(dir / "report.json", report.dump(2) + "\n");
    files.push_back("report.json");

    save_toolpath_json(bundle.before.toolpath, (dir / "toolpath_before.json").string());
    files.push_back("toolpath_before.json");
    save_toolpath_json(bundle.after.toolpath, (dir / "toolpath_after.json").string());
    files.push_back("toolpath_after.json");

    if (!bundle.curves.empty()) {
        ordered_json jc = ordered_json::array();
        for (const auto& c : bundle.curves) jc.push_back(curve_to_json(c));
        detail::write_text(dir / "curves.json", jc.dump(2) + "\n");
        files.push_back("curves.json");
    }

    // Wall-clock stamp lives outside report.json so reports stay byte-stable.
    {
        const auto now = std::chrono::system_clock::now();
        const auto secs =
            std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
        ordered_json meta;
        meta["generated_unix_time"] = secs;
        detail::write_text(dir / "report.meta.json", meta.dump(2) + "\n");
    }
    return files;
}

}  // namespace vtg
