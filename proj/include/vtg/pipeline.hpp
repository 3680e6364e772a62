#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "vtg/config.hpp"
#include "vtg/dynamics.hpp"
#include "vtg/energy.hpp"
#include "vtg/errors.hpp"
#include "vtg/gcode.hpp"
#include "vtg/generator.hpp"
#include "vtg/metrics.hpp"
#include "vtg/nurbs.hpp"
#include "vtg/psd.hpp"
#include "vtg/scenes.hpp"
#include "vtg/toolpath_json.hpp"

namespace vtg {

/// A missing or unreadable input: an invocation problem, not a numeric one.
class IoError : public Error {
public:
    using Error::Error;
};

/// Wraps a failure with its pipeline stage and layer, keeping the exit-code
/// class of the original error.
class StageError : public Error {
public:
    StageError(const std::string& what, int code) : Error(what), exit_code(code) {}
    int exit_code;
};

inline int classify_exit_code(const std::exception& e) {
    if (const auto* s = dynamic_cast<const StageError*>(&e)) return s->exit_code;
    if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const IoError*>(&e)) return 1;
    if (dynamic_cast<const Error*>(&e)) return 3;
    return 1;
}

namespace detail {

template <typename Fn>
auto with_stage(const char* stage, int layer, Fn&& fn) {
    try {
        return fn();
    } catch (const std::exception& e) {
        std::ostringstream os;
        os << "stage '" << stage << "'";
        if (layer >= 0) os << ", layer " << layer;
        os << ": " << e.what();
        throw StageError(os.str(), classify_exit_code(e));
    }
}

}  // namespace detail

//
// Scene construction
//

inline LayerRegion scene_layer_region(const SceneConfig& scene, int layer_index) {
    const double z = layer_index * scene.layer_height_mm;
    if (scene.kind == "w16") {
        const double h_n = z / scene.w16.total_height * 100.0;
        return w16_layer(h_n, scene.w16);
    }
    LayerRegion region;
    region.z = z;
    region.h_n = z / (scene.layers * scene.layer_height_mm) * 100.0;
    region.circles.push_back(Circle{0.0, 0.0, scene.circle_radius_mm});
    return region;
}

/// Full analytic benchmark toolpath: per layer, perimeter rings (optional)
/// followed by the configured infill pattern.
inline Toolpath build_scene_toolpath(const SceneConfig& scene,
                                     std::vector<std::string>* warnings = nullptr) {
    if (scene.kind == "w16" &&
        scene.layers * scene.layer_height_mm > scene.w16.total_height + 1e-9)
        throw ConfigError("scene layers exceed the W16 total height");
    Toolpath path;
    for (int j = 1; j <= scene.layers; ++j) {
        const LayerRegion region = scene_layer_region(scene, j);
        if (scene.perimeter) {
            const Toolpath perim = generate_perimeter(region, scene.infill.spacing / 2.0, j);
            for (const auto& p : perim.points) path.points.push_back(p);
        }
        auto infill = generate_infill(region, scene.infill, j);
        if (warnings)
            warnings->insert(warnings->end(), infill.warnings.begin(), infill.warnings.end());
        for (const auto& p : infill.toolpath.points) path.points.push_back(p);
    }
    return path;
}

//
// VTG application
//

struct VtgApplication {
    Toolpath path;
    std::vector<NurbsCurve> curves;  // one fitted curve per resampled polyline
};

/// Refits every continuous extrusion polyline, resamples it at equal chords,
/// schedules feeds, and stitches the result back between the original travel
/// moves.
inline VtgApplication apply_vtg(const Toolpath& before, const PipelineConfig& cfg) {
    VtgApplication out;
    const auto spans = split_polylines(before);
    std::size_t next_span = 0;
    std::size_t i = 0;
    while (i < before.points.size()) {
        if (next_span >= spans.size() || spans[next_span].first != i) {
            out.path.points.push_back(before.points[i]);
            ++i;
            continue;
        }
        const auto& span = spans[next_span];
        const auto verts = span.positions(before);
        const auto distinct = detail::dedupe_consecutive(verts, kCoincidentTolMm);
        if (distinct.size() < 2) {
            for (std::size_t k = span.first; k < span.last; ++k)
                out.path.points.push_back(before.points[k]);
            i = span.last;
            ++next_span;
            continue;
        }

        const int degree = std::min(cfg.fit.degree, static_cast<int>(distinct.size()) - 1);
        const FitMode mode = cfg.fit.mode;
        int n_ctrl = cfg.fit.control_points;
        if (mode == FitMode::approximate)
            n_ctrl = std::clamp(n_ctrl, degree + 1, static_cast<int>(distinct.size()));
        const FitResult fit = detail::with_stage("fit", span.layer, [&] {
            return fit_curve(verts, degree, mode, n_ctrl);
        });
        const InterpolatedPath interp = detail::with_stage("vtg", span.layer, [&] {
            return generate_path(fit.curve, cfg.vtg, cfg.limits);
        });
        const std::vector<double> feeds = detail::with_stage("schedule", span.layer, [&] {
            return schedule_feedrate(interp, cfg.limits);
        });

        // The first interpolated point coincides with the polyline start
        // vertex, already emitted when an anchor exists.
        const std::size_t start = span.anchor ? 1 : 0;
        for (std::size_t k = start; k < interp.points.size(); ++k) {
            std::optional<double> feed;
            if (!feeds.empty()) feed = feeds[k];
            out.path.append(interp.points[k], span.role, span.layer, feed);
        }
        out.curves.push_back(fit.curve);
        i = span.last;
        ++next_span;
    }
    return out;
}

//
// Commanded-trajectory timing and virtual machine runs
//

/// Fills missing feeds: extrusion polylines are scheduled from three-point
/// curvature estimates, travel points run at v_max.
inline void fill_feeds(Toolpath& path, const KinematicLimits& limits) {
    for (const auto& span : split_polylines(path)) {
        bool all_set = true;
        for (std::size_t k = span.first; k < span.last; ++k)
            if (!path.points[k].feed) all_set = false;
        if (all_set) continue;

        const auto verts = span.positions(path);
        std::vector<double> kappa(verts.size(), 0.0);
        for (std::size_t v = 0; v + 2 < verts.size(); ++v) {
            const auto k3 = three_point_curvature(verts[v], verts[v + 1], verts[v + 2]);
            if (k3) kappa[v + 1] = *k3;
        }
        const auto feeds = schedule_feeds(kappa, limits);
        if (feeds.empty()) continue;
        const std::size_t offset = span.anchor ? 1 : 0;
        for (std::size_t k = span.first; k < span.last; ++k) {
            const std::size_t vi = k - span.first + offset;
            if (!path.points[k].feed) path.points[k].feed = feeds[vi];
        }
    }
    for (auto& p : path.points)
        if (!p.feed) p.feed = limits.v_max;
}

/// Cumulative arrival time (s) per point: each segment is traversed at the
/// mean of its endpoint feeds.
inline std::vector<double> build_timeline(const Toolpath& path, double v_max) {
    std::vector<double> t(path.points.size(), 0.0);
    for (std::size_t i = 1; i < path.points.size(); ++i) {
        const double dist_m =
            (path.points[i].position - path.points[i - 1].position).norm() / kMmPerM;
        const double va = path.points[i - 1].feed.value_or(v_max);
        const double vb = path.points[i].feed.value_or(v_max);
        const double v = std::max(0.5 * (va + vb), 1e-6);
        t[i] = t[i - 1] + dist_m / v;
    }
    return t;
}

/// Everything measured about one commanded path on the virtual machine.
struct RunArtifacts {
    Toolpath toolpath;
    std::vector<double> point_times;       // s, command timeline (starts at 0)
    std::vector<double> layer_boundaries;  // s, absolute sim time, n_layers+1
    std::array<StateTrajectory, 3> axes;   // one 6-DOF instance per machine axis
    DeviationStats deviation;              // mm, active window
    std::vector<double> sample_times;      // s, decimated active-window grid
    std::vector<Vec3> commanded_mm;        // decimated, origin-shifted
    std::vector<Vec3> simulated_mm;        // decimated
    PsdSpectrum psd;                       // power summed over the three axes
    std::vector<PsdPeak> peaks;
    std::vector<LayerAmplitude> layer_amplitudes;
    EnergyBreakdown energy;
    double carbon_kg = 0;
    PathMetrics metrics;

    RunSummary summary() const {
        RunSummary s;
        s.metrics = metrics;
        s.deviation_max = deviation.max;
        s.deviation_min = deviation.min;
        s.deviation_mean = deviation.mean;
        s.energy_total = energy.total;
        s.carbon_kg = carbon_kg;
        return s;
    }
};

/// Commands `path` to the virtual machine (one lumped model per axis under
/// PD tracking), then collects deviation, vibration, PSD, energy, and metric
/// results.
inline RunArtifacts analyze_run(const Toolpath& path,
                                const PipelineConfig& cfg,
                                std::vector<std::string>* notices = nullptr) {
    if (path.empty()) throw DomainError("cannot analyze an empty toolpath");
    RunArtifacts a;
    a.toolpath = path;
    a.metrics = detail::with_stage(
        "metrics", -1, [&] { return compute_path_metrics(path, cfg.vtg.delta_theta); });

    Toolpath timed = path;
    detail::with_stage("schedule", -1, [&] {
        fill_feeds(timed, cfg.limits);
        return 0;
    });
    a.point_times = build_timeline(timed, cfg.limits.v_max);

    const double lead = cfg.sim.settle_s;
    const double duration = a.point_times.back();
    const double dt = cfg.sim_dt();
    const double T = lead + duration + cfg.sim.settle_s;
    const Vec3 origin = path.points.front().position;

    const LumpedParams params = derive_lumped_params(cfg.machine);
    const SystemMatrices matrices = assemble_matrices(params, cfg.sim.torsion);
    const ServoGains gains = cfg.servo.gains(params.m_4);

    std::array<AxisReference, 3> refs;
    for (int ax = 0; ax < 3; ++ax) {
        auto& ref = refs[ax];
        ref.t.push_back(0.0);
        ref.x.push_back(0.0);
        for (std::size_t k = 0; k < path.points.size(); ++k) {
            const double t = lead + a.point_times[k];
            if (t <= ref.t.back()) continue;  // zero-length segments collapse
            ref.t.push_back(t);
            ref.x.push_back((path.points[k].position[ax] - origin[ax]) / kMmPerM);
        }
        detail::with_stage("simulate", -1, [&] {
            a.axes[ax] = simulate_servo(matrices, ref, gains, params.i_s, dt, T);
            return 0;
        });
    }

    // Active-window sample range [lead, lead + duration].
    const std::size_t n_samples = a.axes[0].steps();
    const std::size_t k_lo =
        std::min(n_samples - 1, static_cast<std::size_t>(std::ceil(lead / dt)));
    const std::size_t k_hi =
        std::min(n_samples - 1, static_cast<std::size_t>(std::floor((lead + duration) / dt)));

    // Deviation between commanded and simulated table position, in mm.
    {
        std::vector<Vec3> cmd, sim;
        cmd.reserve(k_hi - k_lo + 1);
        sim.reserve(k_hi - k_lo + 1);
        for (std::size_t k = k_lo; k <= k_hi; ++k) {
            const double t = a.axes[0].time(k);
            Vec3 c, s;
            for (int ax = 0; ax < 3; ++ax) {
                c[ax] = refs[ax].position(t) * kMmPerM;
                s[ax] = a.axes[ax].q[k](3) * kMmPerM;
            }
            cmd.push_back(c);
            sim.push_back(s);
        }
        a.deviation = trajectory_deviation(cmd, sim);

        // Decimated copy for plot data.
        const std::size_t stride = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(1.0 / (dt * cfg.sim.psd_fs))));
        for (std::size_t k = 0; k < cmd.size(); k += stride) {
            a.sample_times.push_back(a.axes[0].time(k_lo + k));
            a.commanded_mm.push_back(cmd[k]);
            a.simulated_mm.push_back(sim[k]);
        }
    }

    // Layer boundaries in absolute sim time.
    {
        const int n_layers = path.layer_count();
        std::vector<double> starts(n_layers + 1, lead + duration);
        for (std::size_t k = 0; k < path.points.size(); ++k) {
            const int layer = path.points[k].layer;
            starts[layer - 1] = std::min(starts[layer - 1], lead + a.point_times[k]);
        }
        starts[n_layers] = lead + duration;
        a.layer_boundaries = std::move(starts);
    }

    // Per-axis working-table acceleration over the active window.
    std::vector<double> t_active;
    std::array<std::vector<double>, 3> accel;
    for (std::size_t k = k_lo; k <= k_hi; ++k) {
        t_active.push_back(a.axes[0].time(k));
        for (int ax = 0; ax < 3; ++ax) accel[ax].push_back(a.axes[ax].qdd[k](3));
    }
    a.layer_amplitudes = layered_amplitude(t_active, accel, a.layer_boundaries);

    // PSD at the configured analysis rate (decimation from the sim rate).
    {
        const std::size_t stride = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::llround(1.0 / (dt * cfg.sim.psd_fs))));
        const double fs_actual = 1.0 / (dt * static_cast<double>(stride));
        if (notices && std::abs(fs_actual - cfg.sim.psd_fs) > 1e-9 * cfg.sim.psd_fs) {
            std::ostringstream os;
            os << "PSD rate adjusted to " << fs_actual << " Hz (sim dt " << dt << " s)";
            notices->push_back(os.str());
        }
        std::array<std::vector<double>, 3> dec;
        for (int ax = 0; ax < 3; ++ax)
            for (std::size_t k = 0; k < accel[ax].size(); k += stride)
                dec[ax].push_back(accel[ax][k]);
        if (dec[0].size() >= static_cast<std::size_t>(cfg.sim.psd_segment)) {
            for (int ax = 0; ax < 3; ++ax) {
                const PsdSpectrum s =
                    welch_psd(dec[ax], fs_actual, cfg.sim.psd_segment, cfg.sim.psd_overlap);
                if (ax == 0) {
                    a.psd = s;
                } else {
                    for (std::size_t k = 0; k < s.power.size(); ++k) a.psd.power[k] += s.power[k];
                }
            }
            a.peaks = top_peaks(a.psd, 3);
        } else if (notices) {
            std::ostringstream os;
            os << "signal too short for PSD (" << dec[0].size() << " samples at " << fs_actual
               << " Hz, need " << cfg.sim.psd_segment << "); section skipped";
            notices->push_back(os.str());
        }
    }

    // Energy and carbon.
    {
        const double e_servo = servo_energy(std::span<const StateTrajectory>(a.axes));
        const double e_fuse = cfg.energy.fuse_power_w * cfg.energy.fuse_duty * duration;
        const double e_aux = cfg.energy.aux_power_w * cfg.energy.aux_duty * duration;
        a.energy = total_energy(e_servo, e_fuse, e_aux);
        a.carbon_kg = carbon_emission(a.energy.total, cfg.energy.factors);
    }
    return a;
}

//
// Full pipeline
//

enum class InputKind { scene, gcode, toolpath };

struct PipelineInput {
    InputKind kind = InputKind::scene;
    std::string path;  // unused for scenes
};

/// Infers the input kind from a file extension; "scene" (or empty) selects
/// the configured analytic scene.
inline PipelineInput input_from_path(const std::string& path) {
    if (path.empty() || path == "scene") return {InputKind::scene, ""};
    const auto dot = path.find_last_of('.');
    const std::string ext = dot == std::string::npos ? "" : path.substr(dot + 1);
    if (ext == "json") return {InputKind::toolpath, path};
    if (ext == "gcode" || ext == "nc" || ext == "g") return {InputKind::gcode, path};
    throw IoError("cannot infer input kind from '" + path +
                  "' (expected .json, .gcode, .nc, .g, or 'scene')");
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open input file: " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline Toolpath load_input_toolpath(const PipelineConfig& cfg,
                                    const PipelineInput& input,
                                    std::vector<std::string>* warnings = nullptr) {
    switch (input.kind) {
        case InputKind::scene:
            return detail::with_stage("scene", -1,
                                      [&] { return build_scene_toolpath(cfg.scene, warnings); });
        case InputKind::gcode:
            return detail::with_stage(
                "ingest", -1, [&] { return parse_gcode_to_toolpath(read_file(input.path)); });
        case InputKind::toolpath:
            return detail::with_stage("ingest", -1,
                                      [&] { return load_toolpath_json(input.path); });
    }
    throw IoError("unreachable input kind");
}

struct PatternLengthRow {
    int layer = 0;
    double h_n = 0;       // percent
    double line_mm = 0;
    double grid_mm = 0;
    double concentric_mm = 0;
};

/// Infill length per layer for each pattern at the configured spacing.
inline std::vector<PatternLengthRow> pattern_length_study(const SceneConfig& scene) {
    std::vector<PatternLengthRow> rows;
    for (int j = 1; j <= scene.layers; ++j) {
        const LayerRegion region = scene_layer_region(scene, j);
        PatternLengthRow row;
        row.layer = j;
        row.h_n = region.h_n;
        for (const InfillPattern p :
             {InfillPattern::line, InfillPattern::grid, InfillPattern::concentric}) {
            InfillSpec spec = scene.infill;
            spec.pattern = p;
            const auto result = generate_infill(region, spec, j);
            const double len =
                result.toolpath.empty() ? 0.0 : path_lengths(result.toolpath).infill;
            if (p == InfillPattern::line)
                row.line_mm = len;
            else if (p == InfillPattern::grid)
                row.grid_mm = len;
            else
                row.concentric_mm = len;
        }
        rows.push_back(row);
    }
    return rows;
}

struct ReportBundle {
    ordered_json resolved_config;
    bool vtg_enabled = true;
    RunArtifacts before;
    RunArtifacts after;
    std::vector<NurbsCurve> curves;
    ComparisonReport comparison;
    std::vector<std::optional<double>> layer_rates;  // combined-RMS (after-before)/before
    std::vector<PatternLengthRow> pattern_lengths;   // scene inputs only
    std::vector<std::string> notices;
};

/// fit -> resample -> schedule -> simulate -> metrics -> energy -> compare.
inline ReportBundle run_pipeline(const PipelineConfig& cfg,
                                 const PipelineInput& input,
                                 bool disable_vtg = false) {
    ReportBundle bundle;
    bundle.resolved_config = config_to_json(cfg);
    bundle.vtg_enabled = !disable_vtg;

    const Toolpath before = load_input_toolpath(cfg, input, &bundle.notices);
    Toolpath after;
    if (disable_vtg) {
        after = before;
    } else {
        VtgApplication app = apply_vtg(before, cfg);
        after = std::move(app.path);
        bundle.curves = std::move(app.curves);
    }

    bundle.before = analyze_run(before, cfg, &bundle.notices);
    bundle.after = analyze_run(after, cfg, &bundle.notices);
    bundle.comparison = compare(bundle.before.summary(), bundle.after.summary());
    bundle.layer_rates = relative_rates(bundle.before.layer_amplitudes,
                                        bundle.after.layer_amplitudes);
    if (input.kind == InputKind::scene)
        bundle.pattern_lengths = pattern_length_study(cfg.scene);
    return bundle;
}

}  // namespace vtg
