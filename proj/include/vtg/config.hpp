#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "vtg/dynamics.hpp"
#include "vtg/energy.hpp"
#include "vtg/errors.hpp"
#include "vtg/generator.hpp"
#include "vtg/scenes.hpp"

namespace vtg {

using ordered_json = nlohmann::ordered_json;

struct FitSettings {
    int degree = 3;
    FitMode mode = FitMode::interpolate;
    int control_points = 0;  // approximate mode only
};

struct ServoConfig {
    double kp = 1e5;
    double damping_ratio = 0.7;
    std::optional<double> kd;  // overrides the ratio-derived value

    ServoGains gains(double m_4) const {
        if (kd) return ServoGains{kp, *kd};
        return ServoGains::from_ratio(kp, damping_ratio, m_4);
    }
};

struct EnergyConfig {
    double fuse_power_w = 120.0;
    double fuse_duty = 1.0;
    double aux_power_w = 60.0;
    double aux_duty = 1.0;
    EmissionFactors factors;
};

struct SceneConfig {
    std::string kind = "single_circle";  // or "w16"
    InfillSpec infill;
    int layers = 10;
    double layer_height_mm = 0.2;
    double circle_radius_mm = 10.0;  // single_circle
    W16Geometry w16;
    bool perimeter = true;
};

struct SimConfig {
    std::optional<double> dt;  // s; defaults to the interpolation cycle T_s
    double settle_s = 0.25;    // dwell before and after the commanded motion
    double psd_fs = 200.0;     // Hz
    int psd_segment = 512;
    double psd_overlap = 0.5;
    TorsionalSign torsion = TorsionalSign::plus;
};

struct PipelineConfig {
    MachineSpec machine;
    KinematicLimits limits;
    VtgConfig vtg;
    FitSettings fit;
    ServoConfig servo;
    EnergyConfig energy;
    SceneConfig scene;
    SimConfig sim;
    std::string out_dir = "out";

    double sim_dt() const { return sim.dt.value_or(limits.T_s); }
};

namespace detail {

/// Reads one JSON object, remembering which keys were consumed so the rest
/// can be rejected with their location.
class StrictReader {
public:
    StrictReader(const ordered_json* j, std::string location)
        : j_(j), location_(std::move(location)) {
        if (j_ && !j_->is_object())
            throw ConfigError("expected an object at " + location_);
    }

    bool has(const char* key) const { return j_ && j_->contains(key); }

    template <typename T>
    T get(const char* key, T fallback) {
        if (!has(key)) return fallback;
        seen_.insert(key);
        try {
            return j_->at(key).get<T>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("wrong type for " + join(key));
        }
    }

    std::optional<double> get_optional(const char* key) {
        if (!has(key)) return std::nullopt;
        seen_.insert(key);
        try {
            return j_->at(key).get<double>();
        } catch (const nlohmann::json::exception&) {
            throw ConfigError("wrong type for " + join(key));
        }
    }

    StrictReader section(const char* key) {
        if (!has(key)) return StrictReader(nullptr, join(key));
        seen_.insert(key);
        return StrictReader(&j_->at(key), join(key));
    }

    /// Rejects keys nobody consumed, naming their location.
    void finish() const {
        if (!j_) return;
        for (const auto& [key, value] : j_->items()) {
            if (!seen_.count(key))
                throw ConfigError("unknown key " + join(key.c_str()));
        }
    }

private:
    std::string join(const char* key) const {
        return location_.empty() ? key : location_ + "." + key;
    }

    const ordered_json* j_;
    std::string location_;
    std::set<std::string> seen_;
};

}  // namespace detail

/// Builds a config from JSON, filling every absent key with its default and
/// rejecting keys that are not part of the schema.
inline PipelineConfig config_from_json(const ordered_json& root) {
    PipelineConfig c;
    detail::StrictReader top(&root, "");

    {
        auto m = top.section("machine");
        auto s = m.section("screw");
        c.machine.screw.rho = s.get("rho", c.machine.screw.rho);
        c.machine.screw.l_s = s.get("l_s", c.machine.screw.l_s);
        c.machine.screw.r_s = s.get("r_s", c.machine.screw.r_s);
        c.machine.screw.E = s.get("E", c.machine.screw.E);
        c.machine.screw.G = s.get("G", c.machine.screw.G);
        c.machine.screw.i_s = s.get("i_s", c.machine.screw.i_s);
        c.machine.screw.l_n = s.get("l_n", c.machine.screw.l_n);
        s.finish();
        auto n = m.section("nut");
        c.machine.nut.k_c = n.get("k_c", c.machine.nut.k_c);
        c.machine.nut.F_z = n.get("F_z", c.machine.nut.F_z);
        c.machine.nut.C_a = n.get("C_a", c.machine.nut.C_a);
        n.finish();
        c.machine.m_r1 = m.get("m_r1", c.machine.m_r1);
        c.machine.m_c1 = m.get("m_c1", c.machine.m_c1);
        c.machine.J_c1 = m.get("J_c1", c.machine.J_c1);
        c.machine.J_M = m.get("J_M", c.machine.J_M);
        c.machine.k_zn1 = m.get("k_zn1", c.machine.k_zn1);
        c.machine.k_zt1 = m.get("k_zt1", c.machine.k_zt1);
        c.machine.k_mw = m.get("k_mw", c.machine.k_mw);
        c.machine.C_mn = m.get("C_mn", c.machine.C_mn);
        c.machine.C_mw = m.get("C_mw", c.machine.C_mw);
        c.machine.m_3 = m.get("m_3", c.machine.m_3);
        c.machine.m_4 = m.get("m_4", c.machine.m_4);
        m.finish();
    }
    {
        auto l = top.section("limits");
        c.limits.v_max = l.get("v_max", c.limits.v_max);
        c.limits.A_n = l.get("A_n", c.limits.A_n);
        c.limits.A_t = l.get("A_t", c.limits.A_t);
        c.limits.J_n = l.get("J_n", c.limits.J_n);
        c.limits.J_t = l.get("J_t", c.limits.J_t);
        c.limits.T_s = l.get("T_s", c.limits.T_s);
        c.limits.R_n = l.get("R_n", c.limits.R_n);
        l.finish();
    }
    {
        auto v = top.section("vtg");
        c.vtg.phi = v.get("phi", c.vtg.phi);
        c.vtg.tau = v.get("tau", c.vtg.tau);
        c.vtg.step_mm = v.get("step_mm", c.vtg.step_mm);
        c.vtg.delta_mm = v.get("delta_mm", c.vtg.delta_mm);
        c.vtg.max_newton_iters = v.get("max_newton_iters", c.vtg.max_newton_iters);
        c.vtg.delta_theta = v.get("delta_theta", c.vtg.delta_theta);
        c.fit.degree = v.get("fit_degree", c.fit.degree);
        const std::string mode = v.get<std::string>("fit_mode", "interpolate");
        if (mode == "interpolate")
            c.fit.mode = FitMode::interpolate;
        else if (mode == "approximate")
            c.fit.mode = FitMode::approximate;
        else
            throw ConfigError("vtg.fit_mode must be 'interpolate' or 'approximate'");
        c.fit.control_points = v.get("fit_control_points", c.fit.control_points);
        v.finish();
    }
    {
        auto s = top.section("servo");
        c.servo.kp = s.get("kp", c.servo.kp);
        c.servo.damping_ratio = s.get("damping_ratio", c.servo.damping_ratio);
        c.servo.kd = s.get_optional("kd");
        s.finish();
    }
    {
        auto e = top.section("energy");
        c.energy.fuse_power_w = e.get("fuse_power_w", c.energy.fuse_power_w);
        c.energy.fuse_duty = e.get("fuse_duty", c.energy.fuse_duty);
        c.energy.aux_power_w = e.get("aux_power_w", c.energy.aux_power_w);
        c.energy.aux_duty = e.get("aux_duty", c.energy.aux_duty);
        c.energy.factors.f_e = e.get("f_co2_e", c.energy.factors.f_e);
        c.energy.factors.f_m = e.get("f_co2_m", c.energy.factors.f_m);
        c.energy.factors.m_mater = e.get("material_kg", c.energy.factors.m_mater);
        e.finish();
    }
    {
        auto s = top.section("scene");
        c.scene.kind = s.get<std::string>("kind", c.scene.kind);
        if (c.scene.kind != "single_circle" && c.scene.kind != "w16")
            throw ConfigError("scene.kind must be 'single_circle' or 'w16'");
        const std::string pat =
            s.get<std::string>("pattern", to_string(c.scene.infill.pattern));
        const auto parsed = pattern_from_string(pat);
        if (!parsed) throw ConfigError("scene.pattern must be line, grid, or concentric");
        c.scene.infill.pattern = *parsed;
        c.scene.infill.spacing = s.get("spacing_mm", c.scene.infill.spacing);
        c.scene.infill.angle = s.get("angle_rad", c.scene.infill.angle);
        c.scene.layers = s.get("layers", c.scene.layers);
        c.scene.layer_height_mm = s.get("layer_height_mm", c.scene.layer_height_mm);
        c.scene.circle_radius_mm = s.get("circle_radius_mm", c.scene.circle_radius_mm);
        c.scene.perimeter = s.get("perimeter", c.scene.perimeter);
        auto w = s.section("w16");
        c.scene.w16.pitch = w.get("pitch_mm", c.scene.w16.pitch);
        c.scene.w16.cylinder_radius = w.get("cylinder_radius_mm", c.scene.w16.cylinder_radius);
        c.scene.w16.total_height = w.get("total_height_mm", c.scene.w16.total_height);
        w.finish();
        s.finish();
    }
    {
        auto s = top.section("sim");
        c.sim.dt = s.get_optional("dt");
        c.sim.settle_s = s.get("settle_s", c.sim.settle_s);
        c.sim.psd_fs = s.get("psd_fs", c.sim.psd_fs);
        c.sim.psd_segment = s.get("psd_segment", c.sim.psd_segment);
        c.sim.psd_overlap = s.get("psd_overlap", c.sim.psd_overlap);
        const std::string torsion = s.get<std::string>("torsional_sign", "plus");
        if (torsion == "plus")
            c.sim.torsion = TorsionalSign::plus;
        else if (torsion == "minus")
            c.sim.torsion = TorsionalSign::minus;
        else
            throw ConfigError("sim.torsional_sign must be 'plus' or 'minus'");
        s.finish();
    }
    {
        auto o = top.section("output");
        c.out_dir = o.get<std::string>("dir", c.out_dir);
        o.finish();
    }
    top.finish();

    c.machine.validate();
    c.limits.validate();
    c.vtg.validate();
    c.scene.infill.validate();
    if (c.fit.degree < 1) throw ConfigError("vtg.fit_degree must be >= 1");
    if (c.scene.layers < 1) throw ConfigError("scene.layers must be >= 1");
    if (!(c.scene.layer_height_mm > 0)) throw ConfigError("scene.layer_height_mm must be > 0");
    if (!(c.scene.circle_radius_mm > 0)) throw ConfigError("scene.circle_radius_mm must be > 0");
    if (!(c.servo.kp > 0)) throw ConfigError("servo.kp must be > 0");
    if (!(c.sim.psd_fs > 0)) throw ConfigError("sim.psd_fs must be > 0");
    return c;
}

inline PipelineConfig load_config(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw ConfigError("cannot open config file: " + filename);
    ordered_json root;
    try {
        in >> root;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON in config: ") + e.what());
    }
    return config_from_json(root);
}

/// Fully resolved view of a config (defaults applied), for `check` and for
/// embedding in reports.
inline ordered_json config_to_json(const PipelineConfig& c) {
    ordered_json j;
    j["machine"] = {
        {"screw",
         {{"rho", c.machine.screw.rho},
          {"l_s", c.machine.screw.l_s},
          {"r_s", c.machine.screw.r_s},
          {"E", c.machine.screw.E},
          {"G", c.machine.screw.G},
          {"i_s", c.machine.screw.i_s},
          {"l_n", c.machine.screw.l_n}}},
        {"nut",
         {{"k_c", c.machine.nut.k_c}, {"F_z", c.machine.nut.F_z}, {"C_a", c.machine.nut.C_a}}},
        {"m_r1", c.machine.m_r1},
        {"m_c1", c.machine.m_c1},
        {"J_c1", c.machine.J_c1},
        {"J_M", c.machine.J_M},
        {"k_zn1", c.machine.k_zn1},
        {"k_zt1", c.machine.k_zt1},
        {"k_mw", c.machine.k_mw},
        {"C_mn", c.machine.C_mn},
        {"C_mw", c.machine.C_mw},
        {"m_3", c.machine.m_3},
        {"m_4", c.machine.m_4}};
    j["limits"] = {{"v_max", c.limits.v_max}, {"A_n", c.limits.A_n}, {"A_t", c.limits.A_t},
                   {"J_n", c.limits.J_n},     {"J_t", c.limits.J_t}, {"T_s", c.limits.T_s},
                   {"R_n", c.limits.R_n}};
    j["vtg"] = {{"phi", c.vtg.phi},
                {"tau", c.vtg.tau},
                {"step_mm", c.vtg.step_mm},
                {"delta_mm", c.vtg.delta_mm},
                {"max_newton_iters", c.vtg.max_newton_iters},
                {"delta_theta", c.vtg.delta_theta},
                {"fit_degree", c.fit.degree},
                {"fit_mode", c.fit.mode == FitMode::interpolate ? "interpolate" : "approximate"},
                {"fit_control_points", c.fit.control_points}};
    j["servo"] = {{"kp", c.servo.kp}, {"damping_ratio", c.servo.damping_ratio}};
    if (c.servo.kd) j["servo"]["kd"] = *c.servo.kd;
    j["energy"] = {{"fuse_power_w", c.energy.fuse_power_w},
                   {"fuse_duty", c.energy.fuse_duty},
                   {"aux_power_w", c.energy.aux_power_w},
                   {"aux_duty", c.energy.aux_duty},
                   {"f_co2_e", c.energy.factors.f_e},
                   {"f_co2_m", c.energy.factors.f_m},
                   {"material_kg", c.energy.factors.m_mater}};
    j["scene"] = {{"kind", c.scene.kind},
                  {"pattern", to_string(c.scene.infill.pattern)},
                  {"spacing_mm", c.scene.infill.spacing},
                  {"angle_rad", c.scene.infill.angle},
                  {"layers", c.scene.layers},
                  {"layer_height_mm", c.scene.layer_height_mm},
                  {"circle_radius_mm", c.scene.circle_radius_mm},
                  {"perimeter", c.scene.perimeter},
                  {"w16",
                   {{"pitch_mm", c.scene.w16.pitch},
                    {"cylinder_radius_mm", c.scene.w16.cylinder_radius},
                    {"total_height_mm", c.scene.w16.total_height}}}};
    j["sim"] = {{"dt", c.sim_dt()},       {"settle_s", c.sim.settle_s},
                {"psd_fs", c.sim.psd_fs}, {"psd_segment", c.sim.psd_segment},
                {"psd_overlap", c.sim.psd_overlap},
                {"torsional_sign", c.sim.torsion == TorsionalSign::plus ? "plus" : "minus"}};
    j["output"] = {{"dir", c.out_dir}};
    return j;
}

}  // namespace vtg
