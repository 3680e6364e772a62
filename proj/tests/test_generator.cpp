#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "vtg/generator.hpp"
#include "vtg/metrics.hpp"
#include "vtg/nurbs.hpp"

using namespace vtg;
using Catch::Approx;

namespace {

NurbsCurve line10() {
    return NurbsCurve(1, {0, 0, 1, 1}, {Vec3(0, 0, 0), Vec3(10, 0, 0)});
}

/// Limits chosen so K_cr = 1/R_n; the other three terms are pushed high.
KinematicLimits nozzle_capped_limits(double r_n_mm) {
    KinematicLimits l;
    l.v_max = 0.1;
    l.A_n = 40.0;
    l.A_t = 40.0;
    l.J_n = 4e4;
    l.J_t = 4e4;
    l.T_s = 1e-3;
    l.R_n = r_n_mm;
    return l;
}

}  // namespace

TEST_CASE("K_cr: worked example with every term", "[vtg]") {
    KinematicLimits l;
    l.v_max = 0.1;
    l.A_n = 1.0;
    l.J_n = 10.0;
    l.T_s = 1e-3;
    l.R_n = 0.2;
    const auto r = compute_kcr(l, 0.01);

    // Each closed-form term evaluated independently (1/m), then converted.
    const double chord_m = 8.0 * 1e-5 / (std::pow(0.1 * 1e-3, 2) + 4.0 * 1e-5 * 1e-5);
    CHECK(r.chord_term == Approx(chord_m / 1000.0).epsilon(1e-12));
    CHECK(r.chord_term == Approx(7.69230769230769).epsilon(1e-12));
    CHECK(r.accel_term == Approx(0.1).epsilon(1e-12));   // 100 1/m
    CHECK(r.jerk_term == Approx(0.1).epsilon(1e-12));    // 100 1/m
    CHECK(r.nozzle_term == Approx(5.0).epsilon(1e-12));  // 5000 1/m
    CHECK(r.k_cr == Approx(0.1).epsilon(1e-12));
}

TEST_CASE("K_cr: nozzle-dominant configuration", "[vtg]") {
    KinematicLimits l;
    l.v_max = 0.1;
    l.A_n = 1e6;
    l.J_n = 1e6;  // keeps the jerk term above 1/R_n as well
    l.T_s = 1e-3;
    l.R_n = 5.0;
    const auto r = compute_kcr(l, 0.01);
    CHECK(r.nozzle_term == Approx(0.2).epsilon(1e-12));
    CHECK(r.k_cr == Approx(0.2).epsilon(1e-12));
    CHECK(r.k_cr == Approx(r.nozzle_term));
}

TEST_CASE("K_cr: all four terms equal", "[vtg]") {
    // Target the common value c = A_n / v_max^2 = 100 1/m and solve the
    // chord term's quadratic for delta.
    KinematicLimits l;
    l.v_max = 0.1;
    l.A_n = 1.0;
    l.J_n = 10.0;  // sqrt(J_n / v^3) = 100 1/m
    l.T_s = 1e-3;
    l.R_n = 10.0;  // 100 1/m
    const double c = 100.0;
    const double vts = l.v_max * l.T_s;
    // 8 d = c ((v T)^2 + 4 d^2)  ->  4c d^2 - 8 d + c (vT)^2 = 0, small root.
    const double delta_m = (8.0 - std::sqrt(64.0 - 16.0 * c * c * vts * vts)) / (8.0 * c);
    const auto r = compute_kcr(l, delta_m * 1000.0);
    CHECK(r.chord_term == Approx(0.1).epsilon(1e-9));
    CHECK(r.accel_term == Approx(0.1).epsilon(1e-12));
    CHECK(r.jerk_term == Approx(0.1).epsilon(1e-12));
    CHECK(r.nozzle_term == Approx(0.1).epsilon(1e-12));
    CHECK(r.k_cr == Approx(0.1).epsilon(1e-9));
}

TEST_CASE("K_cr rejects invalid inputs", "[vtg][errors]") {
    KinematicLimits l;
    CHECK_THROWS_AS(compute_kcr(l, 0.0), DomainError);
    l.v_max = -1;
    CHECK_THROWS_AS(compute_kcr(l, 0.01), DomainError);
}

TEST_CASE("predictor: exact on a uniform-speed line", "[vtg]") {
    const auto line = line10();
    CHECK(predict_parameter(line, 0.0, 1.0) == Approx(0.1).margin(1e-15));
    CHECK(predict_parameter(line, 0.95, 1.0) == 1.0);  // clamped
}

TEST_CASE("predictor: close to the exact arc-length parameter on a circle", "[vtg]") {
    const auto circle = make_circle_xy(Vec3::Zero(), 10.0);
    const double predicted = predict_parameter(circle, 0.1, 0.5);
    const double exact = oracles::param_at_arc_length(circle, 0.1, 0.5);
    CHECK(std::abs(predicted - exact) <= 1e-3);
}

TEST_CASE("corrector: immediate convergence when the predictor is exact", "[vtg]") {
    const auto line = line10();
    const Vec3 p0 = eval_curve(line, 0.0)[0];
    const auto r = correct_parameter(line, 0.1, p0, 1.0, 0.02, 0.5, 20);
    CHECK(r.converged);
    CHECK(r.chord == Approx(1.0).epsilon(1e-12));
    CHECK(r.u == Approx(0.1).margin(1e-9));
}

TEST_CASE("corrector: chord within band on a circle", "[vtg]") {
    const auto circle = make_circle_xy(Vec3::Zero(), 10.0);
    const Vec3 p0 = eval_curve(circle, 0.1)[0];
    const double u0 = predict_parameter(circle, 0.1, 0.5);
    const auto r = correct_parameter(circle, u0, p0, 0.5, 0.02, 0.5, 20);
    CHECK(r.converged);
    CHECK(std::abs(r.chord - 0.5) <= 0.01);
    // The iteration polishes well past the acceptance band.
    CHECK(std::abs(r.chord - 0.5) <= 1e-9);
}

TEST_CASE("corrector: never returns silently out of tolerance", "[vtg][errors]") {
    const auto circle = make_circle_xy(Vec3::Zero(), 10.0);
    const Vec3 p0 = eval_curve(circle, 0.1)[0];
    // Start exactly at the previous parameter: chord 0.
    try {
        const auto r = correct_parameter(circle, 0.1, p0, 0.5, 0.001, 0.5, 20);
        CHECK(std::abs(r.chord - 0.5) <= 0.001 * 0.5);
    } catch (const NewtonStalledError&) {
        SUCCEED("stalled corrector reported");
    } catch (const NewtonNotConvergedError& e) {
        CHECK(e.iterations >= 1);
    }
}

TEST_CASE("generate: straight line at unit steps", "[vtg]") {
    VtgConfig cfg;
    cfg.step_mm = 1.0;
    const auto path = generate_path(line10(), cfg, nozzle_capped_limits(5.0));
    REQUIRE(path.points.size() == 11);
    for (std::size_t i = 0; i < path.points.size(); ++i) {
        CHECK((path.points[i] - Vec3(static_cast<double>(i), 0, 0)).norm() <= 1e-9);
        CHECK(path.curvatures[i] == Approx(0.0).margin(1e-12));
    }
    for (double eps : path.fluctuation_pct) CHECK(std::abs(eps) <= 1e-9);
}

TEST_CASE("generate: circle r=10 contract", "[vtg]") {
    const auto circle = make_circle_xy(Vec3::Zero(), 10.0);
    VtgConfig cfg;
    cfg.step_mm = 1.0;
    const auto limits = nozzle_capped_limits(5.0);  // K_cr = 0.2 1/mm, inactive
    REQUIRE(compute_kcr(limits, cfg.delta_mm).k_cr == Approx(0.2));

    const auto path = generate_path(circle, cfg, limits);
    CHECK((path.points.size() == 63 || path.points.size() == 64));

    // Interior chords are exactly the interpolation step.
    for (std::size_t i = 0; i + 2 < path.points.size(); ++i) {
        const double chord = (path.points[i + 1] - path.points[i]).norm();
        CHECK(std::abs(chord - 1.0) <= 1e-9);
    }
    // All points near the circle (chord interpolation sagitta bound).
    const double sagitta = 10.0 - std::sqrt(100.0 - 0.25);
    for (const auto& p : path.points) CHECK(std::abs(p.norm() - 10.0) <= sagitta + 1e-9);
    // Curvature cap respected; params strictly increase.
    for (std::size_t i = 0; i < path.params.size(); ++i) {
        CHECK(path.curvatures[i] <= 0.2 * (1 + 1e-12));
        if (i > 0) CHECK(path.params[i] > path.params[i - 1]);
    }
    CHECK(path.params.back() == Approx(1.0));
}

TEST_CASE("generate: curvature-infeasible circle errors", "[vtg][errors]") {
    const auto circle = make_circle_xy(Vec3::Zero(), 2.0);  // kappa = 0.5 1/mm
    VtgConfig cfg;
    cfg.step_mm = 0.5;
    const auto limits = nozzle_capped_limits(10.0);  // K_cr = 0.1 1/mm
    CHECK_THROWS_AS(generate_path(circle, cfg, limits), CurvatureInfeasibleError);
}

TEST_CASE("generate: chord-error guarantee when the cap is chord-driven", "[vtg][property]") {
    // L_i = v_max * T_s so the cap's chord term speaks about our spacing.
    KinematicLimits l;
    l.v_max = 1.0;
    l.T_s = 1e-3;
    l.A_n = 1e4;
    l.A_t = 1e4;
    l.J_n = 1e9;
    l.J_t = 1e9;
    l.R_n = 0.05;
    VtgConfig cfg;
    cfg.step_mm = 1.0;
    cfg.delta_mm = 0.0125;
    const auto kcr = compute_kcr(l, cfg.delta_mm);
    REQUIRE(kcr.k_cr == Approx(kcr.chord_term));

    const double radius = 10.1;  // curvature just under the cap
    REQUIRE(1.0 / radius < kcr.k_cr);
    const auto path = generate_path(make_circle_xy(Vec3::Zero(), radius), cfg, l);
    for (std::size_t i = 0; i + 2 < path.points.size(); ++i) {
        const auto r = three_point_curvature(path.points[i], path.points[i + 1],
                                             path.points[i + 2]);
        REQUIRE(r.has_value());
        if (*r == 0.0) continue;
        const double rad = 1.0 / *r;
        const double half = 0.5 * (path.points[i + 1] - path.points[i]).norm();
        const double e_c = rad - std::sqrt(std::max(0.0, rad * rad - half * half));
        CHECK(e_c <= cfg.delta_mm + 1e-9);
    }
}

TEST_CASE("generate: determinism", "[vtg][property]") {
    const auto circle = make_circle_xy(Vec3::Zero(), 10.0);
    VtgConfig cfg;
    const auto limits = nozzle_capped_limits(5.0);
    const auto a = generate_path(circle, cfg, limits);
    const auto b = generate_path(circle, cfg, limits);
    REQUIRE(a.points.size() == b.points.size());
    for (std::size_t i = 0; i < a.points.size(); ++i) {
        CHECK(a.points[i] == b.points[i]);
        CHECK(a.params[i] == b.params[i]);
    }
}

TEST_CASE("speed fluctuation formula", "[vtg]") {
    CHECK(speed_fluctuation(1.0, 1.0) == Approx(0.0).margin(1e-15));
    CHECK(speed_fluctuation(1.0, 0.98) == Approx(2.0).epsilon(1e-12));
    CHECK(speed_fluctuation(2.0, 1.9) == Approx(5.0).epsilon(1e-12));
    CHECK_THROWS_AS(speed_fluctuation(0.0, 1.0), DomainError);
}

TEST_CASE("feedrate: straight path runs at v_max", "[vtg]") {
    KinematicLimits l;
    const std::vector<double> kappa(20, 0.0);
    const auto v = schedule_feeds(kappa, l);
    REQUIRE(v.size() == kappa.size());
    for (double f : v) CHECK(f == Approx(l.v_max));
}

TEST_CASE("feedrate: curvature caps the feed", "[vtg]") {
    KinematicLimits l;
    l.v_max = 1.0;
    l.A_n = 1.0;
    l.J_n = 10.0;
    // kappa = 100 1/m = 0.1 1/mm  ->  v <= sqrt(A_n / kappa) = 0.1 m/s.
    std::vector<double> kappa(9, 0.0);
    kappa[4] = 0.1;
    const auto v = schedule_feeds(kappa, l);
    CHECK(v[4] <= 0.1 + 1e-12);
}

TEST_CASE("feedrate: from rest stays under the reachable-speed envelope", "[vtg]") {
    KinematicLimits l;  // A_t = 1
    FeedrateOptions opts;
    opts.v_start = 0.0;
    const std::vector<double> kappa(2, 0.0);
    const auto v = schedule_feeds(kappa, l, opts);
    REQUIRE(v.size() == 2);
    CHECK(v[0] == 0.0);
    // Constant-acceleration kinematics oracle over L = 1 mm.
    const double reachable = std::sqrt(2.0 * l.A_t * 1e-3);
    CHECK(v[1] <= reachable + 1e-12);
}

TEST_CASE("feedrate: single point yields an empty profile", "[vtg]") {
    KinematicLimits l;
    CHECK(schedule_feeds({0.0}, l).empty());
    CHECK(schedule_feeds({}, l).empty());
}

TEST_CASE("feedrate: full limit compliance on a wavy path", "[vtg][property]") {
    // Fit a wavy polyline, resample it, schedule it, and reconstruct all
    // five kinematic quantities by per-cycle finite differences.
    std::vector<Vec3> pts;
    for (int i = 0; i <= 60; ++i) {
        const double x = i * 0.5;
        pts.emplace_back(x, 4.0 * std::sin(x * 0.4), 0.0);
    }
    const auto fit = fit_curve(pts, 3);
    KinematicLimits l;
    l.v_max = 0.08;
    l.A_n = 0.5;
    l.A_t = 0.5;
    l.J_n = 5.0;
    l.J_t = 5.0;
    l.T_s = 1e-3;
    l.R_n = 0.2;
    VtgConfig cfg;
    cfg.step_mm = 0.5;
    const auto path = generate_path(fit.curve, cfg, l);
    const auto v = schedule_feedrate(path, l);
    REQUIRE(v.size() == path.points.size());

    const double slack = 1.01;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double k_m = path.curvatures[i] * 1000.0;
        CHECK(v[i] <= l.v_max * slack);
        CHECK(v[i] * v[i] * k_m <= l.A_n * slack);
        CHECK(std::pow(v[i], 3) * k_m * k_m <= l.J_n * slack);
        if (i > 0) CHECK(std::abs(v[i] - v[i - 1]) / l.T_s <= l.A_t * slack);
        if (i > 0 && i + 1 < v.size()) {
            const double d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
            CHECK(std::abs(d2) / (l.T_s * l.T_s) <= l.J_t * slack);
        }
    }

    // Equal-chord invariant on the same path.
    for (std::size_t i = 0; i + 2 < path.points.size(); ++i) {
        const double chord = (path.points[i + 1] - path.points[i]).norm();
        CHECK(std::abs(chord - cfg.step_mm) <= 1e-9 * cfg.step_mm);
    }
}
