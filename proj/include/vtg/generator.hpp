#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

#include "vtg/errors.hpp"
#include "vtg/nurbs.hpp"
#include "vtg/types.hpp"

namespace vtg {

/// Machine kinematic envelope. SI units except the nozzle radius, which is
/// geometry and therefore mm.
struct KinematicLimits {
    double v_max = 0.1;  // m/s
    double A_n = 1.0;    // m/s^2, normal acceleration bound
    double A_t = 1.0;    // m/s^2, tangential acceleration bound
    double J_n = 10.0;   // m/s^3, normal jerk bound
    double J_t = 10.0;   // m/s^3, tangential jerk bound
    double T_s = 1e-3;   // s, interpolation cycle
    double R_n = 0.2;    // mm, nozzle radius

    void validate() const {
        if (!(v_max > 0 && A_n > 0 && A_t > 0 && J_n > 0 && J_t > 0 && T_s > 0 && R_n > 0))
            throw DomainError("kinematic limits must be strictly positive");
    }
};

struct VtgConfig {
    double phi = 0.02;          // Newton acceptance band, fraction of L_i
    double tau = 0.5;           // minimum-segment fraction of L_i
    double step_mm = 1.0;       // L_i, interpolation step
    double delta_mm = 0.01;     // chord-error tolerance feeding the curvature cap
    int max_newton_iters = 20;
    double delta_theta = std::numbers::pi / 4;  // sharp-corner critical angle, rad

    void validate() const {
        if (!(phi > 0 && phi < 1)) throw DomainError("phi must lie in (0,1)");
        if (!(tau > 0 && tau < 1)) throw DomainError("tau must lie in (0,1)");
        if (!(step_mm > 0)) throw DomainError("interpolation step must be positive");
        if (!(delta_mm > 0)) throw DomainError("chord tolerance must be positive");
        if (max_newton_iters < 1) throw DomainError("max_newton_iters must be >= 1");
    }
};

/// Curvature cap and the four terms it is the minimum of, all in 1/mm.
struct KcrResult {
    double k_cr = 0;
    double chord_term = 0;   // 8d / ((v_max T_s)^2 + 4 d^2)
    double accel_term = 0;   // A_n / v_max^2
    double jerk_term = 0;    // sqrt(J_n / v_max^3)
    double nozzle_term = 0;  // 1 / R_n
};

/// Combines the chord-error, acceleration, jerk, and nozzle bounds into the
/// admissible-curvature cap. v_max*T_s is a length in metres and is converted
/// to mm before being combined with delta and R_n; the acceleration and jerk
/// terms are 1/m and are divided by 1000 to land in 1/mm.
inline KcrResult compute_kcr(const KinematicLimits& limits, double delta_mm) {
    limits.validate();
    if (!(delta_mm > 0)) throw DomainError("delta must be positive");

    KcrResult r;
    const double cycle_chord_mm = limits.v_max * limits.T_s * kMmPerM;
    r.chord_term = 8.0 * delta_mm / (cycle_chord_mm * cycle_chord_mm + 4.0 * delta_mm * delta_mm);
    r.accel_term = limits.A_n / (limits.v_max * limits.v_max) / kMmPerM;
    r.jerk_term = std::sqrt(limits.J_n / std::pow(limits.v_max, 3)) / kMmPerM;
    r.nozzle_term = 1.0 / limits.R_n;
    r.k_cr = std::min({r.chord_term, r.accel_term, r.jerk_term, r.nozzle_term});
    return r;
}

/// Second-order Taylor estimate of the parameter that advances the arc by
/// step_mm, clamped to the knot-range maximum.
inline double predict_parameter(const NurbsCurve& curve, double u, double step_mm) {
    const auto d = eval_curve(curve, u, 2);
    const double speed = d[1].norm();
    if (speed < kSingularTolMm)
        throw SingularParameterizationError("predictor hit ||C'|| ~ 0");
    const double s2 = speed * speed;
    double next = u + step_mm / speed -
                  d[1].dot(d[2]) * step_mm * step_mm / (2.0 * s2 * s2);
    return std::min(next, curve.u_max());
}

struct CorrectionResult {
    double u = 0;
    double chord = 0;  // mm, ||C(u) - P_i||, pre-projection
    bool converged = false;
    int iterations = 0;
};

/// Newton iteration on f(u) = ||C(u) - P_i|| - L_i starting from u0. Iterates
/// to numerical convergence (or max_iters) and then checks the acceptance
/// band |chord - L_i| <= phi * L_i; outside the band it raises
/// NewtonNotConvergedError with the best iterate. A converged chord at or
/// below tau * L_i raises StepTooShortError. Iterates are clamped to
/// [u_lo, u_hi] (the knot range by default).
inline CorrectionResult correct_parameter(const NurbsCurve& curve,
                                          double u0,
                                          const Vec3& previous_point,
                                          double step_mm,
                                          double phi,
                                          double tau,
                                          int max_iters,
                                          std::optional<double> u_lo = std::nullopt,
                                          std::optional<double> u_hi = std::nullopt) {
    const double lo = u_lo.value_or(curve.u_min());
    const double hi = u_hi.value_or(curve.u_max());
    const double span = curve.u_max() - curve.u_min();
    const double u_tol = std::numeric_limits<double>::epsilon() * span * 4.0;

    double u = std::clamp(u0, lo, hi);
    double best_u = u;
    double best_err = std::numeric_limits<double>::infinity();
    double chord = 0.0;
    int iter = 0;

    for (; iter < max_iters; ++iter) {
        const auto d = eval_curve(curve, u, 1);
        const Vec3 offset = d[0] - previous_point;
        chord = offset.norm();
        const double f = chord - step_mm;
        if (std::abs(f) < best_err) {
            best_err = std::abs(f);
            best_u = u;
        }
        if (chord < kSingularTolMm)
            throw NewtonStalledError("corrector landed on the previous point");
        const double fprime = offset.dot(d[1]) / chord;
        if (std::abs(fprime) < kSingularTolMm)
            throw NewtonStalledError("corrector derivative F'(u) vanished");
        const double u_next = std::clamp(u - f / fprime, lo, hi);
        if (std::abs(u_next - u) <= u_tol) {
            u = u_next;
            break;
        }
        u = u_next;
    }

    chord = (eval_curve(curve, u)[0] - previous_point).norm();
    if (std::abs(chord - step_mm) > phi * step_mm) {
        // Report the best iterate seen, not necessarily the last.
        const double best_chord = (eval_curve(curve, best_u)[0] - previous_point).norm();
        std::ostringstream os;
        os << "chord correction did not converge: |dL - L| = " << std::abs(best_chord - step_mm)
           << " > " << phi * step_mm << " after " << iter << " iterations";
        throw NewtonNotConvergedError(os.str(), best_u, best_chord, iter);
    }
    if (chord <= tau * step_mm) {
        std::ostringstream os;
        os << "corrected chord " << chord << " mm is at or below the minimum segment "
           << tau * step_mm << " mm";
        throw StepTooShortError(os.str(), chord, tau * step_mm);
    }
    return CorrectionResult{u, chord, true, iter};
}

/// Equal-chord resampling of a curve.
struct InterpolatedPath {
    std::vector<Vec3> points;             // mm
    std::vector<double> params;           // strictly increasing u_i
    std::vector<double> curvatures;       // 1/mm, per point
    std::vector<double> fluctuation_pct;  // per step (size points-1), Eq.-of-motion epsilon
    std::vector<double> feeds;            // m/s, per point; filled by schedule_feedrate
    KcrResult kcr;
};

/// Relative mismatch between the commanded step and the realized chord, in
/// percent.
inline double speed_fluctuation(double step_mm, double chord_mm) {
    if (!(step_mm > 0)) throw DomainError("interpolation step must be positive");
    return (step_mm - chord_mm) / step_mm * 100.0;
}

namespace detail {

/// Bisection fallback for the predictor when ||C'|| vanishes: finds a
/// parameter whose chord from `from` reaches step_mm, or returns u_max when
/// the remaining curve is closer than that.
inline double bisect_chord(const NurbsCurve& curve, double u_i, const Vec3& from, double step_mm) {
    double lo = u_i;
    double hi = curve.u_max();
    if ((eval_curve(curve, hi)[0] - from).norm() <= step_mm) return hi;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        if ((eval_curve(curve, mid)[0] - from).norm() < step_mm)
            lo = mid;
        else
            hi = mid;
    }
    return hi;
}

}  // namespace detail

/// Walks the curve emitting points at exact chord spacing `config.step_mm`,
/// rejecting any point whose curvature reaches the cap K_cr =
/// compute_kcr(limits, config.delta_mm). On a cap violation the local step is
/// halved down to tau * step; if the cap still fails there the interval is
/// reported as infeasible. Accepted points are projected onto the exact
/// chord distance along the direction to C(u_{i+1}); the final point is
/// emitted at C(u_max) and may close a shorter remainder step.
inline InterpolatedPath generate_path(const NurbsCurve& curve,
                                      const VtgConfig& config,
                                      const KinematicLimits& limits) {
    config.validate();
    const KcrResult kcr = compute_kcr(limits, config.delta_mm);
    const double cap = kcr.k_cr * (1.0 + 1e-12);
    const double u_max = curve.u_max();
    const double span = u_max - curve.u_min();

    InterpolatedPath path;
    path.kcr = kcr;

    double u = curve.u_min();
    Vec3 point = eval_curve(curve, u)[0];
    {
        const double kappa0 = curve_curvature(curve, u);
        if (kappa0 > cap) {
            std::ostringstream os;
            os << "curvature " << kappa0 << " 1/mm exceeds cap " << kcr.k_cr
               << " at the curve start";
            throw CurvatureInfeasibleError(os.str(), u, u);
        }
        path.points.push_back(point);
        path.params.push_back(u);
        path.curvatures.push_back(kappa0);
    }

    const std::size_t max_points =
        static_cast<std::size_t>(1e7);  // hard stop against pathological inputs
    while (u < u_max) {
        if (path.points.size() >= max_points)
            throw Error("interpolation produced an implausible number of points");

        double local_step = config.step_mm;
        CorrectionResult corr;
        double kappa = 0.0;
        bool final_point = false;

        for (;;) {
            double u_pred;
            try {
                u_pred = predict_parameter(curve, u, local_step);
            } catch (const SingularParameterizationError&) {
                u_pred = detail::bisect_chord(curve, u, point, local_step);
            }

            if (u_pred >= u_max) {
                const double chord_end = (eval_curve(curve, u_max)[0] - point).norm();
                if (chord_end <= local_step * (1.0 + 1e-9)) {
                    corr = CorrectionResult{u_max, chord_end, true, 0};
                    final_point = true;
                }
            }
            if (!final_point) {
                try {
                    corr = correct_parameter(curve, u_pred, point, local_step, config.phi,
                                             config.tau, config.max_newton_iters, u, u_max);
                } catch (const NewtonStalledError&) {
                    // One perturbed retry, as per the corrector's contract.
                    const double nudge = std::numeric_limits<double>::epsilon() * span;
                    corr = correct_parameter(curve, u_pred + nudge, point, local_step,
                                             config.phi, config.tau, config.max_newton_iters,
                                             u, u_max);
                }
            }

            kappa = curve_curvature(curve, corr.u);
            if (kappa <= cap) break;

            local_step *= 0.5;
            if (local_step < config.tau * config.step_mm) {
                std::ostringstream os;
                os << "curvature " << kappa << " 1/mm exceeds cap " << kcr.k_cr
                   << " 1/mm even at the minimum step";
                throw CurvatureInfeasibleError(os.str(), u, corr.u);
            }
        }

        if (!(corr.u > u) && !final_point)
            throw NewtonStalledError("corrector failed to advance the parameter");

        Vec3 next_point;
        if (final_point) {
            next_point = eval_curve(curve, u_max)[0];
        } else {
            const Vec3 target = eval_curve(curve, corr.u)[0];
            next_point = point + (target - point).normalized() * local_step;
        }
        path.fluctuation_pct.push_back(speed_fluctuation(local_step, corr.chord));
        path.points.push_back(next_point);
        path.params.push_back(corr.u);
        path.curvatures.push_back(kappa);

        u = corr.u;
        point = next_point;
        if (final_point) break;
    }
    return path;
}

/// Velocity caps + smoothing semantics: points are consumed one per
/// interpolation cycle, so the tangential limits discretize to
/// |dv| <= A_t*T_s and |d2v| <= J_t*T_s^2.
struct FeedrateOptions {
    std::optional<double> v_start;  // m/s, cap on the first point
    std::optional<double> v_end;    // m/s, cap on the last point
};

/// Per-point feed schedule for a sequence of curvatures (1/mm). Each point is
/// first capped by v_max and by the normal acceleration/jerk bounds
/// (v^2 k <= A_n, v^3 k^2 <= J_n), then lowered by monotone projection until
/// the tangential per-cycle bounds hold.
inline std::vector<double> schedule_feeds(const std::vector<double>& curvatures_per_mm,
                                          const KinematicLimits& limits,
                                          const FeedrateOptions& opts = {}) {
    limits.validate();
    const std::size_t n = curvatures_per_mm.size();
    if (n < 2) return {};

    std::vector<double> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double k_m = std::max(0.0, curvatures_per_mm[i]) * kMmPerM;  // 1/m
        double cap = limits.v_max;
        if (k_m > 0) {
            cap = std::min(cap, std::sqrt(limits.A_n / k_m));
            cap = std::min(cap, std::cbrt(limits.J_n / (k_m * k_m)));
        }
        v[i] = cap;
    }
    if (opts.v_start) v.front() = std::min(v.front(), *opts.v_start);
    if (opts.v_end) v.back() = std::min(v.back(), *opts.v_end);

    const double dv_max = limits.A_t * limits.T_s;
    const double d2v_max = limits.J_t * limits.T_s * limits.T_s;
    const double tol = 1e-15 * limits.v_max;

    const std::size_t max_sweeps = 200000;
    for (std::size_t sweep = 0; sweep < max_sweeps; ++sweep) {
        double change = 0.0;
        auto lower = [&](double& x, double bound) {
            if (x > bound) {
                change = std::max(change, x - bound);
                x = std::max(bound, 0.0);
            }
        };
        for (std::size_t i = 1; i < n; ++i) lower(v[i], v[i - 1] + dv_max);
        for (std::size_t i = n - 1; i-- > 0;) lower(v[i], v[i + 1] + dv_max);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double d2 = v[i + 1] - 2.0 * v[i] + v[i - 1];
            if (d2 < -d2v_max) {
                lower(v[i], 0.5 * (v[i + 1] + v[i - 1] + d2v_max));
            } else if (d2 > d2v_max) {
                // Convex valley: pull the taller neighbour down.
                if (v[i + 1] >= v[i - 1])
                    lower(v[i + 1], 2.0 * v[i] + d2v_max - v[i - 1]);
                else
                    lower(v[i - 1], 2.0 * v[i] + d2v_max - v[i + 1]);
            }
        }
        if (change <= tol) break;
    }
    return v;
}

/// Feed schedule for an interpolated path, using its per-point curvatures.
inline std::vector<double> schedule_feedrate(const InterpolatedPath& path,
                                             const KinematicLimits& limits,
                                             const FeedrateOptions& opts = {}) {
    return schedule_feeds(path.curvatures, limits, opts);
}

}  // namespace vtg
