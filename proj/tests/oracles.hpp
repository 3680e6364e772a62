#pragma once

// Independent oracles used by the test suites. Everything here recomputes
// expected values by a route different from the code under test: quadrature,
// finite differences, brute-force geometry, closed-form kinematics.

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "vtg/dynamics.hpp"
#include "vtg/nurbs.hpp"
#include "vtg/types.hpp"

namespace oracles {

/// Adaptive Simpson quadrature.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int depth = 24) {
    std::function<double(double, double, double, double, double, int)> simpson =
        [&](double lo, double hi, double flo, double fmid, double fhi, int d) -> double {
        const double mid = 0.5 * (lo + hi);
        const double lmid = 0.5 * (lo + mid);
        const double rmid = 0.5 * (mid + hi);
        const double flm = f(lmid);
        const double frm = f(rmid);
        const double whole = (hi - lo) / 6.0 * (flo + 4.0 * fmid + fhi);
        const double left = (mid - lo) / 6.0 * (flo + 4.0 * flm + fmid);
        const double right = (hi - mid) / 6.0 * (fmid + 4.0 * frm + fhi);
        if (d <= 0 || std::abs(left + right - whole) < 15.0 * tol)
            return left + right + (left + right - whole) / 15.0;
        return simpson(lo, mid, flo, flm, fmid, d - 1) +
               simpson(mid, hi, fmid, frm, fhi, d - 1);
    };
    const double mid = 0.5 * (a + b);
    return simpson(a, b, f(a), f(mid), f(b), depth);
}

/// Arc length of a curve over [u0, u1] by quadrature of ||C'||.
inline double arc_length(const vtg::NurbsCurve& curve, double u0, double u1) {
    return integrate([&](double u) { return vtg::eval_curve(curve, u, 1)[1].norm(); }, u0, u1);
}

/// Parameter whose arc length from u0 equals s, by bisection.
inline double param_at_arc_length(const vtg::NurbsCurve& curve, double u0, double s) {
    double lo = u0, hi = curve.u_max();
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (arc_length(curve, u0, mid) < s)
            lo = mid;
        else
            hi = mid;
    }
    return 0.5 * (lo + hi);
}

/// Curvature by osculating-circle fit through three nearby curve points,
/// Richardson-extrapolated over shrinking chords.
inline double osculating_curvature(const vtg::NurbsCurve& curve, double u) {
    auto circum_kappa = [&](double h) {
        const vtg::Vec3 a = vtg::eval_curve(curve, u - h)[0];
        const vtg::Vec3 b = vtg::eval_curve(curve, u)[0];
        const vtg::Vec3 c = vtg::eval_curve(curve, u + h)[0];
        const double la = (b - c).norm(), lb = (a - c).norm(), lc = (a - b).norm();
        const double cross2 = (b - a).cross(c - a).norm();
        return 2.0 * cross2 / (la * lb * lc);
    };
    // kappa(h) = kappa + c h^2 + ...; eliminate the h^2 term.
    const double k1 = circum_kappa(1e-3);
    const double k2 = circum_kappa(5e-4);
    return (4.0 * k2 - k1) / 3.0;
}

/// Central-difference Hessian of a scalar function of n variables. Exact for
/// quadratics up to roundoff.
inline std::vector<std::vector<double>> fd_hessian(
    const std::function<double(const std::vector<double>&)>& f, int n, double h = 1e-6) {
    std::vector<std::vector<double>> H(n, std::vector<double>(n, 0.0));
    std::vector<double> x(n, 0.0);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            auto at = [&](double di, double dj) {
                x.assign(n, 0.0);
                x[i] += di;
                x[j] += dj;
                return f(x);
            };
            if (i == j) {
                H[i][j] = (at(h, 0) - 2.0 * at(0, 0) + at(-h, 0)) / (h * h);
            } else {
                H[i][j] = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
            }
        }
    }
    return H;
}

/// Potential energy of the drive model, written straight from its printed
/// form (independent of the matrix assembly).
inline double potential_energy(const vtg::LumpedParams& p, const std::vector<double>& q,
                               double torsion_sign = 1.0) {
    const double x1 = q[0], x2 = q[1], x3 = q[2], x4 = q[3], thM = q[4], thS = q[5];
    const double xs = 0.5 * (x1 + x2);
    const double g = x3 - xs - p.i_s * thS;
    return 0.5 * p.k_n * x1 * x1 + 0.5 * p.k_t * (thM + torsion_sign * thS) *
                                       (thM + torsion_sign * thS) +
           0.5 * p.k_mn * g * g + p.k_mw * (x4 - x3) * (x4 - x3);
}

/// Dissipation function, printed form.
inline double dissipation(const vtg::LumpedParams& p, const std::vector<double>& qd) {
    return p.C_mn * qd[2] * qd[2] + 2.0 * p.C_mw * qd[3] * qd[3];
}

/// Kinetic energy, printed form.
inline double kinetic_energy(const vtg::LumpedParams& p, const vtg::Vec6& qd) {
    return 0.5 * (p.m_1 * qd(0) * qd(0) + p.m_2 * qd(1) * qd(1) + p.m_3 * qd(2) * qd(2) +
                  p.m_4 * qd(3) * qd(3) + p.J_M * qd(4) * qd(4) + p.J_S * qd(5) * qd(5));
}

/// Brute-force scanline length of a line-pattern infill inside a circle:
/// integrates the inside-circle indicator along each scanline.
inline double scanline_length(double radius, double spacing, int steps_per_mm = 2000) {
    double total = 0.0;
    for (int k = -1000; k <= 1000; ++k) {
        const double offset = (k + 0.5) * spacing;
        if (std::abs(offset) >= radius) continue;
        const double dx = 1.0 / steps_per_mm;
        double len = 0.0;
        for (double x = -radius; x <= radius; x += dx) {
            if (x * x + offset * offset <= radius * radius) len += dx;
        }
        total += len;
    }
    return total;
}

inline std::mt19937& rng() {
    static std::mt19937 gen(0x5eed);
    return gen;
}

}  // namespace oracles
