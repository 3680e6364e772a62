#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <vector>

#include "vtg/errors.hpp"
#include "vtg/types.hpp"

namespace vtg {

/// Catalog-level description of one ball-screw drive axis.
struct MachineSpec {
    struct Screw {
        double rho = 7850.0;    // kg/m^3
        double l_s = 1.2;       // m, screw length
        double r_s = 0.01;      // m, screw radius
        double E = 2.06e11;     // Pa
        double G = 7.9e10;      // Pa
        double i_s = 1.59155e-3;  // m/rad, transmission ratio (10 mm lead)
        double l_n = 0.6;       // m, nut-to-coupling length
    } screw;

    double m_r1 = 1.2;    // kg, internal rotor
    double m_c1 = 0.3;    // kg, coupling
    double J_c1 = 2e-4;   // kg m^2, coupling inertia
    double J_M = 8e-4;    // kg m^2, motor inertia

    struct Nut {
        double k_c = 8e8;   // N/m, reference stiffness without preload
        double F_z = 3e3;   // N, preload
        double C_a = 3e4;   // N, dynamic load rating
    } nut;

    double k_zn1 = 6e8;   // N/m, bearing axial stiffness
    double k_zt1 = 5e6;   // coupling-side torsional stiffness
    double k_mw = 2e7;    // N/m, flexure-hinge axial stiffness
    double C_mn = 800.0;  // N s/m
    double C_mw = 400.0;  // N s/m
    double m_3 = 18.0;    // kg, slave pedestal
    double m_4 = 35.0;    // kg, working table

    void validate() const {
        const double vals[] = {screw.rho, screw.l_s, screw.r_s, screw.E,    screw.G,
                               screw.i_s, screw.l_n, m_r1,      m_c1,       J_c1,
                               J_M,       nut.k_c,   nut.F_z,   nut.C_a,    k_zn1,
                               k_zt1,     k_mw,      C_mn,      C_mw,       m_3,
                               m_4};
        for (double v : vals)
            if (!(v > 0)) throw DomainError("machine spec entries must be strictly positive");
    }
};

/// Intermediates of the derivation, retained for audit.
struct LumpedDiagnostics {
    double m_sc1 = 0;  // screw mass
    double J_sc1 = 0;  // screw inertia
    double k_sn1 = 0;  // screw axial stiffness
    double k_st1 = 0;  // screw torsional stiffness
    double k_mn = 0;   // nut contact stiffness
    double k_n1 = 0;   // bearing+screw series axial stiffness
    double k_t1 = 0;   // coupling+screw series torsional stiffness
    double J_S1 = 0;   // equivalent screw inertia
};

/// Coefficients of the 6-DOF model over q = [x1 x2 x3 x4 thM thS].
struct LumpedParams {
    double m_1 = 0, m_2 = 0, m_3 = 0, m_4 = 0;
    double J_M = 0, J_S = 0;
    double k_n = 0, k_t = 0, k_mn = 0, k_mw = 0;
    double C_mn = 0, C_mw = 0;
    double i_s = 0;
    LumpedDiagnostics diag;
};

/// Equivalent masses, inertias, and stiffnesses from the physical catalog.
/// Ball screw 2 is the twin of ball screw 1.
inline LumpedParams derive_lumped_params(const MachineSpec& spec) {
    spec.validate();
    const auto& s = spec.screw;

    LumpedDiagnostics d;
    d.m_sc1 = std::numbers::pi * s.rho * s.l_s * s.r_s * s.r_s;
    d.J_sc1 = std::numbers::pi * s.rho * s.l_s * std::pow(s.r_s, 4) / 4.0;
    d.k_sn1 = std::numbers::pi * s.r_s * s.r_s * s.E / s.l_n;
    d.k_st1 = s.G * std::numbers::pi * s.r_s * s.r_s / (4.0 * s.l_n);
    d.k_mn = 0.8 * spec.nut.k_c * std::cbrt(spec.nut.F_z / (0.1 * spec.nut.C_a));
    d.k_n1 = 1.0 / (1.0 / spec.k_zn1 + 1.0 / d.k_sn1);
    d.k_t1 = 1.0 / (1.0 / spec.k_zt1 + 1.0 / d.k_st1);
    d.J_S1 = d.J_sc1 + spec.J_c1 + s.i_s * s.i_s * spec.m_3;

    LumpedParams p;
    p.m_1 = d.m_sc1 + spec.m_r1 + spec.m_c1;
    p.m_2 = p.m_1;
    p.m_3 = spec.m_3;
    p.m_4 = spec.m_4;
    p.J_M = spec.J_M;
    p.J_S = d.J_S1;
    p.k_n = d.k_n1;
    p.k_t = d.k_t1;
    p.k_mn = d.k_mn;
    p.k_mw = spec.k_mw;
    p.C_mn = spec.C_mn;
    p.C_mw = spec.C_mw;
    p.i_s = s.i_s;
    p.diag = d;
    return p;
}

/// Sign convention of the coupling torsion term: the source model couples the
/// two angles with a plus sign; `minus` switches to the conventional
/// difference for sensitivity studies.
enum class TorsionalSign { plus, minus };

struct SystemMatrices {
    Mat6 M = Mat6::Zero();
    Mat6 C = Mat6::Zero();
    Mat6 K = Mat6::Zero();
};

/// M, C, K over q = [x1 x2 x3 x4 thM thS]. K is the exact Hessian of
///   E_p = 1/2 k_n x1^2 + 1/2 k_t (thM + thS)^2
///       + 1/2 k_mn (x3 - (x1+x2)/2 - i_s thS)^2 + k_mw (x4 - x3)^2
/// (the k_mw term carries no 1/2, so its diagonal contribution is 2 k_mw),
/// and C is the Hessian of D = C_mn x3'^2 + 2 C_mw x4'^2.
inline SystemMatrices assemble_matrices(const LumpedParams& p,
                                        TorsionalSign torsion = TorsionalSign::plus) {
    SystemMatrices s;
    s.M.diagonal() << p.m_1, p.m_2, p.m_3, p.m_4, p.J_M, p.J_S;

    // 1/2 k_n x1^2
    s.K(0, 0) += p.k_n;

    // 1/2 k_t (thM +- thS)^2
    const double sgn = torsion == TorsionalSign::plus ? 1.0 : -1.0;
    s.K(4, 4) += p.k_t;
    s.K(5, 5) += p.k_t;
    s.K(4, 5) += sgn * p.k_t;
    s.K(5, 4) += sgn * p.k_t;

    // 1/2 k_mn g^2 with g = x3 - (x1+x2)/2 - i_s thS -> k_mn grad(g) grad(g)^T
    Vec6 g = Vec6::Zero();
    g(0) = -0.5;
    g(1) = -0.5;
    g(2) = 1.0;
    g(5) = -p.i_s;
    s.K += p.k_mn * g * g.transpose();

    // k_mw (x4 - x3)^2, no 1/2
    s.K(2, 2) += 2.0 * p.k_mw;
    s.K(3, 3) += 2.0 * p.k_mw;
    s.K(2, 3) -= 2.0 * p.k_mw;
    s.K(3, 2) -= 2.0 * p.k_mw;

    s.C(2, 2) = 2.0 * p.C_mn;
    s.C(3, 3) = 4.0 * p.C_mw;
    return s;
}

/// Uniform-step state history of one simulation run.
struct StateTrajectory {
    double dt = 0;
    std::vector<Vec6> q;      // displacement
    std::vector<Vec6> qd;     // velocity
    std::vector<Vec6> qdd;    // acceleration
    std::vector<Vec6> force;  // applied external force

    std::size_t steps() const { return q.size(); }
    double duration() const { return q.empty() ? 0.0 : dt * static_cast<double>(q.size() - 1); }
    double time(std::size_t k) const { return dt * static_cast<double>(k); }
};

using ForceFunction = std::function<Vec6(double t)>;

namespace detail {

/// Newmark-beta (gamma = 1/2, beta = 1/4), acceleration form with a single
/// factorization of the effective matrix. K and C need not be symmetric
/// (the servo augmentation is rank-1 and one-sided).
inline StateTrajectory newmark(const Mat6& M,
                               const Mat6& C,
                               const Mat6& K,
                               const ForceFunction& force,
                               const Vec6& q0,
                               const Vec6& v0,
                               double dt,
                               double T) {
    constexpr double gamma = 0.5;
    constexpr double beta = 0.25;

    const std::size_t n_steps = static_cast<std::size_t>(std::llround(T / dt));
    StateTrajectory tr;
    tr.dt = dt;
    tr.q.reserve(n_steps + 1);
    tr.qd.reserve(n_steps + 1);
    tr.qdd.reserve(n_steps + 1);
    tr.force.reserve(n_steps + 1);

    const Eigen::PartialPivLU<Mat6> m_lu(M);
    Vec6 f = force(0.0);
    Vec6 q = q0, v = v0;
    Vec6 a = m_lu.solve(f - C * v0 - K * q0);
    tr.q.push_back(q);
    tr.qd.push_back(v);
    tr.qdd.push_back(a);
    tr.force.push_back(f);

    const Mat6 S = M + gamma * dt * C + beta * dt * dt * K;
    const Eigen::PartialPivLU<Mat6> s_lu(S);

    for (std::size_t k = 1; k <= n_steps; ++k) {
        const double t = dt * static_cast<double>(k);
        f = force(t);
        const Vec6 q_pred = q + dt * v + (0.5 - beta) * dt * dt * a;
        const Vec6 v_pred = v + (1.0 - gamma) * dt * a;
        const Vec6 a_next = s_lu.solve(f - C * v_pred - K * q_pred);
        q = q_pred + beta * dt * dt * a_next;
        v = v_pred + gamma * dt * a_next;
        a = a_next;
        if (!q.allFinite() || !v.allFinite())
            throw IntegrationDivergedError("time integration produced a non-finite state", k);
        tr.q.push_back(q);
        tr.qd.push_back(v);
        tr.qdd.push_back(a);
        tr.force.push_back(f);
    }
    return tr;
}

}  // namespace detail

/// Integrates M q'' + C q' + K q = F(t) from (q0, v0) over [0, T].
inline StateTrajectory simulate(const SystemMatrices& m,
                                const ForceFunction& force,
                                const Vec6& q0,
                                const Vec6& v0,
                                double dt,
                                double T) {
    if (!(dt > 0) || !(T >= dt)) throw DomainError("simulate requires dt > 0 and T >= dt");
    return detail::newmark(m.M, m.C, m.K, force, q0, v0, dt, T);
}

struct ServoGains {
    double kp = 1e5;  // N/m
    double kd = 0;    // N s/m; 0 -> derived from damping_ratio and m_4

    static ServoGains from_ratio(double kp, double damping_ratio, double m_4) {
        return ServoGains{kp, 2.0 * damping_ratio * std::sqrt(kp * m_4)};
    }
};

/// Piecewise-linear position reference for one axis: position is continuous,
/// velocity is constant within a span.
struct AxisReference {
    std::vector<double> t;  // strictly increasing breakpoints, t.front() == 0
    std::vector<double> x;  // m

    double position(double time) const {
        if (t.empty()) return 0.0;
        if (time <= t.front()) return x.front();
        if (time >= t.back()) return x.back();
        const auto it = std::upper_bound(t.begin(), t.end(), time);
        const std::size_t i = static_cast<std::size_t>(it - t.begin());
        const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
        return x[i - 1] + w * (x[i] - x[i - 1]);
    }

    double velocity(double time) const {
        if (t.size() < 2 || time <= t.front() || time >= t.back()) return 0.0;
        const auto it = std::upper_bound(t.begin(), t.end(), time);
        const std::size_t i = static_cast<std::size_t>(it - t.begin());
        return (x[i] - x[i - 1]) / (t[i] - t[i - 1]);
    }

    double duration() const { return t.empty() ? 0.0 : t.back(); }
};

/// Virtual servo run: a PD force K_p (x_ref - x4) + K_d (x_ref' - x4') acts on
/// the working table; the motor angle coordinate receives the i_s-scaled
/// reaction. The feedback terms are folded into K and C so the implicit
/// integrator sees the closed loop exactly; the recorded force history is the
/// physical PD force.
inline StateTrajectory simulate_servo(const SystemMatrices& m,
                                      const AxisReference& ref,
                                      const ServoGains& gains,
                                      double i_s,
                                      double dt,
                                      double T) {
    if (!(dt > 0) || !(T >= dt)) throw DomainError("simulate requires dt > 0 and T >= dt");
    Vec6 dir = Vec6::Zero();
    dir(3) = 1.0;
    dir(4) = -i_s;

    Mat6 K_aug = m.K;
    Mat6 C_aug = m.C;
    K_aug += gains.kp * dir * Vec6::Unit(3).transpose();
    C_aug += gains.kd * dir * Vec6::Unit(3).transpose();

    const ForceFunction f = [&](double t) -> Vec6 {
        return dir * (gains.kp * ref.position(t) + gains.kd * ref.velocity(t));
    };

    StateTrajectory tr = detail::newmark(m.M, C_aug, K_aug, f, Vec6::Zero(), Vec6::Zero(), dt, T);
    for (std::size_t k = 0; k < tr.steps(); ++k) {
        const double t = tr.time(k);
        const double pd = gains.kp * (ref.position(t) - tr.q[k](3)) +
                          gains.kd * (ref.velocity(t) - tr.qd[k](3));
        tr.force[k] = dir * pd;
    }
    return tr;
}

struct DeviationStats {
    std::vector<double> deviations;  // per sample, mm or m (input units)
    double max = 0;
    double min = 0;
    double mean = 0;
};

/// Per-sample Euclidean distance between two equally-long point series.
inline DeviationStats trajectory_deviation(const std::vector<Vec3>& commanded,
                                           const std::vector<Vec3>& simulated) {
    if (commanded.empty() || simulated.empty())
        throw DomainError("trajectory_deviation needs non-empty series");
    if (commanded.size() != simulated.size())
        throw DomainError("series lengths differ; resample first");
    DeviationStats s;
    s.deviations.reserve(commanded.size());
    double sum = 0;
    s.min = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < commanded.size(); ++i) {
        const double d = (commanded[i] - simulated[i]).norm();
        s.deviations.push_back(d);
        s.max = std::max(s.max, d);
        s.min = std::min(s.min, d);
        sum += d;
    }
    s.mean = sum / static_cast<double>(commanded.size());
    return s;
}

/// Resampling overload: both series are linearly interpolated onto the
/// commanded time grid.
inline DeviationStats trajectory_deviation(const std::vector<double>& t_commanded,
                                           const std::vector<Vec3>& commanded,
                                           const std::vector<double>& t_simulated,
                                           const std::vector<Vec3>& simulated) {
    if (commanded.empty() || simulated.empty())
        throw DomainError("trajectory_deviation needs non-empty series");
    auto sample = [](const std::vector<double>& t, const std::vector<Vec3>& x, double time) {
        if (time <= t.front()) return x.front();
        if (time >= t.back()) return x.back();
        const auto it = std::upper_bound(t.begin(), t.end(), time);
        const std::size_t i = static_cast<std::size_t>(it - t.begin());
        const double w = (time - t[i - 1]) / (t[i] - t[i - 1]);
        return Vec3(x[i - 1] + w * (x[i] - x[i - 1]));
    };
    std::vector<Vec3> resampled;
    resampled.reserve(commanded.size());
    for (double t : t_commanded) resampled.push_back(sample(t_simulated, simulated, t));
    return trajectory_deviation(commanded, resampled);
}

}  // namespace vtg
