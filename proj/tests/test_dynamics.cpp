#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Eigenvalues>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "vtg/dynamics.hpp"

using namespace vtg;
using Catch::Approx;

namespace {

LumpedParams random_params(std::mt19937& gen) {
    std::uniform_real_distribution<double> mass(0.5, 50.0);
    std::uniform_real_distribution<double> inertia(1e-4, 1e-2);
    std::uniform_real_distribution<double> stiff(1e3, 1e9);
    std::uniform_real_distribution<double> damp(10.0, 5e3);
    std::uniform_real_distribution<double> ratio(5e-4, 5e-3);
    LumpedParams p;
    p.m_1 = mass(gen);
    p.m_2 = mass(gen);
    p.m_3 = mass(gen);
    p.m_4 = mass(gen);
    p.J_M = inertia(gen);
    p.J_S = inertia(gen);
    p.k_n = stiff(gen);
    p.k_t = stiff(gen);
    p.k_mn = stiff(gen);
    p.k_mw = stiff(gen);
    p.C_mn = damp(gen);
    p.C_mw = damp(gen);
    p.i_s = ratio(gen);
    return p;
}

}  // namespace

TEST_CASE("lumped params: screw mass and inertia", "[dynamics]") {
    MachineSpec spec;
    spec.screw.rho = 7850.0;
    spec.screw.l_s = 1.0;
    spec.screw.r_s = 0.01;
    const auto p = derive_lumped_params(spec);
    CHECK(p.diag.m_sc1 == Approx(2.46615023306799).epsilon(1e-12));
    CHECK(p.diag.J_sc1 == Approx(6.16537558266997e-5).epsilon(1e-12));
    CHECK(p.m_1 == Approx(p.diag.m_sc1 + spec.m_r1 + spec.m_c1).epsilon(1e-12));
    CHECK(p.m_2 == p.m_1);
    CHECK(p.J_S == Approx(p.diag.J_sc1 + spec.J_c1 +
                          spec.screw.i_s * spec.screw.i_s * spec.m_3).epsilon(1e-12));
}

TEST_CASE("lumped params: axial stiffness", "[dynamics]") {
    MachineSpec spec;
    spec.screw.r_s = 0.01;
    spec.screw.E = 2.06e11;
    spec.screw.l_n = 0.5;
    const auto p = derive_lumped_params(spec);
    CHECK(p.diag.k_sn1 == Approx(1.29433617327899e8).epsilon(1e-12));
}

TEST_CASE("lumped params: preload at a tenth of the load rating", "[dynamics]") {
    MachineSpec spec;
    spec.nut.C_a = 3e4;
    spec.nut.F_z = 0.1 * spec.nut.C_a;
    const auto p = derive_lumped_params(spec);
    CHECK(p.k_mn == Approx(0.8 * spec.nut.k_c).epsilon(1e-12));
}

TEST_CASE("lumped params: equal springs in series halve", "[dynamics]") {
    MachineSpec spec;
    const auto probe = derive_lumped_params(spec);
    spec.k_zn1 = probe.diag.k_sn1;
    const auto p = derive_lumped_params(spec);
    CHECK(p.k_n == Approx(0.5 * p.diag.k_sn1).epsilon(1e-12));
}

TEST_CASE("assembly: mass matrix is the bare diagonal", "[dynamics]") {
    auto& gen = oracles::rng();
    const auto p = random_params(gen);
    const auto s = assemble_matrices(p);
    Vec6 expected;
    expected << p.m_1, p.m_2, p.m_3, p.m_4, p.J_M, p.J_S;
    CHECK((s.M.diagonal() - expected).norm() == 0.0);
    CHECK((s.M - Mat6(expected.asDiagonal())).norm() == 0.0);
}

TEST_CASE("assembly: isolated flexure-hinge block", "[dynamics]") {
    LumpedParams p;
    p.m_1 = p.m_2 = p.m_3 = p.m_4 = 1.0;
    p.J_M = p.J_S = 1.0;
    p.k_mw = 123.0;
    p.i_s = 1e-3;
    const auto s = assemble_matrices(p);
    CHECK(s.K(2, 2) == Approx(2 * 123.0));
    CHECK(s.K(3, 3) == Approx(2 * 123.0));
    CHECK(s.K(2, 3) == Approx(-2 * 123.0));
    CHECK(s.K(3, 2) == Approx(-2 * 123.0));
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j)
            if (i != 2 && i != 3 && j != 2 && j != 3) CHECK(s.K(i, j) == 0.0);
}

TEST_CASE("assembly: K and C match finite-difference Hessians", "[dynamics][property]") {
    auto& gen = oracles::rng();
    for (int iter = 0; iter < 100; ++iter) {
        const auto p = random_params(gen);
        const auto s = assemble_matrices(p);

        const auto HK = oracles::fd_hessian(
            [&](const std::vector<double>& q) { return oracles::potential_energy(p, q); }, 6);
        const auto HC = oracles::fd_hessian(
            [&](const std::vector<double>& qd) { return oracles::dissipation(p, qd); }, 6);
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) {
                CHECK(std::abs(s.K(i, j) - HK[i][j]) <= 1e-6 * std::max(1.0, std::abs(s.K(i, j))));
                CHECK(std::abs(s.C(i, j) - HC[i][j]) <= 1e-6 * std::max(1.0, std::abs(s.C(i, j))));
            }
        }
        CHECK((s.K - s.K.transpose()).norm() == 0.0);
        CHECK((s.C - s.C.transpose()).norm() == 0.0);
    }
}

TEST_CASE("assembly: torsional sign switch", "[dynamics]") {
    auto& gen = oracles::rng();
    const auto p = random_params(gen);
    const auto plus = assemble_matrices(p, TorsionalSign::plus);
    const auto minus = assemble_matrices(p, TorsionalSign::minus);
    CHECK(plus.K(4, 5) == Approx(p.k_t));
    CHECK(minus.K(4, 5) == Approx(-p.k_t));
    const auto H = oracles::fd_hessian(
        [&](const std::vector<double>& q) { return oracles::potential_energy(p, q, -1.0); }, 6);
    CHECK(std::abs(minus.K(4, 5) - H[4][5]) <= 1e-6 * std::abs(p.k_t));
}

TEST_CASE("assembly: analytic null-space mode", "[dynamics]") {
    auto& gen = oracles::rng();
    const auto p = random_params(gen);
    const auto s = assemble_matrices(p);
    Vec6 v;
    v << 0.0, -2.0 * p.i_s, 0.0, 0.0, -1.0, 1.0;
    CHECK((s.K * v).norm() <= 1e-9 * s.K.norm() * v.norm());
}

TEST_CASE("simulate: equilibrium stays at rest", "[dynamics]") {
    MachineSpec spec;
    const auto s = assemble_matrices(derive_lumped_params(spec));
    const auto tr = simulate(
        s, [](double) { return Vec6::Zero().eval(); }, Vec6::Zero(), Vec6::Zero(), 1e-4, 0.05);
    for (const auto& q : tr.q) CHECK(q.norm() == 0.0);
}

TEST_CASE("simulate: SDOF period recovered from zero crossings", "[dynamics]") {
    // Work table of 1 kg on the flexure spring alone; every other coordinate
    // is pinned with a huge mass. Effective stiffness 2 k_mw = 4000 N/m.
    LumpedParams p;
    p.m_1 = p.m_2 = p.m_3 = 1e9;
    p.J_M = p.J_S = 1e9;
    p.m_4 = 1.0;
    p.k_mw = 2000.0;
    p.i_s = 1e-3;
    SystemMatrices s = assemble_matrices(p);

    Vec6 q0 = Vec6::Zero();
    q0(3) = 1e-3;
    const double dt = 1e-5;
    const auto tr = simulate(
        s, [](double) { return Vec6::Zero().eval(); }, q0, Vec6::Zero(), dt, 0.5);

    std::vector<double> crossings;
    for (std::size_t k = 1; k < tr.steps(); ++k) {
        const double a = tr.q[k - 1](3(0, 0));
        (void)a;
    }
    crossings.clear();
    for (std::size_t k = 1; k < tr.steps(); ++k) {
        const double prev = tr.q[k - 1](3);
        const double cur = tr.q[k](3);
        if (prev > 0.0 && cur <= 0.0) {
            // Linear interpolation of the crossing instant.
            const double frac = prev / (prev - cur);
            crossings.push_back(tr.dt * (static_cast<double>(k - 1) + frac));
        }
    }
    REQUIRE(crossings.size() >= 3);
    const double period =
        (crossings.back() - crossings.front()) / static_cast<double>(crossings.size() - 1);
    const double expected = 2.0 * std::numbers::pi * std::sqrt(1.0 / 4000.0);
    CHECK(period == Approx(expected).epsilon(0.005));
}

TEST_CASE("simulate: undamped energy drift below 0.1% over 1e5 steps", "[dynamics][slow]") {
    MachineSpec spec;
    const auto params = derive_lumped_params(spec);
    SystemMatrices s = assemble_matrices(params);
    s.C.setZero();

    Vec6 q0 = Vec6::Zero();
    q0(0) = 1e-5;
    q0(3) = 2e-5;
    q0(4) = 1e-4;
    const double dt = 1e-6;
    const auto tr = simulate(
        s, [](double) { return Vec6::Zero().eval(); }, q0, Vec6::Zero(), dt, 0.1);
    REQUIRE(tr.steps() >= 100000);

    auto energy = [&](std::size_t k) {
        const std::vector<double> q(tr.q[k].data(), tr.q[k].data() + 6);
        return oracles::kinetic_energy(params, tr.qd[k]) + oracles::potential_energy(params, q);
    };
    const double e0 = energy(0);
    REQUIRE(e0 > 0.0);
    for (std::size_t k = 0; k < tr.steps(); k += 500)
        CHECK(std::abs(energy(k) - e0) <= 1e-3 * e0);
    CHECK(std::abs(energy(tr.steps() - 1) - e0) <= 1e-3 * e0);
}

TEST_CASE("simulate: damped step settles to the pseudo-inverse static solution",
          "[dynamics][slow]") {
    MachineSpec spec;
    const auto params = derive_lumped_params(spec);
    const auto s = assemble_matrices(params);

    Vec6 f = Vec6::Zero();
    f(3) = 50.0;
    const auto tr = simulate(
        s, [&](double) { return f; }, Vec6::Zero(), Vec6::Zero(), 1e-4, 6.0);

    // Static oracle: minimum-norm solution of K q = F.
    Eigen::SelfAdjointEigenSolver<Mat6> eig(s.K);
    const double lambda_max = eig.eigenvalues().cwiseAbs().maxCoeff();
    Mat6 pinv = Mat6::Zero();
    Mat6 range_proj = Mat6::Zero();
    for (int i = 0; i < 6; ++i) {
        const double lambda = eig.eigenvalues()(i);
        if (std::abs(lambda) > 1e-9 * lambda_max) {
            const Vec6 v = eig.eigenvectors().col(i);
            pinv += v * v.transpose() / lambda;
            range_proj += v * v.transpose();
        }
    }
    const Vec6 q_static = pinv * f;
    const Vec6 q_end_projected = range_proj * tr.q.back();
    CHECK((q_end_projected - q_static).norm() <= 0.01 * q_static.norm());
}

TEST_CASE("simulate: discrete power balance", "[dynamics]") {
    MachineSpec spec;
    const auto params = derive_lumped_params(spec);
    const auto s = assemble_matrices(params);

    const ForceFunction force = [](double t) {
        Vec6 f = Vec6::Zero();
        f(3) = 20.0 * std::sin(2.0 * std::numbers::pi * 40.0 * t);
        return f;
    };
    const double dt = 1e-6;
    const auto tr = simulate(s, force, Vec6::Zero(), Vec6::Zero(), dt, 0.02);

    auto energy = [&](std::size_t k) {
        const std::vector<double> q(tr.q[k].data(), tr.q[k].data() + 6);
        return oracles::kinetic_energy(params, tr.qd[k]) + oracles::potential_energy(params, q);
    };
    double work = 0.0;
    double peak = 0.0;
    auto integrand = [&](std::size_t k) {
        return tr.force[k].dot(tr.qd[k]) - tr.qd[k].dot(s.C * tr.qd[k]);
    };
    for (std::size_t k = 1; k < tr.steps(); ++k) {
        work += 0.5 * (integrand(k - 1) + integrand(k)) * dt;
        peak = std::max(peak, std::abs(energy(k)));
        const double delta = energy(k) - energy(0);
        CHECK(std::abs(delta - work) <= 1e-3 * std::max(peak, 1e-12) + 1e-12);
    }
}

TEST_CASE("simulate: rejects bad steps", "[dynamics][errors]") {
    MachineSpec spec;
    const auto s = assemble_matrices(derive_lumped_params(spec));
    CHECK_THROWS_AS(
        simulate(s, [](double) { return Vec6::Zero().eval(); }, Vec6::Zero(), Vec6::Zero(),
                 0.0, 1.0),
        DomainError);
}

TEST_CASE("servo tracking follows a ramp", "[dynamics]") {
    MachineSpec spec;
    const auto params = derive_lumped_params(spec);
    const auto s = assemble_matrices(params);
    AxisReference ref;
    ref.t = {0.0, 0.5, 1.0, 2.0};
    ref.x = {0.0, 0.0, 0.05, 0.05};
    const auto gains = ServoGains::from_ratio(1e5, 0.7, params.m_4);
    const auto tr = simulate_servo(s, ref, gains, params.i_s, 1e-4, 2.0);
    // Settled within a micrometre of the commanded end position.
    CHECK(std::abs(tr.q.back()(3) - 0.05) <= 1e-5);
    // The recorded force is the PD force at the working table.
    const double pd0 = gains.kp * (ref.position(0.0) - tr.q[0](3));
    CHECK(tr.force[0](3) == Approx(pd0).margin(1e-9));
}

TEST_CASE("trajectory deviation: basics", "[dynamics]") {
    std::vector<Vec3> a = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    const auto zero = trajectory_deviation(a, a);
    CHECK(zero.max == 0.0);
    CHECK(zero.mean == 0.0);

    std::vector<Vec3> b = a;
    for (auto& p : b) p += Vec3(0.1, 0, 0);
    const auto off = trajectory_deviation(a, b);
    CHECK(off.max == Approx(0.1).epsilon(1e-12));
    CHECK(off.min == Approx(0.1).epsilon(1e-12));
    CHECK(off.mean == Approx(0.1).epsilon(1e-12));

    CHECK_THROWS_AS(trajectory_deviation({}, {}), DomainError);
}

TEST_CASE("trajectory deviation: resampling overload", "[dynamics]") {
    const std::vector<double> tc = {0.0, 1.0, 2.0};
    const std::vector<Vec3> c = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(2, 0, 0)};
    const std::vector<double> ts = {0.0, 0.5, 1.0, 1.5, 2.0};
    std::vector<Vec3> sim;
    for (double t : ts) sim.emplace_back(t, 0.0, 0.0);
    const auto dev = trajectory_deviation(tc, c, ts, sim);
    CHECK(dev.max <= 1e-12);
}
