#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

#include "vtg/errors.hpp"
#include "vtg/types.hpp"

namespace vtg {

/// ||C'(u)|| below this counts as a parameterization singularity (mm).
inline constexpr double kSingularTolMm = 1e-12;

/// Rational B-spline curve of degree p with a clamped or unclamped knot
/// vector. Control points in mm. Immutable after construction; all
/// evaluation paths are const and safe for concurrent use.
class NurbsCurve {
public:
    NurbsCurve(int degree,
               std::vector<double> knots,
               std::vector<Vec3> control_points,
               std::vector<double> weights)
        : degree_(degree),
          knots_(std::move(knots)),
          control_points_(std::move(control_points)),
          weights_(std::move(weights)) {
        validate();
    }

    /// Non-rational convenience: all weights 1.
    NurbsCurve(int degree, std::vector<double> knots, std::vector<Vec3> control_points)
        : NurbsCurve(degree,
                     std::move(knots),
                     std::move(control_points),
                     std::vector<double>()) {}

    int degree() const { return degree_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<Vec3>& control_points() const { return control_points_; }
    const std::vector<double>& weights() const { return weights_; }

    double u_min() const { return knots_.front(); }
    double u_max() const { return knots_.back(); }

    /// Index n of the last control point.
    int last_index() const { return static_cast<int>(control_points_.size()) - 1; }

    bool is_clamped() const {
        const int p = degree_;
        const std::size_t m = knots_.size() - 1;
        for (int i = 1; i <= p; ++i) {
            if (knots_[i] != knots_[0]) return false;
            if (knots_[m - i] != knots_[m]) return false;
        }
        return true;
    }

private:
    void validate() {
        if (degree_ < 1) throw DomainError("NURBS degree must be >= 1");
        if (control_points_.empty()) throw InsufficientDataError("NURBS curve needs control points");
        if (weights_.empty()) weights_.assign(control_points_.size(), 1.0);
        if (weights_.size() != control_points_.size())
            throw InvalidWeightsError("weight count must equal control point count");
        for (double w : weights_)
            if (!(w > 0.0)) throw InvalidWeightsError("weights must be strictly positive");
        const std::size_t expected = control_points_.size() + degree_ + 1;
        if (knots_.size() != expected) {
            std::ostringstream os;
            os << "knot vector must have n+p+2 = " << expected << " entries, got " << knots_.size();
            throw DomainError(os.str());
        }
        for (std::size_t i = 1; i < knots_.size(); ++i)
            if (knots_[i] < knots_[i - 1]) throw DomainError("knot vector must be non-decreasing");
        if (!(u_max() > u_min())) throw DomainError("degenerate knot range");
    }

    int degree_;
    std::vector<double> knots_;
    std::vector<Vec3> control_points_;
    std::vector<double> weights_;
};

/// Knot span index containing u (The NURBS Book A2.1). n is the last
/// control-point index.
inline int find_span(double u, int degree, int n, const std::vector<double>& knots) {
    if (u >= knots[n + 1]) return n;
    if (u <= knots[degree]) return degree;
    int low = degree;
    int high = n + 1;
    int mid = (low + high) / 2;
    while (u < knots[mid] || u >= knots[mid + 1]) {
        if (u < knots[mid])
            high = mid;
        else
            low = mid;
        mid = (low + high) / 2;
    }
    return mid;
}

/// The p+1 non-vanishing basis functions N_{span-p..span, p}(u) via the
/// Cox-de Boor recursion (A2.2). The 0/0 convention resolves to 0.
inline std::vector<double> basis_functions(double u,
                                           int span,
                                           int degree,
                                           const std::vector<double>& knots) {
    if (u < knots.front() || u > knots.back())
        throw DomainError("parameter outside knot range");
    std::vector<double> N(degree + 1, 0.0);
    std::vector<double> left(degree + 1, 0.0), right(degree + 1, 0.0);
    N[0] = 1.0;
    for (int j = 1; j <= degree; ++j) {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double denom = right[r + 1] + left[j - r];
            const double temp = denom != 0.0 ? N[r] / denom : 0.0;
            N[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        N[j] = saved;
    }
    return N;
}

/// Basis functions and their derivatives up to `order` (A2.3).
/// ders[k][j] = d^k/du^k N_{span-p+j, p}(u).
inline std::vector<std::vector<double>> basis_function_derivatives(
    double u, int span, int degree, const std::vector<double>& knots, int order) {
    const int p = degree;
    std::vector<std::vector<double>> ders(order + 1, std::vector<double>(p + 1, 0.0));
    std::vector<std::vector<double>> ndu(p + 1, std::vector<double>(p + 1, 0.0));
    std::vector<double> left(p + 1, 0.0), right(p + 1, 0.0);

    ndu[0][0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = u - knots[span + 1 - j];
        right[j] = knots[span + j] - u;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            ndu[j][r] = right[r + 1] + left[j - r];
            const double temp = ndu[j][r] != 0.0 ? ndu[r][j - 1] / ndu[j][r] : 0.0;
            ndu[r][j] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        ndu[j][j] = saved;
    }
    for (int j = 0; j <= p; ++j) ders[0][j] = ndu[j][p];

    std::vector<std::vector<double>> a(2, std::vector<double>(p + 1, 0.0));
    for (int r = 0; r <= p; ++r) {
        int s1 = 0, s2 = 1;
        a[0][0] = 1.0;
        for (int k = 1; k <= order; ++k) {
            double d = 0.0;
            const int rk = r - k;
            const int pk = p - k;
            if (r >= k) {
                a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
                d = a[s2][0] * ndu[rk][pk];
            }
            const int j1 = rk >= -1 ? 1 : -rk;
            const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
            for (int j = j1; j <= j2; ++j) {
                a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
                d += a[s2][j] * ndu[rk + j][pk];
            }
            if (r <= pk) {
                a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
                d += a[s2][k] * ndu[r][pk];
            }
            ders[k][r] = d;
            std::swap(s1, s2);
        }
    }
    double factor = p;
    for (int k = 1; k <= order; ++k) {
        for (int j = 0; j <= p; ++j) ders[k][j] *= factor;
        factor *= (p - k);
    }
    return ders;
}

namespace detail {

inline double binomial(int n, int k) {
    double result = 1.0;
    for (int i = 1; i <= k; ++i) result = result * (n + 1 - i) / i;
    return result;
}

}  // namespace detail

/// C(u), C'(u), ..., C^(order)(u). Rational derivatives come from the
/// quotient-rule recurrence on the homogeneous derivatives (A4.2), not from
/// numeric differencing. Derivatives above the degree are zero on polynomial
/// spans and are returned as zero vectors.
inline std::vector<Vec3> eval_curve(const NurbsCurve& curve, double u, int order = 0) {
    if (u < curve.u_min() || u > curve.u_max())
        throw DomainError("parameter outside knot range");
    const int p = curve.degree();
    const int n = curve.last_index();
    const auto& knots = curve.knots();
    const auto& P = curve.control_points();
    const auto& W = curve.weights();

    const int span = find_span(u, p, n, knots);
    const auto ders = basis_function_derivatives(u, span, p, knots, std::min(order, p));

    // Homogeneous derivatives A^(k) = sum N^(k) w P, w^(k) = sum N^(k) w.
    const int du = std::min(order, p);
    std::vector<Vec3> Aders(order + 1, Vec3::Zero());
    std::vector<double> wders(order + 1, 0.0);
    for (int k = 0; k <= du; ++k) {
        for (int j = 0; j <= p; ++j) {
            const int idx = span - p + j;
            const double c = ders[k][j] * W[idx];
            Aders[k] += c * P[idx];
            wders[k] += c;
        }
    }
    if (wders[0] <= 0.0)
        throw InvalidWeightsError("non-positive weight sum during evaluation");

    std::vector<Vec3> C(order + 1, Vec3::Zero());
    for (int k = 0; k <= order; ++k) {
        Vec3 v = Aders[k];
        for (int i = 1; i <= k; ++i)
            v -= detail::binomial(k, i) * wders[i] * C[k - i];
        C[k] = v / wders[0];
    }
    return C;
}

/// kappa = ||C' x C''|| / ||C'||^3, in 1/mm.
inline double curve_curvature(const NurbsCurve& curve, double u) {
    const auto d = eval_curve(curve, u, 2);
    const double speed = d[1].norm();
    if (speed < kSingularTolMm)
        throw SingularParameterizationError("||C'(u)|| below singularity tolerance");
    return d[1].cross(d[2]).norm() / (speed * speed * speed);
}

enum class FitMode { interpolate, approximate };

struct FitResult {
    NurbsCurve curve;
    double max_residual = 0.0;  // mm, against the input points
};

namespace detail {

inline std::vector<Vec3> dedupe_consecutive(const std::vector<Vec3>& pts, double tol) {
    std::vector<Vec3> out;
    out.reserve(pts.size());
    for (const auto& p : pts) {
        if (out.empty() || (p - out.back()).norm() > tol) out.push_back(p);
    }
    return out;
}

inline std::vector<double> chord_length_parameters(const std::vector<Vec3>& pts) {
    std::vector<double> ubar(pts.size(), 0.0);
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        total += (pts[i] - pts[i - 1]).norm();
        ubar[i] = total;
    }
    for (auto& u : ubar) u /= total;
    ubar.back() = 1.0;
    return ubar;
}

/// Averaged clamped knot vector for interpolation (The NURBS Book eq. 9.8).
inline std::vector<double> averaged_knots(const std::vector<double>& ubar, int degree) {
    const int n = static_cast<int>(ubar.size()) - 1;
    const int p = degree;
    std::vector<double> U(n + p + 2, 0.0);
    for (int j = n + 1; j <= n + p + 1; ++j) U[j] = 1.0;
    for (int j = 1; j <= n - p; ++j) {
        double sum = 0.0;
        for (int i = j; i < j + p; ++i) sum += ubar[i];
        U[j + p] = sum / p;
    }
    return U;
}

/// Knot vector for least-squares approximation with n+1 control points
/// (The NURBS Book eq. 9.68/9.69).
inline std::vector<double> approximation_knots(const std::vector<double>& ubar,
                                               int degree,
                                               int n) {
    const int m = static_cast<int>(ubar.size()) - 1;
    const int p = degree;
    std::vector<double> U(n + p + 2, 0.0);
    for (int j = n + 1; j <= n + p + 1; ++j) U[j] = 1.0;
    const double d = static_cast<double>(m + 1) / (n - p + 1);
    for (int j = 1; j <= n - p; ++j) {
        const int i = static_cast<int>(j * d);
        const double alpha = j * d - i;
        U[p + j] = (1.0 - alpha) * ubar[i - 1] + alpha * ubar[i];
    }
    return U;
}

inline FitResult fit_interpolate(const std::vector<Vec3>& q, int degree) {
    const int n = static_cast<int>(q.size()) - 1;
    const int p = degree;
    const auto ubar = chord_length_parameters(q);
    const auto U = averaged_knots(ubar, p);

    // Banded collocation matrix N_{i,p}(ubar_k); solved sparse.
    Eigen::SparseMatrix<double> A(n + 1, n + 1);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n + 1) * (p + 1));
    for (int k = 0; k <= n; ++k) {
        const int span = find_span(ubar[k], p, n, U);
        const auto N = basis_functions(ubar[k], span, p, U);
        for (int j = 0; j <= p; ++j) trip.emplace_back(k, span - p + j, N[j]);
    }
    A.setFromTriplets(trip.begin(), trip.end());

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(A);
    if (lu.info() != Eigen::Success)
        throw InsufficientDataError("interpolation system is singular");

    Eigen::MatrixXd rhs(n + 1, 3);
    for (int k = 0; k <= n; ++k) rhs.row(k) = q[k].transpose();
    Eigen::MatrixXd sol(n + 1, 3);
    for (int c = 0; c < 3; ++c) sol.col(c) = lu.solve(rhs.col(c));

    std::vector<Vec3> ctrl(n + 1);
    for (int i = 0; i <= n; ++i) ctrl[i] = sol.row(i).transpose();

    NurbsCurve curve(p, U, std::move(ctrl));
    double max_res = 0.0;
    for (int k = 0; k <= n; ++k)
        max_res = std::max(max_res, (eval_curve(curve, ubar[k])[0] - q[k]).norm());
    return FitResult{std::move(curve), max_res};
}

inline FitResult fit_approximate(const std::vector<Vec3>& q, int degree, int num_ctrl) {
    const int m = static_cast<int>(q.size()) - 1;
    const int p = degree;
    const int n = num_ctrl - 1;
    const auto ubar = chord_length_parameters(q);
    const auto U = approximation_knots(ubar, p, n);

    // Fixed ends, least squares on the interior (The NURBS Book 9.4.1).
    Eigen::MatrixXd Nmat = Eigen::MatrixXd::Zero(m + 1, n + 1);
    for (int k = 0; k <= m; ++k) {
        const int span = find_span(ubar[k], p, n, U);
        const auto N = basis_functions(ubar[k], span, p, U);
        for (int j = 0; j <= p; ++j) Nmat(k, span - p + j) = N[j];
    }

    Eigen::MatrixXd Q(m + 1, 3);
    for (int k = 0; k <= m; ++k) Q.row(k) = q[k].transpose();

    std::vector<Vec3> ctrl(n + 1);
    ctrl.front() = q.front();
    ctrl.back() = q.back();
    if (n >= 2) {
        Eigen::MatrixXd Ni = Nmat.middleCols(1, n - 1);
        Eigen::MatrixXd R = Q - Nmat.col(0) * q.front().transpose() -
                            Nmat.col(n) * q.back().transpose();
        Eigen::MatrixXd sol =
            (Ni.transpose() * Ni).ldlt().solve(Ni.transpose() * R);
        for (int i = 1; i < n; ++i) ctrl[i] = sol.row(i - 1).transpose();
    }

    NurbsCurve curve(p, U, std::move(ctrl));
    double max_res = 0.0;
    for (int k = 0; k <= m; ++k)
        max_res = std::max(max_res, (eval_curve(curve, ubar[k])[0] - q[k]).norm());
    return FitResult{std::move(curve), max_res};
}

}  // namespace detail

/// Fits a curve through/near `points` after merging coincident neighbours.
/// interpolate: global interpolation, chord-length parameters, averaged
/// clamped knots; passes through every input point. approximate:
/// least-squares with `num_control_points` (>= degree+1) control points,
/// endpoints pinned. Fitted curves are non-rational (unit weights).
inline FitResult fit_curve(const std::vector<Vec3>& points,
                           int degree,
                           FitMode mode = FitMode::interpolate,
                           int num_control_points = 0) {
    if (degree < 1) throw DomainError("fit degree must be >= 1");
    const auto q = detail::dedupe_consecutive(points, kCoincidentTolMm);
    if (static_cast<int>(q.size()) < degree + 1) {
        std::ostringstream os;
        os << "need at least " << degree + 1 << " distinct points, have " << q.size();
        throw InsufficientDataError(os.str());
    }
    if (mode == FitMode::interpolate) return detail::fit_interpolate(q, degree);

    if (num_control_points < degree + 1)
        throw DomainError("approximation needs at least degree+1 control points");
    if (num_control_points > static_cast<int>(q.size()))
        throw DomainError("approximation cannot use more control points than data points");
    if (num_control_points == static_cast<int>(q.size()))
        return detail::fit_interpolate(q, degree);
    return detail::fit_approximate(q, degree, num_control_points);
}

/// Full circle in the z = center.z plane as a rational quadratic with nine
/// control points and four 90-degree arcs.
inline NurbsCurve make_circle_xy(const Vec3& center, double radius) {
    if (!(radius > 0.0)) throw DomainError("circle radius must be positive");
    const double r = radius;
    const double w = std::numbers::sqrt2 / 2.0;
    std::vector<Vec3> P = {
        center + Vec3(r, 0, 0),  center + Vec3(r, r, 0),   center + Vec3(0, r, 0),
        center + Vec3(-r, r, 0), center + Vec3(-r, 0, 0),  center + Vec3(-r, -r, 0),
        center + Vec3(0, -r, 0), center + Vec3(r, -r, 0),  center + Vec3(r, 0, 0)};
    std::vector<double> W = {1, w, 1, w, 1, w, 1, w, 1};
    std::vector<double> U = {0, 0, 0, 0.25, 0.25, 0.5, 0.5, 0.75, 0.75, 1, 1, 1};
    return NurbsCurve(2, std::move(U), std::move(P), std::move(W));
}

}  // namespace vtg
