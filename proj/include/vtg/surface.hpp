#pragma once

#include <cmath>
#include <functional>

#include "vtg/errors.hpp"
#include "vtg/types.hpp"

namespace vtg {

/// Point and partial derivatives of a parametric surface at one (u, v).
struct SurfaceJet {
    Vec3 S = Vec3::Zero();
    Vec3 Su = Vec3::Zero();
    Vec3 Sv = Vec3::Zero();
    Vec3 Suu = Vec3::Zero();
    Vec3 Svv = Vec3::Zero();
    Vec3 Suv = Vec3::Zero();
};

/// An evaluable mapping (u, v) -> jet. Analytic test surfaces and
/// tensor-product patches both fit this shape.
using ParametricSurface = std::function<SurfaceJet(double u, double v)>;

/// Fundamental forms, normal, and curvatures at a regular surface point.
struct CurvatureSummary {
    double E = 0, F = 0, G = 0;  // first fundamental quantities
    double L = 0, M = 0, N = 0;  // second fundamental quantities
    Vec3 normal = Vec3::Zero();  // unit(S_u x S_v)
    double mean = 0;             // H, 1/mm
    double gaussian = 0;         // K, 1/mm^2
    double k_min = 0, k_max = 0;
};

/// Mean and Gaussian curvature through the fundamental forms. The normal is
/// unit(S_u x S_v); the sign of H follows that orientation. Principal
/// curvatures come from H -+ sqrt(H^2 - K) with tiny negative radicands
/// clamped to zero.
inline CurvatureSummary surface_curvatures(const ParametricSurface& surface,
                                           double u,
                                           double v) {
    const SurfaceJet j = surface(u, v);
    if (!j.S.allFinite() || !j.Su.allFinite() || !j.Sv.allFinite() ||
        !j.Suu.allFinite() || !j.Svv.allFinite() || !j.Suv.allFinite())
        throw DegenerateSurfaceError("non-finite surface derivatives");

    CurvatureSummary c;
    c.E = j.Su.dot(j.Su);
    c.F = j.Su.dot(j.Sv);
    c.G = j.Sv.dot(j.Sv);

    const Vec3 cross = j.Su.cross(j.Sv);
    const double area = cross.norm();
    if (area <= 0.0) throw DegenerateSurfaceError("degenerate surface point: ||S_u x S_v|| = 0");
    c.normal = cross / area;

    c.L = c.normal.dot(j.Suu);
    c.M = c.normal.dot(j.Suv);
    c.N = c.normal.dot(j.Svv);

    const double denom = c.E * c.G - c.F * c.F;
    if (denom <= 0.0) throw DegenerateSurfaceError("EG - F^2 <= 0 at queried point");

    c.mean = (c.L * c.G - 2.0 * c.M * c.F + c.N * c.E) / (2.0 * denom);
    c.gaussian = (c.L * c.N - c.M * c.M) / denom;

    double radicand = c.mean * c.mean - c.gaussian;
    if (radicand < 0.0) radicand = 0.0;  // complex principal curvatures only by roundoff
    const double s = std::sqrt(radicand);
    c.k_min = c.mean - s;
    c.k_max = c.mean + s;
    return c;
}

/// Analytic surfaces, mainly for testing and demos.
namespace surfaces {

inline ParametricSurface plane(const Vec3& origin, const Vec3& du, const Vec3& dv) {
    return [=](double u, double v) {
        SurfaceJet j;
        j.S = origin + u * du + v * dv;
        j.Su = du;
        j.Sv = dv;
        return j;
    };
}

/// Sphere of radius r, u = polar angle in (0, pi), v = azimuth.
inline ParametricSurface sphere(double r) {
    return [=](double u, double v) {
        const double su = std::sin(u), cu = std::cos(u);
        const double sv = std::sin(v), cv = std::cos(v);
        SurfaceJet j;
        j.S = r * Vec3(su * cv, su * sv, cu);
        j.Su = r * Vec3(cu * cv, cu * sv, -su);
        j.Sv = r * Vec3(-su * sv, su * cv, 0);
        j.Suu = -j.S;
        j.Svv = r * Vec3(-su * cv, -su * sv, 0);
        j.Suv = r * Vec3(-cu * sv, cu * cv, 0);
        return j;
    };
}

/// Cylinder of radius r about the z-axis, u = azimuth, v = height.
inline ParametricSurface cylinder(double r) {
    return [=](double u, double v) {
        SurfaceJet j;
        j.S = Vec3(r * std::cos(u), r * std::sin(u), v);
        j.Su = Vec3(-r * std::sin(u), r * std::cos(u), 0);
        j.Sv = Vec3(0, 0, 1);
        j.Suu = Vec3(-r * std::cos(u), -r * std::sin(u), 0);
        return j;
    };
}

/// Torus with major radius R and minor radius r.
inline ParametricSurface torus(double R, double r) {
    return [=](double u, double v) {
        const double cu = std::cos(u), su = std::sin(u);
        const double cv = std::cos(v), sv = std::sin(v);
        SurfaceJet j;
        j.S = Vec3((R + r * cv) * cu, (R + r * cv) * su, r * sv);
        j.Su = Vec3(-(R + r * cv) * su, (R + r * cv) * cu, 0);
        j.Sv = Vec3(-r * sv * cu, -r * sv * su, r * cv);
        j.Suu = Vec3(-(R + r * cv) * cu, -(R + r * cv) * su, 0);
        j.Svv = Vec3(-r * cv * cu, -r * cv * su, -r * sv);
        j.Suv = Vec3(r * sv * su, -r * sv * cu, 0);
        return j;
    };
}

}  // namespace surfaces

}  // namespace vtg
