#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vtg/errors.hpp"
#include "vtg/types.hpp"

namespace vtg {

struct PathMetrics {
    double length_total = 0;                  // mm, travel included
    double length_infill = 0;                 // mm
    std::map<int, double> length_per_layer;   // mm, by layer index
    std::size_t n_total = 0;                  // points
    std::size_t n_infill = 0;                 // points with infill role
    std::size_t n_turning = 0;                // sharp corners (theta > delta_theta)
    std::size_t n_noncollinear = 0;           // all corners with theta > duplicate tolerance
    double mean_chord_error = 0;              // mm
};

struct LengthSummary {
    double total = 0;
    double infill = 0;
    std::map<int, double> per_layer;
};

/// Consecutive-segment lengths. A segment carries the role and layer of its
/// destination point: travel counts toward the total but not toward infill.
inline LengthSummary path_lengths(const Toolpath& path) {
    if (path.empty()) throw DomainError("path_lengths needs a non-empty path");
    LengthSummary s;
    for (std::size_t i = 1; i < path.points.size(); ++i) {
        const auto& dst = path.points[i];
        const double d = (dst.position - path.points[i - 1].position).norm();
        s.total += d;
        s.per_layer[dst.layer] += d;
        if (dst.role == Role::infill) s.infill += d;
    }
    return s;
}

struct TurningAngles {
    std::vector<double> angles;              // rad, one per interior polyline vertex
    std::vector<std::size_t> sharp_indices;  // point indices with angle > delta_theta
    std::size_t n_turning = 0;               // sharp corner count
    std::size_t n_noncollinear = 0;          // corners with angle above numeric zero
    std::size_t skipped_degenerate = 0;      // zero-length segments skipped
    std::map<int, double> mean_per_layer;    // rad
};

/// Direction-change angle at every interior vertex of every continuous
/// extrusion polyline. Angles lie in [0, pi]; a sharp corner exceeds
/// delta_theta.
inline TurningAngles turning_angles(const Toolpath& path, double delta_theta) {
    TurningAngles out;
    std::map<int, std::pair<double, std::size_t>> layer_acc;
    for (const auto& span : split_polylines(path)) {
        const auto pts = span.positions(path);
        for (std::size_t i = 0; i + 2 < pts.size(); ++i) {
            const Vec3 a = pts[i + 1] - pts[i];
            const Vec3 b = pts[i + 2] - pts[i + 1];
            const double na = a.norm(), nb = b.norm();
            if (na <= kCoincidentTolMm || nb <= kCoincidentTolMm) {
                ++out.skipped_degenerate;
                continue;
            }
            const double c = std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
            const double theta = std::acos(c);
            out.angles.push_back(theta);
            auto& [sum, count] = layer_acc[span.layer];
            sum += theta;
            ++count;
            if (theta > 1e-12) ++out.n_noncollinear;
            if (theta > delta_theta) {
                ++out.n_turning;
                // Index of the middle point within the toolpath.
                const std::size_t base = span.anchor ? *span.anchor : span.first;
                out.sharp_indices.push_back(base + i + 1);
            }
        }
    }
    for (const auto& [layer, acc] : layer_acc)
        if (acc.second > 0) out.mean_per_layer[layer] = acc.first / acc.second;
    return out;
}

/// Circumscribed-circle radius of a point triple; infinity for collinear
/// triples, nullopt when the triple contains duplicates.
inline std::optional<double> circumradius(const Vec3& a, const Vec3& b, const Vec3& c) {
    const double la = (b - c).norm();
    const double lb = (a - c).norm();
    const double lc = (a - b).norm();
    if (la <= kCoincidentTolMm || lb <= kCoincidentTolMm || lc <= kCoincidentTolMm)
        return std::nullopt;
    const double cross2 = (b - a).cross(c - a).norm();  // 2 * triangle area
    if (cross2 <= kCoincidentTolMm * std::max({la, lb, lc}))
        return std::numeric_limits<double>::infinity();
    return la * lb * lc / (2.0 * cross2);
}

/// Three-point curvature estimate 1/r_i; zero for collinear triples.
inline std::optional<double> three_point_curvature(const Vec3& a, const Vec3& b, const Vec3& c) {
    const auto r = circumradius(a, b, c);
    if (!r) return std::nullopt;
    return std::isinf(*r) ? 0.0 : 1.0 / *r;
}

struct ChordErrors {
    std::vector<double> errors;  // mm, one per valid triple
    double mean = 0;
    std::size_t skipped_duplicates = 0;
};

/// e_c = r - sqrt(r^2 - (chord/2)^2) per consecutive triple inside each
/// extrusion polyline, with r the triple's circumradius and chord the first
/// leg. Collinear triples contribute exactly zero (infinite-radius limit).
inline ChordErrors chord_errors(const Toolpath& path) {
    ChordErrors out;
    double sum = 0;
    for (const auto& span : split_polylines(path)) {
        const auto pts = span.positions(path);
        for (std::size_t i = 0; i + 2 < pts.size(); ++i) {
            const auto r = circumradius(pts[i], pts[i + 1], pts[i + 2]);
            if (!r) {
                ++out.skipped_duplicates;
                continue;
            }
            double e = 0.0;
            if (!std::isinf(*r)) {
                const double half_chord = 0.5 * (pts[i + 1] - pts[i]).norm();
                const double rad = std::max(0.0, *r * *r - half_chord * half_chord);
                e = *r - std::sqrt(rad);
            }
            out.errors.push_back(e);
            sum += e;
        }
    }
    if (!out.errors.empty()) out.mean = sum / static_cast<double>(out.errors.size());
    return out;
}

/// Layer position as a percentage of total part height.
inline double normalized_height(double z_layer, double z_total) {
    if (!(z_total > 0)) throw DomainError("total height must be positive");
    if (z_layer < 0 || z_layer > z_total)
        throw DomainError("layer height must lie within [0, total height]");
    return z_layer / z_total * 100.0;
}

/// All toolpath quality metrics in one pass.
inline PathMetrics compute_path_metrics(const Toolpath& path, double delta_theta) {
    PathMetrics m;
    const auto len = path_lengths(path);
    m.length_total = len.total;
    m.length_infill = len.infill;
    m.length_per_layer = len.per_layer;
    m.n_total = path.size();
    for (const auto& p : path.points)
        if (p.role == Role::infill) ++m.n_infill;
    const auto ta = turning_angles(path, delta_theta);
    m.n_turning = ta.n_turning;
    m.n_noncollinear = ta.n_noncollinear;
    m.mean_chord_error = chord_errors(path).mean;
    return m;
}

/// One before/after comparison row. `ratio_pct` is empty when the baseline
/// is zero (undefined, never infinity).
struct ComparisonRow {
    std::string metric;
    double before = 0;
    double after = 0;
    std::optional<double> ratio_pct;
};

inline ComparisonRow make_row(std::string name, double before, double after) {
    ComparisonRow row{std::move(name), before, after, std::nullopt};
    if (before != 0.0)
        row.ratio_pct = (after - before) / before * 100.0;
    else if (after == 0.0)
        row.ratio_pct = 0.0;  // unchanged zero baseline
    return row;
}

/// Everything a single pipeline run reports; deviation and energy entries
/// are optional so purely geometric comparisons still work.
struct RunSummary {
    PathMetrics metrics;
    std::optional<double> deviation_max;
    std::optional<double> deviation_min;
    std::optional<double> deviation_mean;
    std::optional<double> energy_total;
    std::optional<double> carbon_kg;
};

using ComparisonReport = std::vector<ComparisonRow>;

/// Row names follow the tabular report vocabulary used across the toolkit.
inline ComparisonReport compare(const RunSummary& before, const RunSummary& after) {
    ComparisonReport rows;
    rows.push_back(make_row("total_toolpath_length_mm", before.metrics.length_total,
                            after.metrics.length_total));
    rows.push_back(make_row("n_total_points", static_cast<double>(before.metrics.n_total),
                            static_cast<double>(after.metrics.n_total)));
    rows.push_back(make_row("infill_toolpath_length_mm", before.metrics.length_infill,
                            after.metrics.length_infill));
    rows.push_back(make_row("n_infill_points", static_cast<double>(before.metrics.n_infill),
                            static_cast<double>(after.metrics.n_infill)));
    rows.push_back(make_row("n_turning_points", static_cast<double>(before.metrics.n_turning),
                            static_cast<double>(after.metrics.n_turning)));
    rows.push_back(make_row("mean_chord_error_mm", before.metrics.mean_chord_error,
                            after.metrics.mean_chord_error));
    auto opt_row = [&](const char* name, const std::optional<double>& b,
                       const std::optional<double>& a) {
        if (b && a) rows.push_back(make_row(name, *b, *a));
    };
    opt_row("max_toolpath_deviation_mm", before.deviation_max, after.deviation_max);
    opt_row("min_toolpath_deviation_mm", before.deviation_min, after.deviation_min);
    opt_row("mean_toolpath_deviation_mm", before.deviation_mean, after.deviation_mean);
    opt_row("total_energy_J", before.energy_total, after.energy_total);
    opt_row("carbon_emission_kg", before.carbon_kg, after.carbon_kg);
    return rows;
}

}  // namespace vtg
