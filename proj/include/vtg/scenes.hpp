#pragma once

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "vtg/errors.hpp"
#include "vtg/types.hpp"

namespace vtg {

struct Circle {
    double cx = 0;      // mm
    double cy = 0;      // mm
    double radius = 0;  // mm
};

/// One slicing layer of an analytic benchmark scene.
struct LayerRegion {
    double z = 0;    // mm
    double h_n = 0;  // percent of total height
    std::vector<Circle> circles;
};

enum class InfillPattern { line, grid, concentric };

inline const char* to_string(InfillPattern p) {
    switch (p) {
        case InfillPattern::line: return "line";
        case InfillPattern::grid: return "grid";
        case InfillPattern::concentric: return "concentric";
    }
    return "?";
}

inline std::optional<InfillPattern> pattern_from_string(const std::string& s) {
    if (s == "line") return InfillPattern::line;
    if (s == "grid") return InfillPattern::grid;
    if (s == "concentric") return InfillPattern::concentric;
    return std::nullopt;
}

struct InfillSpec {
    InfillPattern pattern = InfillPattern::concentric;
    double spacing = 2.0;  // mm
    double angle = 0.0;    // rad, scanline direction for line/grid

    void validate() const {
        if (!(spacing > 0)) throw DomainError("infill spacing must be positive");
    }
};

/// 4x4 cylinder-array cross-section geometry.
struct W16Geometry {
    double pitch = 60.0;            // mm between cylinder centers
    double cylinder_radius = 25.0;  // mm
    double total_height = 100.0;    // mm
};

/// The 16-cylinder benchmark layer at normalized height h_n (percent).
/// Cylinders sit on a centered 4x4 lattice.
inline LayerRegion w16_layer(double h_n_percent, const W16Geometry& g = {}) {
    if (!(h_n_percent > 0.0 && h_n_percent <= 100.0))
        throw DomainError("normalized height must lie in (0, 100]");
    if (g.cylinder_radius >= g.pitch / 2.0) {
        std::ostringstream os;
        os << "cylinders overlap: radius " << g.cylinder_radius << " >= pitch/2 "
           << g.pitch / 2.0;
        throw DomainError(os.str());
    }
    LayerRegion region;
    region.h_n = h_n_percent;
    region.z = h_n_percent / 100.0 * g.total_height;
    for (int j = 0; j < 4; ++j)
        for (int i = 0; i < 4; ++i)
            region.circles.push_back(
                Circle{(i - 1.5) * g.pitch, (j - 1.5) * g.pitch, g.cylinder_radius});
    return region;
}

struct InfillResult {
    Toolpath toolpath;
    std::vector<std::string> warnings;
};

namespace detail {

/// Samples of a full circle of radius R with chords no longer than
/// max_chord, closed (first point repeated at the end).
inline std::vector<Vec3> sample_ring(const Circle& c, double R, double z, double max_chord) {
    int n = 8;
    if (max_chord < 2.0 * R) {
        const double ratio = std::min(1.0, max_chord / (2.0 * R));
        n = std::max(n, static_cast<int>(std::ceil(std::numbers::pi / std::asin(ratio))));
    }
    std::vector<Vec3> pts;
    pts.reserve(n + 1);
    for (int k = 0; k <= n; ++k) {
        const double a = 2.0 * std::numbers::pi * k / n;
        pts.emplace_back(c.cx + R * std::cos(a), c.cy + R * std::sin(a), z);
    }
    pts.back() = pts.front();
    return pts;
}

inline void emit_line_pass(Toolpath& path,
                           const Circle& c,
                           double z,
                           double spacing,
                           double angle,
                           int layer,
                           bool& any) {
    const Vec3 dir(std::cos(angle), std::sin(angle), 0.0);
    const Vec3 nrm(-std::sin(angle), std::cos(angle), 0.0);
    const Vec3 center(c.cx, c.cy, z);

    // Scanlines at offsets (k + 1/2) * spacing on both sides of the center.
    const int k_max = static_cast<int>(std::floor(c.radius / spacing - 0.5 + 1e-12));
    bool reverse = false;
    for (int k = -k_max - 1; k <= k_max; ++k) {
        const double offset = (k + 0.5) * spacing;
        if (std::abs(offset) >= c.radius) continue;
        const double half = std::sqrt(c.radius * c.radius - offset * offset);
        Vec3 a = center + offset * nrm - half * dir;
        Vec3 b = center + offset * nrm + half * dir;
        if (reverse) std::swap(a, b);
        path.append(a, Role::travel, layer);
        path.append(b, Role::infill, layer);
        reverse = !reverse;
        any = true;
    }
}

}  // namespace detail

/// Infill toolpath for every circle of a layer. line: parallel chords at the
/// given angle, serpentine order, connections tagged travel. grid: two line
/// passes at angle and angle+90deg. concentric: rings inset s/2 from the
/// perimeter and s apart, sampled with chords <= s/2 and emitted as closed
/// polygons from the outside in. A spacing larger than every feature yields
/// an empty toolpath plus a warning.
inline InfillResult generate_infill(const LayerRegion& region,
                                    const InfillSpec& spec,
                                    int layer_index = 1) {
    spec.validate();
    InfillResult result;
    for (std::size_t ci = 0; ci < region.circles.size(); ++ci) {
        const Circle& c = region.circles[ci];
        if (!(c.radius > 0)) throw DomainError("circle radius must be positive");
        bool any = false;
        switch (spec.pattern) {
            case InfillPattern::line:
                detail::emit_line_pass(result.toolpath, c, region.z, spec.spacing, spec.angle,
                                       layer_index, any);
                break;
            case InfillPattern::grid:
                detail::emit_line_pass(result.toolpath, c, region.z, spec.spacing, spec.angle,
                                       layer_index, any);
                detail::emit_line_pass(result.toolpath, c, region.z, spec.spacing,
                                       spec.angle + std::numbers::pi / 2.0, layer_index, any);
                break;
            case InfillPattern::concentric:
                for (double R = c.radius - spec.spacing / 2.0; R >= spec.spacing / 2.0 - 1e-12;
                     R -= spec.spacing) {
                    if (!(R > 0)) break;
                    const auto ring = detail::sample_ring(c, R, region.z, spec.spacing / 2.0);
                    result.toolpath.append(ring.front(), Role::travel, layer_index);
                    for (std::size_t i = 1; i < ring.size(); ++i)
                        result.toolpath.append(ring[i], Role::infill, layer_index);
                    any = true;
                }
                break;
        }
        if (!any) {
            std::ostringstream os;
            os << "spacing " << spec.spacing << " mm leaves no infill inside circle " << ci
               << " (radius " << c.radius << " mm)";
            result.warnings.push_back(os.str());
        }
    }
    return result;
}

/// Perimeter rings (one per circle) sampled with chords <= max_chord.
inline Toolpath generate_perimeter(const LayerRegion& region,
                                   double max_chord,
                                   int layer_index = 1) {
    if (!(max_chord > 0)) throw DomainError("perimeter chord bound must be positive");
    Toolpath path;
    for (const Circle& c : region.circles) {
        const auto ring = detail::sample_ring(c, c.radius, region.z, max_chord);
        path.append(ring.front(), Role::travel, layer_index);
        for (std::size_t i = 1; i < ring.size(); ++i)
            path.append(ring[i], Role::perimeter, layer_index);
    }
    return path;
}

}  // namespace vtg
