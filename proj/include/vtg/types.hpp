#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

namespace vtg {

using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

/// Geometry is carried in millimetres; kinematic quantities in SI (m, s).
/// The two regimes meet only at documented conversion points.
inline constexpr double kMmPerM = 1000.0;

/// Two consecutive toolpath points closer than this are considered coincident.
inline constexpr double kCoincidentTolMm = 1e-9;

enum class Role { perimeter, infill, travel };

inline const char* to_string(Role r) {
    switch (r) {
        case Role::perimeter: return "perimeter";
        case Role::infill: return "infill";
        case Role::travel: return "travel";
    }
    return "?";
}

inline std::optional<Role> role_from_string(const std::string& s) {
    if (s == "perimeter") return Role::perimeter;
    if (s == "infill") return Role::infill;
    if (s == "travel") return Role::travel;
    return std::nullopt;
}

struct ToolpathPoint {
    Vec3 position = Vec3::Zero();  // mm
    Role role = Role::travel;
    int layer = 1;                      // 1-based, non-decreasing along the path
    std::optional<double> feed;         // m/s, when known

    bool operator==(const ToolpathPoint& o) const {
        return position == o.position && role == o.role && layer == o.layer && feed == o.feed;
    }
};

/// An ordered sequence of machine moves. The segment (i-1, i) carries the
/// role and layer of its destination point i.
struct Toolpath {
    std::vector<ToolpathPoint> points;

    bool empty() const { return points.empty(); }
    std::size_t size() const { return points.size(); }
    int layer_count() const {
        int n = 0;
        for (const auto& p : points) n = std::max(n, p.layer);
        return n;
    }

    void append(const Vec3& pos, Role role, int layer, std::optional<double> feed = std::nullopt) {
        points.push_back(ToolpathPoint{pos, role, layer, feed});
    }

    bool operator==(const Toolpath& o) const { return points == o.points; }
};

/// Index range [first, last) of a run of same-role extrusion points forming
/// one continuously deposited polyline. `anchor` is the point immediately
/// before the run (usually the travel destination that positioned the nozzle);
/// it is the geometric start vertex of the polyline when present.
struct PolylineSpan {
    std::size_t first = 0;
    std::size_t last = 0;
    std::optional<std::size_t> anchor;
    int layer = 1;
    Role role = Role::infill;

    std::size_t size() const { return last - first; }

    /// Polyline vertices in order, anchor included.
    std::vector<Vec3> positions(const Toolpath& path) const {
        std::vector<Vec3> out;
        out.reserve(size() + 1);
        if (anchor) out.push_back(path.points[*anchor].position);
        for (std::size_t i = first; i < last; ++i) out.push_back(path.points[i].position);
        return out;
    }
};

/// Splits a toolpath into continuous extrusion polylines, cutting at travel
/// moves, role changes, and layer changes.
inline std::vector<PolylineSpan> split_polylines(const Toolpath& path) {
    std::vector<PolylineSpan> spans;
    const auto& pts = path.points;
    std::size_t i = 0;
    while (i < pts.size()) {
        if (pts[i].role == Role::travel) {
            ++i;
            continue;
        }
        PolylineSpan span{i, i + 1, std::nullopt, pts[i].layer, pts[i].role};
        if (i > 0) span.anchor = i - 1;
        std::size_t j = i + 1;
        while (j < pts.size() && pts[j].role == span.role && pts[j].layer == span.layer) {
            ++j;
        }
        span.last = j;
        spans.push_back(span);
        i = j;
    }
    return spans;
}

}  // namespace vtg
