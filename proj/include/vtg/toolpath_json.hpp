#pragma once

#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vtg/errors.hpp"
#include "vtg/nurbs.hpp"
#include "vtg/types.hpp"

namespace vtg {

using ordered_json = nlohmann::ordered_json;

/// Native toolpath schema:
///   {"units":"mm","layers":[{"z":<mm>,"paths":[
///       {"role":"perimeter|infill|travel","points":[[x,y,z],...],"feed":<m/s>?}]}]}
/// Paths are maximal runs of identical (role, feed); the layer's z field is
/// informative (the first point's z). Layer identity is the array position,
/// so indices are densified on write.
inline ordered_json toolpath_to_json(const Toolpath& path) {
    ordered_json root;
    root["units"] = "mm";
    root["layers"] = ordered_json::array();

    // Group points by layer, preserving order (indices are non-decreasing).
    std::size_t i = 0;
    while (i < path.points.size()) {
        const int layer = path.points[i].layer;
        ordered_json jlayer;
        jlayer["z"] = path.points[i].position.z();
        jlayer["paths"] = ordered_json::array();
        while (i < path.points.size() && path.points[i].layer == layer) {
            const Role role = path.points[i].role;
            const auto feed = path.points[i].feed;
            ordered_json jpath;
            jpath["role"] = to_string(role);
            jpath["points"] = ordered_json::array();
            while (i < path.points.size() && path.points[i].layer == layer &&
                   path.points[i].role == role && path.points[i].feed == feed) {
                const auto& p = path.points[i].position;
                jpath["points"].push_back({p.x(), p.y(), p.z()});
                ++i;
            }
            if (feed) jpath["feed"] = *feed;
            jlayer["paths"].push_back(std::move(jpath));
        }
        root["layers"].push_back(std::move(jlayer));
    }
    return root;
}

inline Toolpath toolpath_from_json(const ordered_json& root) {
    if (!root.is_object()) throw ParseError("toolpath JSON root must be an object", 0);
    if (!root.contains("units") || root.at("units") != "mm")
        throw ParseError("toolpath JSON must declare units \"mm\"", 0);
    if (!root.contains("layers") || !root.at("layers").is_array())
        throw ParseError("toolpath JSON needs a \"layers\" array", 0);

    Toolpath path;
    int layer_index = 0;
    for (const auto& jlayer : root.at("layers")) {
        ++layer_index;
        if (!jlayer.is_object() || !jlayer.contains("paths") || !jlayer.at("paths").is_array())
            throw ParseError("each layer needs a \"paths\" array", 0);
        for (const auto& jpath : jlayer.at("paths")) {
            if (!jpath.contains("role") || !jpath.at("role").is_string())
                throw ParseError("each path needs a string \"role\"", 0);
            const auto role = role_from_string(jpath.at("role").get<std::string>());
            if (!role) {
                std::ostringstream os;
                os << "unknown role '" << jpath.at("role").get<std::string>() << "'";
                throw ParseError(os.str(), 0);
            }
            std::optional<double> feed;
            if (jpath.contains("feed")) feed = jpath.at("feed").get<double>();
            if (!jpath.contains("points") || !jpath.at("points").is_array())
                throw ParseError("each path needs a \"points\" array", 0);
            for (const auto& jp : jpath.at("points")) {
                if (!jp.is_array() || jp.size() != 3)
                    throw ParseError("each point must be [x, y, z]", 0);
                path.append(Vec3(jp[0].get<double>(), jp[1].get<double>(), jp[2].get<double>()),
                            *role, layer_index, feed);
            }
        }
    }
    return path;
}

inline Toolpath load_toolpath_json(const std::string& filename) {
    std::ifstream in(filename);
    if (!in) throw Error("cannot open toolpath file: " + filename);
    ordered_json root;
    try {
        in >> root;
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what(), 0);
    }
    return toolpath_from_json(root);
}

inline void save_toolpath_json(const Toolpath& path, const std::string& filename) {
    std::ofstream out(filename);
    if (!out) throw Error("cannot open output file: " + filename);
    out << toolpath_to_json(path).dump(2) << "\n";
}

/// Curve schema: {"degree":p,"knots":[...],"points":[[x,y,z],...],"weights":[...]}.
inline ordered_json curve_to_json(const NurbsCurve& curve) {
    ordered_json j;
    j["degree"] = curve.degree();
    j["knots"] = curve.knots();
    j["points"] = ordered_json::array();
    for (const auto& p : curve.control_points()) j["points"].push_back({p.x(), p.y(), p.z()});
    j["weights"] = curve.weights();
    return j;
}

inline NurbsCurve curve_from_json(const ordered_json& j) {
    if (!j.is_object() || !j.contains("degree") || !j.contains("knots") || !j.contains("points"))
        throw ParseError("curve JSON needs degree, knots, and points", 0);
    std::vector<Vec3> pts;
    for (const auto& jp : j.at("points")) {
        if (!jp.is_array() || jp.size() != 3)
            throw ParseError("each control point must be [x, y, z]", 0);
        pts.emplace_back(jp[0].get<double>(), jp[1].get<double>(), jp[2].get<double>());
    }
    std::vector<double> weights;
    if (j.contains("weights")) weights = j.at("weights").get<std::vector<double>>();
    return NurbsCurve(j.at("degree").get<int>(), j.at("knots").get<std::vector<double>>(),
                      std::move(pts), std::move(weights));
}

}  // namespace vtg
