#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "vtg/errors.hpp"
#include "vtg/types.hpp"

namespace vtg {

/// One G0/G1 move plus the directives seen since the previous move.
struct GcodeMove {
    bool rapid = false;  // G0
    std::optional<double> x, y, z;  // mm
    std::optional<double> e;        // mm of filament
    std::optional<double> f;        // mm/min
    int line = 0;

    std::optional<int> layer_marker;          // ;LAYER:<n>
    std::optional<std::string> type_marker;   // ;TYPE:<text>, sticky
    std::optional<bool> absolute_e;           // M82 -> true, M83 -> false
    std::optional<double> e_reset;            // G92 E<value>
};

struct GcodeProgram {
    std::vector<GcodeMove> moves;
};

namespace detail {

inline double parse_number(std::string_view text, int line, int column) {
    double value = 0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        std::ostringstream os;
        os << "malformed number '" << std::string(text) << "'";
        throw ParseError(os.str(), line, column);
    }
    return value;
}

/// Strips parenthesized comments in place and returns the ';' comment tail
/// (without the semicolon), if any.
inline std::optional<std::string> strip_comments(std::string& s, int line) {
    std::string out;
    out.reserve(s.size());
    std::optional<std::string> tail;
    bool in_paren = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const char c = s[i];
        if (in_paren) {
            if (c == ')') in_paren = false;
            continue;
        }
        if (c == '(') {
            in_paren = true;
            continue;
        }
        if (c == ';') {
            tail = s.substr(i + 1);
            break;
        }
        out.push_back(c);
    }
    if (in_paren) throw ParseError("unterminated parenthesized comment", line);
    s = std::move(out);
    return tail;
}

inline std::string trim(std::string s) {
    const auto is_space = [](unsigned char c) { return std::isspace(c); };
    while (!s.empty() && is_space(s.front())) s.erase(s.begin());
    while (!s.empty() && is_space(s.back())) s.pop_back();
    return s;
}

}  // namespace detail

/// Parses the supported G-code subset: G0/G1 moves with X/Y/Z/E/F words,
/// M82/M83 extruder-mode switches, G92 E resets, ';' and '(...)' comments,
/// and ;LAYER: / ;TYPE: markers. Anything else raises ParseError with its
/// line number.
inline GcodeProgram parse_gcode(const std::string& text) {
    GcodeProgram program;
    std::optional<int> pending_layer;
    std::optional<std::string> sticky_type;
    std::optional<bool> pending_e_mode;
    std::optional<double> pending_e_reset;

    std::istringstream stream(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(stream, raw)) {
        ++line_no;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        std::string body = raw;
        const auto comment = detail::strip_comments(body, line_no);
        if (comment) {
            const std::string c = detail::trim(*comment);
            if (c.rfind("LAYER:", 0) == 0) {
                pending_layer = static_cast<int>(
                    detail::parse_number(detail::trim(c.substr(6)), line_no, 0));
            } else if (c.rfind("TYPE:", 0) == 0) {
                sticky_type = detail::trim(c.substr(5));
            }
        }
        body = detail::trim(body);
        if (body.empty()) continue;

        // Split into words: letter immediately followed by a number.
        struct Word {
            char letter;
            std::string value;
            int column;
        };
        std::vector<Word> words;
        std::size_t i = 0;
        while (i < body.size()) {
            if (std::isspace(static_cast<unsigned char>(body[i]))) {
                ++i;
                continue;
            }
            const char letter = static_cast<char>(
                std::toupper(static_cast<unsigned char>(body[i])));
            if (letter < 'A' || letter > 'Z')
                throw ParseError("expected a command letter", line_no, static_cast<int>(i) + 1);
            const int column = static_cast<int>(i) + 1;
            ++i;
            std::string value;
            while (i < body.size() &&
                   !std::isspace(static_cast<unsigned char>(body[i])) &&
                   !std::isalpha(static_cast<unsigned char>(body[i]))) {
                value.push_back(body[i]);
                ++i;
            }
            if (value.empty())
                throw ParseError("command letter without a number", line_no, column);
            words.push_back({letter, std::move(value), column});
        }
        if (words.empty()) continue;

        const auto& head = words.front();
        if (head.value.find('.') != std::string::npos) {
            std::ostringstream os;
            os << "unsupported command '" << head.letter << head.value << "'";
            throw ParseError(os.str(), line_no, head.column);
        }
        const int code = static_cast<int>(detail::parse_number(head.value, line_no, head.column));
        if (head.letter == 'G' && (code == 0 || code == 1)) {
            GcodeMove mv;
            mv.rapid = code == 0;
            mv.line = line_no;
            for (std::size_t w = 1; w < words.size(); ++w) {
                const double v = detail::parse_number(words[w].value, line_no, words[w].column);
                switch (words[w].letter) {
                    case 'X': mv.x = v; break;
                    case 'Y': mv.y = v; break;
                    case 'Z': mv.z = v; break;
                    case 'E': mv.e = v; break;
                    case 'F': mv.f = v; break;
                    default: {
                        std::ostringstream os;
                        os << "unsupported word '" << words[w].letter << "' in move";
                        throw ParseError(os.str(), line_no, words[w].column);
                    }
                }
            }
            mv.layer_marker = pending_layer;
            mv.type_marker = sticky_type;
            mv.absolute_e = pending_e_mode;
            mv.e_reset = pending_e_reset;
            pending_layer.reset();
            pending_e_mode.reset();
            pending_e_reset.reset();
            program.moves.push_back(std::move(mv));
        } else if (head.letter == 'M' && (code == 82 || code == 83)) {
            pending_e_mode = code == 82;
        } else if (head.letter == 'G' && code == 92) {
            for (std::size_t w = 1; w < words.size(); ++w) {
                const double v = detail::parse_number(words[w].value, line_no, words[w].column);
                if (words[w].letter == 'E') pending_e_reset = v;
            }
        } else {
            std::ostringstream os;
            os << "unsupported command '" << head.letter << code << "'";
            throw ParseError(os.str(), line_no, head.column);
        }
    }
    return program;
}

/// Lowers a parsed program to a toolpath. Coordinates are modal; the first
/// move must establish X, Y, and Z. Extruding G1 moves become infill points
/// (perimeter when the sticky ;TYPE: marker names a perimeter/wall); G0 and
/// non-extruding G1 become travel. Layers follow ;LAYER: markers when the
/// file has any, otherwise Z increases; indices are densified to 1..n_L.
inline Toolpath to_toolpath(const GcodeProgram& program) {
    Toolpath path;
    if (program.moves.empty()) return path;

    // Extruder mode: M82/M83 win; otherwise absolute unless that reading
    // makes >20% of the extruding moves retract.
    bool absolute_e = true;
    {
        bool any_mode_cmd = false;
        for (const auto& mv : program.moves)
            if (mv.absolute_e) any_mode_cmd = true;
        if (!any_mode_cmd) {
            int negative = 0, total = 0;
            double e_prev = 0;
            for (const auto& mv : program.moves) {
                if (mv.e_reset) e_prev = *mv.e_reset;
                if (!mv.e) continue;
                ++total;
                if (*mv.e < e_prev) ++negative;
                e_prev = *mv.e;
            }
            if (total > 0 && negative > total / 5) absolute_e = false;
        }
    }

    std::optional<double> x, y, z;
    double e_pos = 0;
    bool mode_abs = absolute_e;
    std::optional<double> feed_mm_min;
    bool has_layer_markers = false;
    for (const auto& mv : program.moves)
        if (mv.layer_marker) has_layer_markers = true;

    int raw_layer = has_layer_markers ? 0 : 1;
    std::optional<double> last_z;
    std::vector<int> raw_layers;

    for (const auto& mv : program.moves) {
        if (mv.absolute_e) mode_abs = *mv.absolute_e;
        if (mv.e_reset) e_pos = *mv.e_reset;
        if (mv.x) x = mv.x;
        if (mv.y) y = mv.y;
        if (mv.z) z = mv.z;
        if (mv.f) feed_mm_min = mv.f;
        if (!x || !y || !z)
            throw ParseError("move before X, Y and Z are all established", mv.line);

        double e_delta = 0;
        if (mv.e) {
            if (mode_abs) {
                e_delta = *mv.e - e_pos;
                e_pos = *mv.e;
            } else {
                e_delta = *mv.e;
                e_pos += e_delta;
            }
        }

        if (has_layer_markers) {
            if (mv.layer_marker) raw_layer = *mv.layer_marker;
        } else if (last_z && *z > *last_z + 1e-12) {
            ++raw_layer;
        }
        last_z = z;

        Role role = Role::travel;
        if (!mv.rapid && e_delta > 1e-12) {
            role = Role::infill;
            if (mv.type_marker) {
                std::string t = *mv.type_marker;
                std::transform(t.begin(), t.end(), t.begin(),
                               [](unsigned char c) { return std::tolower(c); });
                if (t.find("perimeter") != std::string::npos ||
                    t.find("wall") != std::string::npos)
                    role = Role::perimeter;
            }
        }

        std::optional<double> feed;
        if (feed_mm_min) feed = *feed_mm_min / 60000.0;  // mm/min -> m/s
        path.append(Vec3(*x, *y, *z), role, raw_layer, feed);
        raw_layers.push_back(raw_layer);
    }

    // Densify layer indices to 1..n_L preserving order of first appearance.
    std::map<int, int> remap;
    for (int rl : raw_layers)
        if (!remap.count(rl)) remap.emplace(rl, static_cast<int>(remap.size()) + 1);
    int prev_layer = 0;
    for (std::size_t i = 0; i < path.points.size(); ++i) {
        const int mapped = remap.at(raw_layers[i]);
        if (mapped < prev_layer)
            throw ParseError("layer markers decrease along the file", program.moves[i].line);
        path.points[i].layer = mapped;
        prev_layer = mapped;
    }
    return path;
}

inline Toolpath parse_gcode_to_toolpath(const std::string& text) {
    return to_toolpath(parse_gcode(text));
}

}  // namespace vtg
