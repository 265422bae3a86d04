#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dnrl/errors.hpp"
#include "dnrl/geometry.hpp"

namespace dnrl {

struct StartPose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;
};

/// Static planar world: rectangular bounds, obstacles, start poses and
/// optional goal points. The bounds act as four enclosing walls.
struct WorldModel {
    AxisAlignedBox bounds;
    std::vector<Shape> obstacles;
    std::vector<StartPose> starts;
    std::vector<Vec2> goals;

    double diagonal() const {
        return std::hypot(bounds.xmax - bounds.xmin, bounds.ymax - bounds.ymin);
    }
};

/// Distance from p to the nearest obstacle surface or bounding wall.
/// Zero on a surface and inside any solid obstacle.
inline double min_clearance(const WorldModel& w, Vec2 p) {
    double best = std::min(std::min(p.x - w.bounds.xmin, w.bounds.xmax - p.x),
                           std::min(p.y - w.bounds.ymin, w.bounds.ymax - p.y));
    best = std::max(0.0, best);
    for (const auto& s : w.obstacles) best = std::min(best, distance(p, s));
    return best;
}

namespace detail {

inline const nlohmann::json& require_field(const nlohmann::json& j, const char* key,
                                           const std::string& where) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(where + ": missing field \"" + key + "\"");
    return *it;
}

inline Vec2 parse_vec2(const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw ParseError(where + ": expected [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<const char*> known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw ParseError(where + ": unknown field \"" + it.key() + "\"");
    }
}

} // namespace detail

inline WorldModel parse_world(const nlohmann::json& j, const std::string& origin) {
    using detail::parse_vec2;
    using detail::require_field;
    if (!j.is_object()) throw ParseError(origin + ": world file must be a JSON object");
    detail::reject_unknown_keys(j, {"bounds", "obstacles", "starts", "goals"}, origin);

    WorldModel w;
    const auto& jb = require_field(j, "bounds", origin);
    if (!jb.is_array() || jb.size() != 4) throw ParseError(origin + ": bounds: expected [xmin, ymin, xmax, ymax]");
    w.bounds = {jb[0].get<double>(), jb[1].get<double>(), jb[2].get<double>(), jb[3].get<double>()};
    if (!(w.bounds.xmin < w.bounds.xmax) || !(w.bounds.ymin < w.bounds.ymax))
        throw ParseError(origin + ": bounds: min must be strictly less than max");

    const auto& jo = require_field(j, "obstacles", origin);
    if (!jo.is_array()) throw ParseError(origin + ": obstacles: expected an array");
    for (std::size_t i = 0; i < jo.size(); ++i) {
        const std::string where = origin + ": obstacles[" + std::to_string(i) + "]";
        const auto& o = jo[i];
        const std::string type = require_field(o, "type", where).get<std::string>();
        if (type == "circle") {
            detail::reject_unknown_keys(o, {"type", "c", "r"}, where);
            Circle c{parse_vec2(require_field(o, "c", where), where + ".c"),
                     require_field(o, "r", where).get<double>()};
            if (!(c.radius > 0.0)) throw ParseError(where + ".r: must be > 0");
            w.obstacles.emplace_back(c);
        } else if (type == "box") {
            detail::reject_unknown_keys(o, {"type", "min", "max"}, where);
            const Vec2 lo = parse_vec2(require_field(o, "min", where), where + ".min");
            const Vec2 hi = parse_vec2(require_field(o, "max", where), where + ".max");
            if (!(lo.x < hi.x) || !(lo.y < hi.y)) throw ParseError(where + ": min must be strictly less than max");
            w.obstacles.emplace_back(AxisAlignedBox{lo.x, lo.y, hi.x, hi.y});
        } else if (type == "segment") {
            detail::reject_unknown_keys(o, {"type", "a", "b"}, where);
            w.obstacles.emplace_back(Segment{parse_vec2(require_field(o, "a", where), where + ".a"),
                                             parse_vec2(require_field(o, "b", where), where + ".b")});
        } else {
            throw ParseError(where + ".type: unknown shape type \"" + type + "\"");
        }
    }

    const auto& js = require_field(j, "starts", origin);
    if (!js.is_array() || js.empty()) throw ParseError(origin + ": starts: expected a non-empty array");
    for (std::size_t i = 0; i < js.size(); ++i) {
        const std::string where = origin + ": starts[" + std::to_string(i) + "]";
        const auto& p = js[i];
        if (!p.is_array() || p.size() != 3) throw ParseError(where + ": expected [x, y, theta]");
        w.starts.push_back({p[0].get<double>(), p[1].get<double>(), normalize_angle(p[2].get<double>())});
    }

    if (j.contains("goals")) {
        const auto& jg = j["goals"];
        if (!jg.is_array()) throw ParseError(origin + ": goals: expected an array");
        for (std::size_t i = 0; i < jg.size(); ++i)
            w.goals.push_back(parse_vec2(jg[i], origin + ": goals[" + std::to_string(i) + "]"));
    }

    // Validation: everything strictly inside bounds, starts clear of obstacles.
    constexpr double kStartClearance = 0.3; // training collision threshold
    for (std::size_t i = 0; i < w.starts.size(); ++i) {
        const auto& s = w.starts[i];
        const std::string where = origin + ": starts[" + std::to_string(i) + "]";
        if (!(s.x > w.bounds.xmin && s.x < w.bounds.xmax && s.y > w.bounds.ymin && s.y < w.bounds.ymax))
            throw ConfigError(where + ": pose outside world bounds");
        if (min_clearance(w, {s.x, s.y}) <= kStartClearance)
            throw ConfigError(where + ": start clearance below collision threshold");
    }
    for (std::size_t i = 0; i < w.goals.size(); ++i) {
        const auto& g = w.goals[i];
        if (!(g.x > w.bounds.xmin && g.x < w.bounds.xmax && g.y > w.bounds.ymin && g.y < w.bounds.ymax))
            throw ConfigError(origin + ": goals[" + std::to_string(i) + "]: point outside world bounds");
    }
    return w;
}

inline WorldModel load_world(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open world file");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + e.what());
    }
    return parse_world(j, path);
}

/// Resolve a bundled world name or a literal path. Names are looked up in
/// DNRL_WORLD_DIR, then in ./worlds relative to the working directory.
inline std::string resolve_world_path(const std::string& name_or_path) {
    namespace fs = std::filesystem;
    if (fs::exists(name_or_path)) return name_or_path;
    std::vector<std::string> dirs;
    if (const char* env = std::getenv("DNRL_WORLD_DIR")) dirs.push_back(env);
    dirs.push_back("worlds");
    for (const auto& d : dirs) {
        fs::path p = fs::path(d) / (name_or_path + ".json");
        if (fs::exists(p)) return p.string();
    }
    throw ConfigError("world \"" + name_or_path + "\": no such file or bundled world");
}

} // namespace dnrl
