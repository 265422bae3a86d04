#pragma once

#include <cmath>
#include <vector>

#include "dnrl/geometry.hpp"
#include "dnrl/world.hpp"

namespace dnrl {

struct Pose {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0; // (-pi, pi]
};

/// Exact unicycle step: the robot follows a circular arc of radius v/w for
/// dt seconds (straight line when |w| is numerically zero).
inline Pose step_kinematics(const Pose& p, double v, double w, double dt) {
    Pose out;
    if (std::abs(w) < 1e-9) {
        out.x = p.x + v * std::cos(p.theta) * dt;
        out.y = p.y + v * std::sin(p.theta) * dt;
        out.theta = normalize_angle(p.theta + w * dt);
    } else {
        const double r = v / w;
        out.x = p.x + r * (std::sin(p.theta + w * dt) - std::sin(p.theta));
        out.y = p.y - r * (std::cos(p.theta + w * dt) - std::cos(p.theta));
        out.theta = normalize_angle(p.theta + w * dt);
    }
    return out;
}

struct DepthScan {
    std::vector<double> beams; // meters, each in [0, max_range]
    double fov = 0.0;
    double max_range = 0.0;
};

/// Distance along (origin, angle) to the nearest obstacle or wall, clamped
/// to max_range when nothing is closer.
inline double cast_ray(const WorldModel& w, Vec2 origin, double angle, double max_range) {
    const Vec2 dir{std::cos(angle), std::sin(angle)};
    double best = max_range;
    auto consider = [&](const Shape& s) {
        if (auto t = ray_hit(origin, dir, s); t && *t < best) best = *t;
    };
    for (const auto& s : w.obstacles) consider(s);
    const auto& b = w.bounds;
    consider(Shape{Segment{{b.xmin, b.ymin}, {b.xmax, b.ymin}}});
    consider(Shape{Segment{{b.xmax, b.ymin}, {b.xmax, b.ymax}}});
    consider(Shape{Segment{{b.xmax, b.ymax}, {b.xmin, b.ymax}}});
    consider(Shape{Segment{{b.xmin, b.ymax}, {b.xmin, b.ymin}}});
    return best;
}

/// Render a depth scan of `beams` rays spread symmetrically about the robot
/// heading: beam i points at theta - fov/2 + i * fov/(beams-1).
inline DepthScan render_scan(const WorldModel& w, const Pose& p, int beams, double fov,
                             double max_range) {
    DepthScan scan;
    scan.fov = fov;
    scan.max_range = max_range;
    scan.beams.resize(static_cast<std::size_t>(beams));
    const double step = fov / static_cast<double>(beams - 1);
    for (int i = 0; i < beams; ++i) {
        const double a = p.theta - 0.5 * fov + step * static_cast<double>(i);
        scan.beams[static_cast<std::size_t>(i)] = cast_ray(w, {p.x, p.y}, a, max_range);
    }
    return scan;
}

} // namespace dnrl
