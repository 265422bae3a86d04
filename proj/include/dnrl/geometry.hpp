#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <variant>

namespace dnrl {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Wrap an angle into (-pi, pi].
inline double normalize_angle(double a) {
    double r = std::fmod(a + kPi, 2.0 * kPi);
    if (r <= 0.0) r += 2.0 * kPi;
    return r - kPi;
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

struct Circle {
    Vec2 center;
    double radius = 0.0; // > 0
};

struct AxisAlignedBox {
    double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0; // xmin < xmax, ymin < ymax
};

struct Segment {
    Vec2 a;
    Vec2 b;
};

using Shape = std::variant<Circle, AxisAlignedBox, Segment>;

/// Distance from a ray (origin, unit direction) to a shape's surface.
/// Returns the smallest t >= 0 with origin + t*dir on the surface, or nullopt.
inline std::optional<double> ray_hit(Vec2 origin, Vec2 dir, const Circle& c) {
    const Vec2 oc = c.center - origin;
    const double proj = dot(dir, oc);
    const double disc = proj * proj - (dot(oc, oc) - c.radius * c.radius);
    if (disc < 0.0) return std::nullopt;
    const double sq = std::sqrt(disc);
    const double t0 = proj - sq;
    if (t0 >= 0.0) return t0;
    const double t1 = proj + sq;
    if (t1 >= 0.0) return t1; // origin inside: first surface crossing is the exit
    return std::nullopt;
}

inline std::optional<double> ray_hit(Vec2 origin, Vec2 dir, const AxisAlignedBox& b) {
    double t0 = -std::numeric_limits<double>::infinity();
    double t1 = std::numeric_limits<double>::infinity();
    const double o[2] = {origin.x, origin.y};
    const double d[2] = {dir.x, dir.y};
    const double lo[2] = {b.xmin, b.ymin};
    const double hi[2] = {b.xmax, b.ymax};
    for (int i = 0; i < 2; ++i) {
        if (d[i] == 0.0) {
            if (o[i] < lo[i] || o[i] > hi[i]) return std::nullopt;
        } else {
            double ta = (lo[i] - o[i]) / d[i];
            double tb = (hi[i] - o[i]) / d[i];
            if (ta > tb) std::swap(ta, tb);
            t0 = std::max(t0, ta);
            t1 = std::min(t1, tb);
        }
    }
    if (t1 < t0) return std::nullopt;
    if (t0 >= 0.0) return t0;
    if (t1 >= 0.0) return t1;
    return std::nullopt;
}

inline std::optional<double> ray_hit(Vec2 origin, Vec2 dir, const Segment& s) {
    const Vec2 e = s.b - s.a;
    const double denom = cross(dir, e);
    if (std::abs(denom) < 1e-15) return std::nullopt; // parallel or degenerate
    const Vec2 ao = s.a - origin;
    const double t = cross(ao, e) / denom;
    const double u = cross(ao, dir) / denom;
    if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
    return t;
}

inline std::optional<double> ray_hit(Vec2 origin, Vec2 dir, const Shape& s) {
    return std::visit([&](const auto& g) { return ray_hit(origin, dir, g); }, s);
}

/// Distance from a point to the solid shape (0 inside a filled shape).
inline double distance(Vec2 p, const Circle& c) {
    return std::max(0.0, norm(p - c.center) - c.radius);
}

inline double distance(Vec2 p, const AxisAlignedBox& b) {
    const double dx = std::max({b.xmin - p.x, 0.0, p.x - b.xmax});
    const double dy = std::max({b.ymin - p.y, 0.0, p.y - b.ymax});
    return std::hypot(dx, dy);
}

inline double distance(Vec2 p, const Segment& s) {
    const Vec2 e = s.b - s.a;
    const double len2 = dot(e, e);
    if (len2 == 0.0) return norm(p - s.a);
    const double u = std::clamp(dot(p - s.a, e) / len2, 0.0, 1.0);
    return norm(p - (s.a + u * e));
}

inline double distance(Vec2 p, const Shape& s) {
    return std::visit([&](const auto& g) { return distance(p, g); }, s);
}

} // namespace dnrl
