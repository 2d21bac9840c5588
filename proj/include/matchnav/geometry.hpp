#ifndef MATCHNAV_GEOMETRY_HPP
#define MATCHNAV_GEOMETRY_HPP

#include <cmath>
#include <optional>
#include <vector>

namespace matchnav {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
    double norm_sq() const { return x * x + y * y; }
};

/// Normalize an angle into (-pi, pi].
inline double normalize_angle(double a) {
    const double two_pi = 6.283185307179586476925286766559;
    a = std::fmod(a, two_pi);
    if (a <= -3.1415926535897932384626433832795) a += two_pi;
    if (a > 3.1415926535897932384626433832795) a -= two_pi;
    return a;
}

/// Planar vehicle/camera pose. heading is kept in (-pi, pi].
struct Pose {
    double x = 0.0;
    double y = 0.0;
    double heading = 0.0;

    Vec2 position() const { return {x, y}; }
};

struct Segment {
    Vec2 a;
    Vec2 b;

    Vec2 direction() const { return b - a; }
    double length() const { return (b - a).norm(); }
};

struct RayHit {
    double distance = 0.0;  // Euclidean distance along the ray
    double along = 0.0;     // meters from segment endpoint a to the hit point
    int segment_index = -1;
    Vec2 point;
};

/// Nearest intersection of the ray (origin, angle) with one segment.
/// Grazing rays parallel to the segment do not count as hits.
inline std::optional<RayHit> ray_segment(const Vec2& origin, const Vec2& dir, const Segment& seg,
                                         double t_min = 1e-9) {
    const Vec2 d = seg.direction();
    const double denom = dir.cross(d);
    if (std::fabs(denom) < 1e-15) return std::nullopt;
    const Vec2 ao = seg.a - origin;
    const double t = ao.cross(d) / denom;
    const double s = ao.cross(dir) / denom;
    if (t < t_min || s < 0.0 || s > 1.0) return std::nullopt;
    RayHit hit;
    hit.distance = t;
    hit.along = s * d.norm();
    hit.point = origin + dir * t;
    return hit;
}

inline double point_segment_distance(const Vec2& p, const Segment& seg) {
    const Vec2 d = seg.direction();
    const double len_sq = d.norm_sq();
    if (len_sq < 1e-30) return (p - seg.a).norm();
    double t = (p - seg.a).dot(d) / len_sq;
    t = std::fmax(0.0, std::fmin(1.0, t));
    return (p - (seg.a + d * t)).norm();
}

/// Proper/improper intersection test between two segments (used by the
/// swept collision check to catch wall crossings between samples).
inline bool segments_intersect(const Vec2& p1, const Vec2& p2, const Segment& seg) {
    const Vec2 r = p2 - p1;
    const Vec2 s = seg.direction();
    const double denom = r.cross(s);
    const Vec2 qp = seg.a - p1;
    if (std::fabs(denom) < 1e-15) {
        // parallel; collinear overlap is handled by the distance checks
        return false;
    }
    const double t = qp.cross(s) / denom;
    const double u = qp.cross(r) / denom;
    return t >= 0.0 && t <= 1.0 && u >= 0.0 && u <= 1.0;
}

/// Even-odd rule over all wall segments. For closed floor plans (every
/// endpoint shared by exactly two segments) odd parity means free space,
/// including ring-shaped plans where an inner loop encloses solid space.
inline bool point_in_free_space(const std::vector<Segment>& walls, const Vec2& p) {
    int crossings = 0;
    for (const Segment& w : walls) {
        const bool above_a = w.a.y > p.y;
        const bool above_b = w.b.y > p.y;
        if (above_a == above_b) continue;
        const double x_int = w.a.x + (p.y - w.a.y) * (w.b.x - w.a.x) / (w.b.y - w.a.y);
        if (x_int > p.x) ++crossings;
    }
    return (crossings % 2) == 1;
}

inline double min_wall_distance(const std::vector<Segment>& walls, const Vec2& p) {
    double best = 1e30;
    for (const Segment& w : walls) best = std::fmin(best, point_segment_distance(p, w));
    return best;
}

} // namespace matchnav

#endif
