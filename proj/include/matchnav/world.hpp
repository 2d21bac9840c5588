#ifndef MATCHNAV_WORLD_HPP
#define MATCHNAV_WORLD_HPP

#include <cstdint>
#include <vector>

#include "matchnav/geometry.hpp"
#include "matchnav/image.hpp"

namespace matchnav::world {

/// Egocentric pinhole camera, column-raycast projection. The height field is
/// what realizes viewpoint mismatch between the demonstration platform and
/// the deployment platform.
struct CameraConfig {
    double height = 1.2;     // meters above the floor
    double pitch = 0.0;      // radians, positive looks up
    double hfov = 1.309;     // radians, ~75 degrees
    int image_width = 64;
    int image_height = 64;

    void validate() const;
};

struct DynamicsConfig {
    double k_s = 1.5;           // max turn rate, rad/s at steer_delta = 1
    double k_v = 1.0;           // max speed, m/s at throttle = 1
    double dt = 0.1;            // integration step, seconds
    double vehicle_radius = 0.15;
};

/// Agent command. Components are clamped into range before integration.
struct Action {
    double steer_delta = 0.0; // [-1, 1]
    double throttle = 0.0;    // [0, 1]

    Action clamped() const {
        Action a = *this;
        if (a.steer_delta < -1.0) a.steer_delta = -1.0;
        if (a.steer_delta > 1.0) a.steer_delta = 1.0;
        if (a.throttle < 0.0) a.throttle = 0.0;
        if (a.throttle > 1.0) a.throttle = 1.0;
        return a;
    }
};

struct RangeScan {
    std::vector<double> ranges; // meters, one per beam
    double max_range = 8.0;
};

struct ScanConfig {
    int beams = 16;
    double span = 4.712;    // radians, centered on the heading
    double max_range = 8.0;
};

struct WorldConfig {
    std::vector<Segment> floor_plan; // must form closed loops
    uint64_t texture_seed = 7;
    int poster_density = 3;          // high-contrast decals per wall run
    double corridor_width = 2.0;     // metadata used by plan builders
    double wall_height = 2.5;
    double texture_amplitude = 0.2;  // 0 disables all wall texture
};

struct StepOutcome {
    Pose next_pose;
    Image observation;
    RangeScan range_scan;
    bool collided = false;
};

/// Result of the kinematic part of a step, before any rendering.
struct MoveOutcome {
    Pose next_pose;
    bool collided = false;
};

/// Rectangular decal placed on a wall, in wall-local (u, z) meters.
struct Poster {
    double u0 = 0.0, z0 = 0.0;
    double width = 0.0, height = 0.0;
    int style = 0;
    double border_value = 0.95; // frame brightness, varied per decal
    double tone_a = 0.9;        // pattern foreground
    double tone_b = 0.1;        // pattern background
    double cells = 3.0;         // pattern repetition count
};

/// Immutable 2.5D corridor world. All queries are pure functions of the
/// constructor arguments, so renders and scans are reentrant.
class World {
public:
    explicit World(WorldConfig cfg);

    const WorldConfig& config() const { return cfg_; }

    bool in_free_space(const Vec2& p) const;
    double clearance(const Vec2& p) const { return min_wall_distance(cfg_.floor_plan, p); }

    /// Nearest wall along (origin, angle). Misses only in malformed plans.
    std::optional<RayHit> cast_ray(const Vec2& origin, double angle) const;

    /// Column raycast render. Throws "pose-out-of-bounds" if the pose is not
    /// in free space.
    Image render(const CameraConfig& camera, const Pose& pose) const;

    /// Exact ray-segment ranges clamped to max_range. beams >= 2.
    RangeScan range_scan(const Pose& pose, int beams, double span, double max_range) const;
    RangeScan range_scan(const Pose& pose, const ScanConfig& sc) const {
        return range_scan(pose, sc.beams, sc.span, sc.max_range);
    }

    /// Unicycle integration with a swept-circle collision check. A collision
    /// freezes the pose at the last collision-free point of the sweep.
    MoveOutcome move(const Pose& pose, const Action& action, const DynamicsConfig& dyn) const;

    /// move + render + scan in one call.
    StepOutcome step(const Pose& pose, const Action& action, const DynamicsConfig& dyn,
                     const CameraConfig& camera, const ScanConfig& scan) const;

    /// Wall shade at wall-local coordinates, in [0, 1]. Exposed for texture
    /// diagnostics and tests.
    double wall_shade(int wall_index, double u, double z) const;

    const std::vector<std::vector<Poster>>& posters() const { return posters_; }

private:
    WorldConfig cfg_;
    std::vector<std::vector<Poster>> posters_; // per wall segment
};

/// Axis-aligned rectangle corridor: outline (0,0)-(length,width).
WorldConfig straight_corridor_plan(double length, double width);

/// Rectangular ring corridor: outer box minus inner box, both centered at
/// (outer_w/2, outer_h/2); corridor width = (outer - inner)/2 per side.
WorldConfig ring_corridor_plan(double outer_w, double outer_h, double corridor_width);

} // namespace matchnav::world

#endif
