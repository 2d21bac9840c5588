#ifndef MATCHNAV_EXPERT_HPP
#define MATCHNAV_EXPERT_HPP

#include <string>
#include <vector>

#include "matchnav/world.hpp"

namespace matchnav {

struct TimedPose {
    double t = 0.0;
    Pose pose;
};

/// Ground-truth (x, y) track of one episode; timestamps strictly increase.
struct TrajectoryLog {
    std::vector<TimedPose> points;

    size_t size() const { return points.size(); }
};

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path);
TrajectoryLog read_trajectory_csv(const std::string& path);

namespace expert {

struct ExpertConfig {
    double lookahead = 1.0;      // pure pursuit lookahead, meters
    double cruise = 0.6;         // cruise throttle
    double frame_period = 0.4;   // seconds between recorded frames
    double goal_tolerance = 0.3; // meters to the final waypoint
    double max_duration = 0.0;   // seconds; 0 derives a bound from path length
};

/// Video-only demonstration: frames and the camera that shot them. No
/// actions are recorded. The pose trajectory is kept for evaluation only.
struct DemoRecording {
    std::vector<Image> frames;
    world::CameraConfig camera;
    double frame_period = 0.0;
    TrajectoryLog trajectory;
};

/// Polyline path with arclength lookup, shared by the scripted expert and
/// the zig-zag baseline controller.
class WaypointPath {
public:
    explicit WaypointPath(const std::vector<Pose>& waypoints);

    double total_length() const { return cumulative_.back(); }
    /// Arclength of the closest path point to p.
    double project(const Vec2& p) const;
    /// Point at arclength s (clamped to the path).
    Vec2 point_at(double s) const;
    const std::vector<Vec2>& vertices() const { return pts_; }

private:
    std::vector<Vec2> pts_;
    std::vector<double> cumulative_;
};

/// One pure pursuit control decision toward the path.
world::Action pure_pursuit_action(const WaypointPath& path, const Pose& pose,
                                  const ExpertConfig& cfg, const world::DynamicsConfig& dyn);

/// Drives pure pursuit over the waypoints with the demo camera, recording
/// one frame per frame_period. Throws "expert-demo-failed" if the expert
/// collides or fails to reach the goal: demonstrations must be clean.
DemoRecording scripted_expert(const world::World& w, const world::CameraConfig& demo_camera,
                              const world::DynamicsConfig& dyn,
                              const std::vector<Pose>& waypoints, const ExpertConfig& cfg);

} // namespace expert
} // namespace matchnav

#endif
