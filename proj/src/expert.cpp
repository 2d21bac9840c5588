#include "matchnav/expert.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "matchnav/common.hpp"

namespace matchnav {

void write_trajectory_csv(const TrajectoryLog& log, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot open " + path + " for writing");
    out << "t,x,y,heading\n";
    out.precision(12);
    for (const TimedPose& p : log.points)
        out << p.t << "," << p.pose.x << "," << p.pose.y << "," << p.pose.heading << "\n";
}

TrajectoryLog read_trajectory_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io-error", "cannot open " + path);
    TrajectoryLog log;
    std::string line;
    std::getline(in, line); // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        TimedPose p;
        char comma;
        ss >> p.t >> comma >> p.pose.x >> comma >> p.pose.y >> comma >> p.pose.heading;
        if (ss.fail()) throw Error("io-error", "bad trajectory row in " + path + ": " + line);
        log.points.push_back(p);
    }
    return log;
}

namespace expert {

WaypointPath::WaypointPath(const std::vector<Pose>& waypoints) {
    if (waypoints.size() < 2) throw Error("bad-config", "path needs >= 2 waypoints");
    for (const Pose& p : waypoints) pts_.push_back(p.position());
    cumulative_.push_back(0.0);
    for (size_t i = 1; i < pts_.size(); ++i) {
        const double seg = (pts_[i] - pts_[i - 1]).norm();
        if (seg < 1e-9) throw Error("bad-config", "duplicate consecutive waypoints");
        cumulative_.push_back(cumulative_.back() + seg);
    }
}

double WaypointPath::project(const Vec2& p) const {
    double best_d = 1e30;
    double best_s = 0.0;
    for (size_t i = 0; i + 1 < pts_.size(); ++i) {
        const Vec2 d = pts_[i + 1] - pts_[i];
        const double len_sq = d.norm_sq();
        double t = (p - pts_[i]).dot(d) / len_sq;
        t = std::fmax(0.0, std::fmin(1.0, t));
        const Vec2 q = pts_[i] + d * t;
        const double dist = (p - q).norm();
        if (dist < best_d) {
            best_d = dist;
            best_s = cumulative_[i] + t * std::sqrt(len_sq);
        }
    }
    return best_s;
}

Vec2 WaypointPath::point_at(double s) const {
    if (s <= 0.0) return pts_.front();
    if (s >= cumulative_.back()) return pts_.back();
    size_t i = 1;
    while (cumulative_[i] < s) ++i;
    const double seg = cumulative_[i] - cumulative_[i - 1];
    const double t = (s - cumulative_[i - 1]) / seg;
    return pts_[i - 1] + (pts_[i] - pts_[i - 1]) * t;
}

world::Action pure_pursuit_action(const WaypointPath& path, const Pose& pose,
                                  const ExpertConfig& cfg, const world::DynamicsConfig& dyn) {
    const double s = path.project(pose.position());
    const Vec2 target = path.point_at(s + cfg.lookahead);
    const double bearing = std::atan2(target.y - pose.y, target.x - pose.x);
    const double err = normalize_angle(bearing - pose.heading);

    world::Action a;
    a.throttle = cfg.cruise * std::fmax(0.25, std::cos(err));
    const double v = dyn.k_v * a.throttle;
    const double omega = 2.0 * v * std::sin(err) / cfg.lookahead; // pure pursuit curvature
    a.steer_delta = omega / dyn.k_s;
    return a.clamped();
}

DemoRecording scripted_expert(const world::World& w, const world::CameraConfig& demo_camera,
                              const world::DynamicsConfig& dyn,
                              const std::vector<Pose>& waypoints, const ExpertConfig& cfg) {
    const WaypointPath path(waypoints);
    for (const Pose& wp : waypoints)
        if (!w.in_free_space(wp.position()))
            throw Error("expert-demo-failed", "waypoint outside free space");

    const double max_t = cfg.max_duration > 0.0
                             ? cfg.max_duration
                             : 3.0 * path.total_length() / (dyn.k_v * cfg.cruise) + 10.0;

    DemoRecording rec;
    rec.camera = demo_camera;
    rec.frame_period = cfg.frame_period;

    Pose pose = waypoints.front();
    double t = 0.0;
    double since_frame = cfg.frame_period; // record the first frame at t = 0
    const Vec2 goal = path.vertices().back();

    while (true) {
        if (since_frame >= cfg.frame_period - 1e-9) {
            rec.frames.push_back(w.render(demo_camera, pose));
            since_frame -= cfg.frame_period; // carry the remainder: the mean
                                             // period stays exact even when
                                             // dt does not divide it
        }
        rec.trajectory.points.push_back({t, pose});

        const bool near_goal = (pose.position() - goal).norm() < cfg.goal_tolerance;
        const bool past_end = path.project(pose.position()) > path.total_length() - cfg.goal_tolerance;
        if (near_goal && past_end) break;
        if (t > max_t)
            throw Error("expert-demo-failed", "expert did not reach the goal in time");

        const world::Action a = pure_pursuit_action(path, pose, cfg, dyn);
        const world::MoveOutcome mv = w.move(pose, a, dyn);
        if (mv.collided) throw Error("expert-demo-failed", "expert collided while recording");
        pose = mv.next_pose;
        t += dyn.dt;
        since_frame += dyn.dt;
    }
    if (rec.frames.size() < 2)
        throw Error("expert-demo-failed", "demonstration shorter than two frames");
    return rec;
}

} // namespace expert
} // namespace matchnav
