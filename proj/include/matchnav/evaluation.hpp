#ifndef MATCHNAV_EVALUATION_HPP
#define MATCHNAV_EVALUATION_HPP

#include <string>
#include <vector>

#include "matchnav/expert.hpp"
#include "matchnav/reward.hpp"
#include "matchnav/trainer.hpp"

namespace matchnav::eval {

/// Symmetric Hausdorff distance between the (x, y) point sets of two
/// trajectories: max over both of the distance from each point to the
/// nearest point of the other.
double hausdorff(const TrajectoryLog& a, const TrajectoryLog& b);

struct TrialResult {
    double hausdorff = 0.0;
    int steps = 0;
    std::string done_cause;
    bool completed = false; // no collision and did not starve of matches
    TrajectoryLog trajectory;
};

struct Report {
    std::string policy_name;
    std::string expert_anchor; // which expert trajectory distances refer to
    std::vector<TrialResult> trials;
    double mean_hausdorff = 0.0;

    int trial_count() const { return static_cast<int>(trials.size()); }
    void finalize();
};

std::string report_json(const Report& report);
void write_report_json(const Report& report, const std::string& path);

struct RolloutConfig {
    int trials = 5;
    int step_cap = 400;
    uint64_t seed = 0;
    // half-width of the finish line through the expert's final point; a
    // trial completes by crossing it without having collided
    double completion_radius = 1.5;
};

/// Deterministic-action rollouts from jittered starts. The tracker is
/// consulted only for termination bookkeeping; the action path sees nothing
/// but (latents or scans) and the last action.
Report rollout_policy(rl::SacAgent& agent, NavEnv& env, const reward::Tracker& tracker,
                      const repr::Autoencoder* encoder, rl::ObsMode mode,
                      const TrajectoryLog& expert_trajectory, const RolloutConfig& cfg,
                      const std::string& policy_name = "policy");

/// Rollouts of a freshly initialized agent (stochastic actions): the
/// fails-quickly context anchor for the metric.
Report baseline_random(NavEnv& env, const reward::Tracker& tracker, rl::ObsMode mode,
                       const repr::Autoencoder* encoder, const TrajectoryLog& expert_trajectory,
                       const RolloutConfig& cfg);

/// Scripted controller oscillating +-amplitude about the waypoint
/// centerline. amplitude 0 reduces to the expert path.
Report baseline_zigzag(const world::World& w, const world::DynamicsConfig& dyn,
                       const std::vector<Pose>& waypoints, double amplitude,
                       const expert::ExpertConfig& ctrl, const TrajectoryLog& expert_trajectory,
                       int trials);

/// Zig-zag waypoint construction, exposed for tests.
std::vector<Pose> zigzag_waypoints(const std::vector<Pose>& waypoints, double amplitude,
                                   double segment_length = 1.5);

} // namespace matchnav::eval

#endif
