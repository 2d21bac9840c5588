#include "matchnav/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <optional>

#include <json.hpp>

namespace matchnav::eval {

double hausdorff(const TrajectoryLog& a, const TrajectoryLog& b) {
    if (a.points.empty() || b.points.empty())
        throw Error("bad-config", "hausdorff needs non-empty trajectories");
    auto directed = [](const TrajectoryLog& from, const TrajectoryLog& to) {
        double worst = 0.0;
        for (const TimedPose& p : from.points) {
            double best = 1e300;
            for (const TimedPose& q : to.points) {
                const double dx = p.pose.x - q.pose.x;
                const double dy = p.pose.y - q.pose.y;
                const double d = dx * dx + dy * dy;
                if (d < best) best = d;
            }
            if (best > worst) worst = best;
        }
        return std::sqrt(worst);
    };
    return std::fmax(directed(a, b), directed(b, a));
}

void Report::finalize() {
    mean_hausdorff = 0.0;
    for (const TrialResult& t : trials) mean_hausdorff += t.hausdorff;
    if (!trials.empty()) mean_hausdorff /= static_cast<double>(trials.size());
}

std::string report_json(const Report& report) {
    nlohmann::json j;
    j["policy"] = report.policy_name;
    j["expert_anchor"] = report.expert_anchor;
    j["trials"] = report.trial_count();
    j["mean_hausdorff"] = report.mean_hausdorff;
    nlohmann::json rows = nlohmann::json::array();
    for (const TrialResult& t : report.trials) {
        nlohmann::json r;
        r["hausdorff"] = t.hausdorff;
        r["steps"] = t.steps;
        r["done_cause"] = t.done_cause;
        r["completed"] = t.completed;
        rows.push_back(r);
    }
    j["trial_results"] = rows;
    return j.dump(2);
}

void write_report_json(const Report& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error("io-error", "cannot write report " + path);
    out << report_json(report) << "\n";
}

namespace {

// Deployment-style episode: the deployed agent runs without expert access
// (the demonstration shaped training only), so the episode ends on
// physical events alone: collision, reaching the expert's goal region, or
// the step cap.
TrialResult run_trial(rl::SacAgent& agent, NavEnv& env, const reward::Tracker* /*tracker*/,
                      const repr::Autoencoder* encoder, rl::ObsMode mode, bool deterministic,
                      const RolloutConfig& cfg, Rng& reset_rng,
                      const TrajectoryLog& expert_trajectory) {
    TrialResult trial;
    NavEnv::Observation obs = env.reset(reset_rng);
    NavEnv::Observation prev = obs;
    world::Action last{};
    trial.trajectory.points.push_back({0.0, env.pose()});
    trial.done_cause = "step-cap";
    // finish line: the plane through the expert's final point, oriented by
    // the route's final direction, crossed within the completion radius
    const Pose& goal = expert_trajectory.points.back().pose;
    Vec2 goal_dir{1.0, 0.0};
    if (expert_trajectory.points.size() >= 2) {
        const Pose& before = expert_trajectory.points[expert_trajectory.points.size() - 2].pose;
        const Vec2 d{goal.x - before.x, goal.y - before.y};
        const double n = d.norm();
        if (n > 1e-9) goal_dir = d * (1.0 / n);
    }
    auto crossed_finish = [&](const Pose& p) {
        const Vec2 rel{p.x - goal.x, p.y - goal.y};
        const double along = rel.dot(goal_dir);
        const double lateral = std::fabs(rel.cross(goal_dir));
        return along >= 0.0 && lateral <= cfg.completion_radius;
    };
    bool collided = false;
    bool finished = false;

    for (int t = 0; t < cfg.step_cap; ++t) {
        const repr::PolicyState s = rl::make_policy_state(mode, encoder, prev, obs, last);
        const world::Action a = agent.sample_action(s, deterministic);
        const NavEnv::StepResult sr = env.step(a);
        const double now = (t + 1) * env.config().dynamics.dt;
        trial.trajectory.points.push_back({now, env.pose()});
        ++trial.steps;
        bool stop = false;
        if (sr.collided) {
            trial.done_cause = "collision";
            collided = true;
            stop = true;
        }
        if (!stop && crossed_finish(env.pose())) {
            trial.done_cause = "goal-reached";
            finished = true;
            stop = true;
        }
        prev = obs;
        obs = sr.obs;
        last = a;
        if (stop) break;
    }
    trial.completed = !collided && finished;
    trial.hausdorff = hausdorff(trial.trajectory, expert_trajectory);
    return trial;
}

} // namespace

Report rollout_policy(rl::SacAgent& agent, NavEnv& env, const reward::Tracker& tracker,
                      const repr::Autoencoder* encoder, rl::ObsMode mode,
                      const TrajectoryLog& expert_trajectory, const RolloutConfig& cfg,
                      const std::string& policy_name) {
    if (cfg.trials < 1) throw Error("bad-config", "need >= 1 trial");
    Report report;
    report.policy_name = policy_name;
    report.expert_anchor = "scripted-expert";
    Rng rng(hash_mix(cfg.seed, 0xe5a1));
    for (int t = 0; t < cfg.trials; ++t)
        report.trials.push_back(
            run_trial(agent, env, &tracker, encoder, mode, true, cfg, rng, expert_trajectory));
    report.finalize();
    return report;
}

Report baseline_random(NavEnv& env, const reward::Tracker& tracker, rl::ObsMode mode,
                       const repr::Autoencoder* encoder, const TrajectoryLog& expert_trajectory,
                       const RolloutConfig& cfg) {
    Report report;
    report.policy_name = "random";
    report.expert_anchor = "scripted-expert";
    Rng rng(hash_mix(cfg.seed, 0x7a2d));
    for (int t = 0; t < cfg.trials; ++t) {
        // Fresh untrained policy per trial; stochastic actions crash quickly.
        rl::SacConfig agent_cfg;
        agent_cfg.state_dim = mode == rl::ObsMode::latent
                                  ? 2 * static_cast<size_t>(encoder->latent_dim()) + 2
                                  : 2 * static_cast<size_t>(env.config().scan.beams) + 2;
        agent_cfg.hidden = 64;
        agent_cfg.hidden_layers = 2;
        agent_cfg.seed = rng.next_u64();
        rl::SacAgent fresh(agent_cfg);
        report.trials.push_back(
            run_trial(fresh, env, &tracker, encoder, mode, false, cfg, rng, expert_trajectory));
    }
    report.finalize();
    return report;
}

std::vector<Pose> zigzag_waypoints(const std::vector<Pose>& waypoints, double amplitude,
                                   double segment_length) {
    const expert::WaypointPath path(waypoints);
    std::vector<Pose> out;
    out.push_back(waypoints.front());
    const double total = path.total_length();
    int k = 0;
    for (double s = segment_length; s < total - segment_length * 0.5; s += segment_length, ++k) {
        const Vec2 p = path.point_at(s);
        const Vec2 ahead = path.point_at(std::min(total, s + 0.05));
        const Vec2 behind = path.point_at(std::fmax(0.0, s - 0.05));
        Vec2 tangent = ahead - behind;
        const double n = tangent.norm();
        if (n < 1e-12) continue;
        tangent = tangent * (1.0 / n);
        const Vec2 normal{-tangent.y, tangent.x};
        const double side = (k % 2 == 0) ? 1.0 : -1.0;
        Pose wp;
        wp.x = p.x + side * amplitude * normal.x;
        wp.y = p.y + side * amplitude * normal.y;
        out.push_back(wp);
    }
    out.push_back(waypoints.back());
    return out;
}

Report baseline_zigzag(const world::World& w, const world::DynamicsConfig& dyn,
                       const std::vector<Pose>& waypoints, double amplitude,
                       const expert::ExpertConfig& ctrl, const TrajectoryLog& expert_trajectory,
                       int trials) {
    if (trials < 1) throw Error("bad-config", "need >= 1 trial");
    Report report;
    report.policy_name = "zigzag";
    report.expert_anchor = "scripted-expert";

    const std::vector<Pose> zz = zigzag_waypoints(waypoints, amplitude);
    const expert::WaypointPath path(zz);
    const Vec2 goal = path.vertices().back();
    const double max_t = 4.0 * path.total_length() / (dyn.k_v * ctrl.cruise) + 10.0;

    // The controller is deterministic, so every trial reproduces the same
    // trajectory; trials are kept for report symmetry with the policies.
    TrialResult base;
    base.done_cause = "goal";
    Pose pose = zz.front();
    // heading toward the first zig
    const Vec2 first = path.point_at(std::min(path.total_length(), 0.5));
    pose.heading = std::atan2(first.y - pose.y, first.x - pose.x);
    double t = 0.0;
    base.trajectory.points.push_back({t, pose});
    while (true) {
        const bool near_goal = (pose.position() - goal).norm() < ctrl.goal_tolerance;
        const bool past_end = path.project(pose.position()) > path.total_length() - ctrl.goal_tolerance;
        if (near_goal && past_end) break;
        if (t > max_t) {
            base.done_cause = "timeout";
            break;
        }
        const world::Action a = expert::pure_pursuit_action(path, pose, ctrl, dyn);
        const world::MoveOutcome mv = w.move(pose, a, dyn);
        pose = mv.next_pose;
        t += dyn.dt;
        ++base.steps;
        base.trajectory.points.push_back({t, pose});
        if (mv.collided) {
            base.done_cause = "collision";
            break;
        }
    }
    base.completed = base.done_cause == "goal";
    base.hausdorff = hausdorff(base.trajectory, expert_trajectory);
    for (int i = 0; i < trials; ++i) report.trials.push_back(base);
    report.finalize();
    return report;
}

} // namespace matchnav::eval
