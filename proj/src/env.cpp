#include "matchnav/env.hpp"

namespace matchnav {

NavEnv::NavEnv(const world::World& w, Config cfg) : world_(w), cfg_(std::move(cfg)) {
    pose_ = cfg_.start;
    if (!world_.in_free_space(pose_.position()))
        throw Error("pose-out-of-bounds", "env start pose is not in free space");
}

NavEnv::Observation NavEnv::observe() const {
    Observation obs;
    obs.image = world_.render(cfg_.camera, pose_);
    obs.scan = world_.range_scan(pose_, cfg_.scan);
    return obs;
}

NavEnv::Observation NavEnv::reset(Rng& rng) {
    const double margin = cfg_.dynamics.vehicle_radius + 0.02;
    for (int attempt = 0; attempt < 128; ++attempt) {
        Pose p = cfg_.start;
        p.x += rng.uniform(-cfg_.start_jitter_xy, cfg_.start_jitter_xy);
        p.y += rng.uniform(-cfg_.start_jitter_xy, cfg_.start_jitter_xy);
        p.heading = normalize_angle(
            p.heading + rng.uniform(-cfg_.start_jitter_heading, cfg_.start_jitter_heading));
        if (world_.in_free_space(p.position()) && world_.clearance(p.position()) > margin) {
            pose_ = p;
            return observe();
        }
    }
    throw Error("pose-out-of-bounds", "could not draw a collision-free start pose");
}

NavEnv::Observation NavEnv::reset_to(const Pose& pose) {
    if (!world_.in_free_space(pose.position()))
        throw Error("pose-out-of-bounds", "reset pose is not in free space");
    pose_ = pose;
    return observe();
}

NavEnv::StepResult NavEnv::step(const world::Action& action) {
    const world::MoveOutcome mv = world_.move(pose_, action, cfg_.dynamics);
    pose_ = mv.next_pose;
    StepResult r;
    r.collided = mv.collided;
    r.obs = observe();
    return r;
}

} // namespace matchnav
