#ifndef MATCHNAV_ENV_HPP
#define MATCHNAV_ENV_HPP

#include "matchnav/common.hpp"
#include "matchnav/world.hpp"

namespace matchnav {

/// Episode-scoped view of the world for the imitator platform: holds the
/// pose, renders the imitator camera, and reports collisions. Rewards and
/// demonstrations live elsewhere; this only realizes the dynamics.
class NavEnv {
public:
    struct Config {
        world::CameraConfig camera;     // imitator camera
        world::ScanConfig scan;
        world::DynamicsConfig dynamics;
        Pose start;
        double start_jitter_xy = 0.3;      // uniform +- meters
        double start_jitter_heading = 0.15; // uniform +- radians
    };

    struct Observation {
        Image image;
        world::RangeScan scan;
    };

    NavEnv(const world::World& w, Config cfg);

    /// Jittered reset. Re-draws until the start pose is collision-free.
    Observation reset(Rng& rng);
    /// Reset to an exact pose (used by deterministic evaluations).
    Observation reset_to(const Pose& pose);

    struct StepResult {
        Observation obs;
        bool collided = false;
    };
    StepResult step(const world::Action& action);

    const Pose& pose() const { return pose_; }
    const world::World& world() const { return world_; }
    const Config& config() const { return cfg_; }

private:
    const world::World& world_;
    Config cfg_;
    Pose pose_;

    Observation observe() const;
};

} // namespace matchnav

#endif
