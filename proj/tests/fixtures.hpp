// Shared test fixtures: the reference corridor world, its cameras, and a
// lazily built reference demonstration. Heavy objects are built once per
// test binary.

#ifndef MATCHNAV_TESTS_FIXTURES_HPP
#define MATCHNAV_TESTS_FIXTURES_HPP

#include "matchnav/demo_store.hpp"
#include "matchnav/expert.hpp"
#include "matchnav/presets.hpp"
#include "matchnav/world.hpp"

namespace fixtures {

inline const matchnav::ExperimentConfig& config() {
    static const matchnav::ExperimentConfig cfg = matchnav::presets::reference_corridor();
    return cfg;
}

inline const matchnav::world::World& world() {
    static const matchnav::world::World w(config().world);
    return w;
}

inline const matchnav::world::CameraConfig& demo_camera() { return config().demo_camera; }
inline const matchnav::world::CameraConfig& robot_camera() { return config().robot_camera; }
inline const matchnav::world::DynamicsConfig& dynamics() { return config().dynamics; }

inline const matchnav::expert::DemoRecording& demo_recording() {
    static const matchnav::expert::DemoRecording rec = matchnav::expert::scripted_expert(
        world(), demo_camera(), dynamics(), config().waypoints, config().expert);
    return rec;
}

inline const matchnav::demo::Demonstration& demonstration() {
    static const matchnav::demo::Demonstration d = matchnav::demo::from_frames(
        demo_recording().frames, config().vision, demo_camera());
    return d;
}

inline const matchnav::ExperimentConfig& transfer_config() {
    static const matchnav::ExperimentConfig cfg = matchnav::presets::transfer_corridor();
    return cfg;
}

inline const matchnav::world::World& transfer_world() {
    static const matchnav::world::World w(transfer_config().world);
    return w;
}

inline const matchnav::demo::Demonstration& transfer_demonstration() {
    static const matchnav::demo::Demonstration d = [] {
        const auto rec = matchnav::expert::scripted_expert(
            transfer_world(), transfer_config().demo_camera, transfer_config().dynamics,
            transfer_config().waypoints, transfer_config().expert);
        return matchnav::demo::from_frames(rec.frames, transfer_config().vision,
                                           transfer_config().demo_camera);
    }();
    return d;
}

/// Poses sampled on the corridor centerline band, facing roughly down the
/// corridor; used by the viewpoint-mismatch sweeps.
inline std::vector<matchnav::Pose> sample_corridor_poses(int count, uint64_t seed) {
    matchnav::Rng rng(seed);
    std::vector<matchnav::Pose> poses;
    while (static_cast<int>(poses.size()) < count) {
        matchnav::Pose p;
        p.x = rng.uniform(1.0, 9.5);
        p.y = rng.uniform(0.7, 1.3);
        p.heading = rng.uniform(-0.35, 0.35);
        if (world().in_free_space(p.position())) poses.push_back(p);
    }
    return poses;
}

} // namespace fixtures

#endif
