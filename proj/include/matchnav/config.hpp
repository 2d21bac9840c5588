#ifndef MATCHNAV_CONFIG_HPP
#define MATCHNAV_CONFIG_HPP

#include <string>
#include <vector>

#include "matchnav/autoencoder.hpp"
#include "matchnav/expert.hpp"
#include "matchnav/reward.hpp"
#include "matchnav/sac.hpp"
#include "matchnav/trainer.hpp"
#include "matchnav/vision.hpp"
#include "matchnav/world.hpp"

namespace matchnav {

/// Everything one experiment needs: the world layout, the two camera
/// profiles realizing the viewpoint mismatch, controller and training
/// settings. Parsed from a plain-text file of `directive key=value ...`
/// lines plus `wall x1 y1 x2 y2` and `waypoint x y` rows.
struct ExperimentConfig {
    world::WorldConfig world;
    world::CameraConfig demo_camera{1.2, 0.0, 1.309, 64, 64};
    world::CameraConfig robot_camera{0.25, 0.0, 1.309, 64, 64};
    world::DynamicsConfig dynamics;
    world::ScanConfig scan;
    std::vector<Pose> waypoints;
    expert::ExpertConfig expert;
    vision::VisionParams vision;
    reward::Params reward;
    repr::AeConfig ae;
    int pretrain_episodes = 40;
    int pretrain_step_cap = 80;
    rl::SacConfig sac; // state_dim filled per observation mode at run time
    rl::TrainConfig train;
    long long budget_latent = 20000;
    long long budget_scan = 12000;
    double start_jitter_xy = 0.25;
    double start_jitter_heading = 0.12;
    int eval_trials = 5;
    int eval_step_cap = 400;
    double zigzag_amplitude = 0.55;
    uint64_t seed = 1;

    /// Start pose: first waypoint, heading toward the second.
    Pose start_pose() const;
    void validate() const;
};

ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_text(const ExperimentConfig& cfg);

} // namespace matchnav

#endif
