#include "matchnav/presets.hpp"

namespace matchnav::presets {

ExperimentConfig reference_corridor() {
    ExperimentConfig cfg;
    cfg.world = world::straight_corridor_plan(12.0, 2.0);
    cfg.world.texture_seed = 7;
    cfg.world.poster_density = 9;
    cfg.world.texture_amplitude = 0.2;

    cfg.demo_camera = {1.2, -0.08, 1.5, 64, 64};
    cfg.robot_camera = {0.25, 0.26, 1.5, 64, 64};

    cfg.waypoints = {{1.2, 1.0, 0.0}, {10.8, 1.0, 0.0}};
    cfg.expert.lookahead = 1.0;
    cfg.expert.cruise = 0.6;
    cfg.expert.frame_period = 1.0;

    cfg.vision.max_keypoints = 120;
    cfg.vision.demo_max_keypoints = 64;
    cfg.vision.ratio_threshold = 0.8;
    cfg.vision.nms_radius = 1;

    cfg.reward.gamma = 0.98;
    cfg.reward.lambda = 0.01;
    cfg.reward.min_matches = 10;
    cfg.reward.done_on_demo_end = true;

    cfg.ae.latent = 32;
    cfg.ae.hidden = 256;
    cfg.ae.embed = 16;
    cfg.ae.patch = 8;
    cfg.ae.epochs = 25;
    cfg.ae.batch = 64;
    cfg.pretrain_episodes = 40;
    cfg.pretrain_step_cap = 80;

    cfg.sac.hidden = 256;
    cfg.sac.hidden_layers = 3;
    cfg.sac.gamma = cfg.reward.gamma; // one shared discount
    cfg.sac.batch = 64;
    cfg.sac.buffer_capacity = 60000;
    cfg.sac.lr = 3e-4;
    cfg.sac.tau = 0.005;
    cfg.sac.target_entropy = -2.0;

    cfg.budget_latent = 16000;
    cfg.budget_scan = 9000;
    cfg.train.step_cap = 300;
    cfg.train.warmup = 800;
    cfg.train.update_every = 2;
    cfg.train.eval_every = 0;

    cfg.start_jitter_xy = 0.25;
    cfg.start_jitter_heading = 0.12;
    cfg.eval_trials = 5;
    cfg.eval_step_cap = 600;
    cfg.zigzag_amplitude = 0.8;
    cfg.seed = 1;
    return cfg;
}

ExperimentConfig transfer_corridor() {
    ExperimentConfig cfg = reference_corridor();
    cfg.world = world::straight_corridor_plan(16.0, 2.4);
    cfg.world.texture_seed = 7; // same texture family, different layout
    cfg.world.poster_density = 3;
    cfg.world.texture_amplitude = 0.35;
    cfg.waypoints = {{1.2, 1.2, 0.0}, {14.8, 1.2, 0.0}};
    return cfg;
}

ExperimentConfig by_name(const std::string& name) {
    if (name == "corridor") return reference_corridor();
    if (name == "transfer") return transfer_corridor();
    throw Error("bad-config", "unknown preset '" + name + "' (want corridor|transfer)");
}

} // namespace matchnav::presets
