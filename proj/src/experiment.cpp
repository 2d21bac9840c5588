#include "matchnav/experiment.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

namespace fs = std::filesystem;

namespace matchnav {

namespace {

template <typename Fn>
auto stage(const std::string& name, bool quiet, Fn&& fn) {
    if (!quiet) std::cout << "[stage] " << name << "\n" << std::flush;
    try {
        return fn();
    } catch (const Error& e) {
        throw Error("stage-" + name, e.what());
    } catch (const std::exception& e) {
        throw Error("stage-" + name, e.what());
    }
}

void write_trial_trajectories(const eval::Report& report, const fs::path& dir) {
    fs::create_directories(dir);
    for (size_t i = 0; i < report.trials.size(); ++i) {
        char name[64];
        std::snprintf(name, sizeof(name), "%s_trial_%02zu.csv", report.policy_name.c_str(), i);
        write_trajectory_csv(report.trials[i].trajectory, (dir / name).string());
    }
}

} // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opts) {
    cfg.validate();
    const uint64_t seed = opts.seed_override.value_or(cfg.seed);
    if (opts.dry_run) {
        ExperimentResult r;
        if (!opts.quiet) std::cout << "config ok (dry run)\n";
        return r;
    }

    const fs::path out(opts.out_dir);
    fs::create_directories(out);
    {
        std::ofstream echo(out / "config.cfg");
        echo << config_to_text(cfg);
    }

    // world
    const world::World w = stage("world-build", opts.quiet,
                                 [&] { return world::World(cfg.world); });

    // demonstration (video-only, elevated camera)
    const expert::DemoRecording recording = stage("demo-record", opts.quiet, [&] {
        return expert::scripted_expert(w, cfg.demo_camera, cfg.dynamics, cfg.waypoints, cfg.expert);
    });
    const std::string manifest = stage("demo-write", opts.quiet, [&] {
        return demo::write_demo_dir(recording, (out / "demo").string());
    });
    const demo::Demonstration demonstration = stage("demo-ingest", opts.quiet, [&] {
        return demo::ingest(manifest, cfg.vision, cfg.demo_camera);
    });
    const reward::Tracker tracker(demonstration, cfg.reward);

    NavEnv::Config env_cfg;
    env_cfg.camera = cfg.robot_camera;
    env_cfg.scan = cfg.scan;
    env_cfg.dynamics = cfg.dynamics;
    env_cfg.start = cfg.start_pose();
    env_cfg.start_jitter_xy = cfg.start_jitter_xy;
    env_cfg.start_jitter_heading = cfg.start_jitter_heading;
    NavEnv env(w, env_cfg);

    ExperimentResult result;
    eval::RolloutConfig rollout_cfg;
    rollout_cfg.trials = cfg.eval_trials;
    rollout_cfg.step_cap = cfg.eval_step_cap;
    rollout_cfg.seed = hash_mix(seed, 0xe0);

    std::optional<repr::Autoencoder> encoder;
    if (opts.run_latent) {
        // representation pretraining on random rollouts
        const std::vector<Image> dataset = stage("pretrain-collect", opts.quiet, [&] {
            return repr::collect_pretrain_set(env, cfg.pretrain_episodes, cfg.pretrain_step_cap,
                                              hash_mix(seed, 0xc0));
        });
        repr::AeConfig ae_cfg = cfg.ae;
        ae_cfg.seed = hash_mix(seed, 0xae);
        repr::TrainCurve curve;
        encoder = stage("pretrain-train", opts.quiet,
                        [&] { return repr::train_autoencoder(dataset, ae_cfg, &curve); });
        encoder->save((out / "ae.ckpt").string());
        repr::write_train_curve_csv(curve, (out / "ae_curve.csv").string());

        // latent-input policy
        rl::SacConfig sac_cfg = cfg.sac;
        sac_cfg.state_dim = 2 * static_cast<size_t>(cfg.ae.latent) + 2;
        sac_cfg.seed = hash_mix(seed, 0x1a);
        rl::SacAgent agent(sac_cfg);
        rl::TrainConfig tcfg = cfg.train;
        tcfg.budget = cfg.budget_latent;
        tcfg.mode = rl::ObsMode::latent;
        tcfg.seed = hash_mix(seed, 0x1b);
        std::ofstream log(out / "train_latent.jsonl");
        stage("train-latent", opts.quiet, [&] {
            return rl::train(agent, env, tracker, &*encoder, tcfg, [&](const rl::EpisodeRow& row) {
                log << rl::episode_json_line(row) << "\n";
            });
        });
        agent.save((out / "agent_latent.ckpt").string());

        result.latent = stage("eval-latent", opts.quiet, [&] {
            return eval::rollout_policy(agent, env, tracker, &*encoder, rl::ObsMode::latent,
                                        recording.trajectory, rollout_cfg, "latent");
        });
    }

    if (opts.run_scan) {
        rl::SacConfig sac_cfg = cfg.sac;
        sac_cfg.state_dim = 2 * static_cast<size_t>(cfg.scan.beams) + 2;
        sac_cfg.seed = hash_mix(seed, 0x2a);
        rl::SacAgent agent(sac_cfg);
        rl::TrainConfig tcfg = cfg.train;
        tcfg.budget = cfg.budget_scan;
        tcfg.mode = rl::ObsMode::scan;
        tcfg.seed = hash_mix(seed, 0x2b);
        std::ofstream log(out / "train_scan.jsonl");
        stage("train-scan", opts.quiet, [&] {
            return rl::train(agent, env, tracker, nullptr, tcfg, [&](const rl::EpisodeRow& row) {
                log << rl::episode_json_line(row) << "\n";
            });
        });
        agent.save((out / "agent_scan.ckpt").string());

        result.scan = stage("eval-scan", opts.quiet, [&] {
            return eval::rollout_policy(agent, env, tracker, nullptr, rl::ObsMode::scan,
                                        recording.trajectory, rollout_cfg, "scan");
        });
    }

    result.zigzag = stage("eval-zigzag", opts.quiet, [&] {
        return eval::baseline_zigzag(w, cfg.dynamics, cfg.waypoints, cfg.zigzag_amplitude,
                                     cfg.expert, recording.trajectory, cfg.eval_trials);
    });
    result.random = stage("eval-random", opts.quiet, [&] {
        eval::RolloutConfig rc = rollout_cfg;
        rc.seed = hash_mix(seed, 0xf0);
        return eval::baseline_random(env, tracker, rl::ObsMode::scan, nullptr,
                                     recording.trajectory, rc);
    });

    // report
    stage("report", opts.quiet, [&] {
        const fs::path eval_dir = out / "eval";
        fs::create_directories(eval_dir);
        if (result.latent) {
            eval::write_report_json(*result.latent, (eval_dir / "latent.json").string());
            write_trial_trajectories(*result.latent, eval_dir);
        }
        if (result.scan) {
            eval::write_report_json(*result.scan, (eval_dir / "scan.json").string());
            write_trial_trajectories(*result.scan, eval_dir);
        }
        eval::write_report_json(result.zigzag, (eval_dir / "zigzag.json").string());
        write_trial_trajectories(result.zigzag, eval_dir);
        eval::write_report_json(result.random, (eval_dir / "random.json").string());
        write_trial_trajectories(result.random, eval_dir);
        write_trajectory_csv(recording.trajectory, (eval_dir / "expert.csv").string());

        nlohmann::json j;
        j["seed"] = seed;
        if (result.latent) j["latent_mean"] = result.latent->mean_hausdorff;
        if (result.scan) j["scan_mean"] = result.scan->mean_hausdorff;
        j["zigzag_mean"] = result.zigzag.mean_hausdorff;
        j["random_mean"] = result.random.mean_hausdorff;
        if (result.latent && result.scan) {
            result.ordering_ok = result.scan->mean_hausdorff <= result.latent->mean_hausdorff &&
                                 result.latent->mean_hausdorff < result.zigzag.mean_hausdorff &&
                                 result.zigzag.mean_hausdorff < result.random.mean_hausdorff;
            result.margin_ok =
                result.latent->mean_hausdorff < 0.5 * result.random.mean_hausdorff;
            j["ordering_ok"] = result.ordering_ok;
            j["margin_ok"] = result.margin_ok;
        }
        result.report_path = (out / "report.json").string();
        std::ofstream rp(result.report_path);
        rp << j.dump(2) << "\n";
        return 0;
    });

    if (!opts.quiet) {
        std::cout << "results:";
        if (result.scan) std::cout << " scan=" << result.scan->mean_hausdorff;
        if (result.latent) std::cout << " latent=" << result.latent->mean_hausdorff;
        std::cout << " zigzag=" << result.zigzag.mean_hausdorff
                  << " random=" << result.random.mean_hausdorff << "\n";
    }
    return result;
}

} // namespace matchnav
