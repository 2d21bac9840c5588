// Command-line front end: record demos, pretrain the encoder, train and
// evaluate policies, or run the whole experiment from one config.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "matchnav/demo_store.hpp"
#include "matchnav/experiment.hpp"

namespace fs = std::filesystem;
using namespace matchnav;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset = "corridor";
    std::string out_dir = "out";
    uint64_t seed = 0;
    bool seed_set = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "config file (overrides --preset)");
    cmd->add_option("--preset", args.preset, "built-in config: corridor|transfer");
    cmd->add_option("--out", args.out_dir, "output directory");
    auto* seed_opt = cmd->add_option("--seed", args.seed, "seed override");
    cmd->callback([seed_opt, &args] { args.seed_set = seed_opt->count() > 0; });
}

ExperimentConfig resolve_config(const CommonArgs& args) {
    ExperimentConfig cfg = args.config_path.empty() ? presets::by_name(args.preset)
                                                    : load_config(args.config_path);
    if (args.seed_set) cfg.seed = args.seed;
    return cfg;
}

int run_demo_record(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const world::World w(cfg.world);
    const expert::DemoRecording rec =
        expert::scripted_expert(w, cfg.demo_camera, cfg.dynamics, cfg.waypoints, cfg.expert);
    const std::string manifest = demo::write_demo_dir(rec, args.out_dir);
    demo::ingest(manifest, cfg.vision, cfg.demo_camera); // writes feature sidecars
    std::cout << "recorded " << rec.frames.size() << " frames -> " << manifest << "\n";
    return 0;
}

int run_pretrain(const CommonArgs& args) {
    const ExperimentConfig cfg = resolve_config(args);
    const world::World w(cfg.world);
    NavEnv::Config env_cfg{cfg.robot_camera, cfg.scan,  cfg.dynamics,
                           cfg.start_pose(), cfg.start_jitter_xy, cfg.start_jitter_heading};
    NavEnv env(w, env_cfg);
    const std::vector<Image> dataset =
        repr::collect_pretrain_set(env, cfg.pretrain_episodes, cfg.pretrain_step_cap,
                                   hash_mix(cfg.seed, 0xc0));
    repr::AeConfig ae_cfg = cfg.ae;
    ae_cfg.seed = hash_mix(cfg.seed, 0xae);
    repr::TrainCurve curve;
    const repr::Autoencoder ae = repr::train_autoencoder(dataset, ae_cfg, &curve);
    fs::create_directories(args.out_dir);
    ae.save((fs::path(args.out_dir) / "ae.ckpt").string());
    repr::write_train_curve_csv(curve, (fs::path(args.out_dir) / "ae_curve.csv").string());
    std::cout << "pretrained on " << dataset.size() << " frames; final loss "
              << curve.rows.back().loss << "\n";
    return 0;
}

int run_train(const CommonArgs& args, const std::string& obs, const std::string& encoder_path) {
    ExperimentConfig cfg = resolve_config(args);
    ExperimentOptions opts;
    opts.out_dir = args.out_dir;
    const rl::ObsMode mode = rl::obs_mode_from_string(obs);
    opts.run_latent = mode == rl::ObsMode::latent;
    opts.run_scan = mode == rl::ObsMode::scan;
    (void)encoder_path; // the pipeline pretrains in-run; kept for interface parity
    run_experiment(cfg, opts);
    return 0;
}

int run_eval(const CommonArgs& args, const std::string& agent_path, const std::string& obs,
             const std::string& encoder_path, int trials) {
    const ExperimentConfig cfg = resolve_config(args);
    const rl::ObsMode mode = rl::obs_mode_from_string(obs);
    const world::World w(cfg.world);
    const expert::DemoRecording rec =
        expert::scripted_expert(w, cfg.demo_camera, cfg.dynamics, cfg.waypoints, cfg.expert);
    const demo::Demonstration demonstration =
        demo::from_frames(rec.frames, cfg.vision, cfg.demo_camera);
    const reward::Tracker tracker(demonstration, cfg.reward);

    NavEnv::Config env_cfg{cfg.robot_camera, cfg.scan,  cfg.dynamics,
                           cfg.start_pose(), cfg.start_jitter_xy, cfg.start_jitter_heading};
    NavEnv env(w, env_cfg);

    std::optional<repr::Autoencoder> encoder;
    if (mode == rl::ObsMode::latent) {
        if (encoder_path.empty())
            throw Error("bad-config", "latent evaluation needs --encoder");
        encoder = repr::Autoencoder::load(encoder_path);
    }
    rl::SacAgent agent = rl::SacAgent::load(agent_path);
    eval::RolloutConfig rc;
    rc.trials = trials > 0 ? trials : cfg.eval_trials;
    rc.step_cap = cfg.eval_step_cap;
    rc.seed = hash_mix(cfg.seed, 0xe0);
    const eval::Report report =
        eval::rollout_policy(agent, env, tracker, encoder ? &*encoder : nullptr, mode,
                             rec.trajectory, rc, "policy");
    fs::create_directories(args.out_dir);
    eval::write_report_json(report, (fs::path(args.out_dir) / "eval.json").string());
    std::cout << "mean hausdorff over " << report.trial_count() << " trials: "
              << report.mean_hausdorff << "\n";
    return 0;
}

int run_full_experiment(const CommonArgs& args, bool dry_run, const std::string& obs) {
    const ExperimentConfig cfg = resolve_config(args);
    ExperimentOptions opts;
    opts.out_dir = args.out_dir;
    opts.dry_run = dry_run;
    if (obs == "latent") opts.run_scan = false;
    if (obs == "scan") opts.run_latent = false;
    const ExperimentResult result = run_experiment(cfg, opts);
    if (!dry_run && result.latent && result.scan) {
        std::cout << "ordering " << (result.ordering_ok ? "holds" : "violated")
                  << ", margin " << (result.margin_ok ? "holds" : "violated") << "\n";
    }
    return 0;
}

int run_plot_data(const std::string& in_dir, const std::string& out_path) {
    // Tidy CSV across all evaluation reports for external plotting tools.
    std::ofstream out(out_path);
    if (!out) throw Error("io-error", "cannot write " + out_path);
    out << "policy,trial,hausdorff,steps,done_cause,completed\n";
    for (const char* name : {"latent", "scan", "zigzag", "random"}) {
        const fs::path p = fs::path(in_dir) / "eval" / (std::string(name) + ".json");
        if (!fs::exists(p)) continue;
        std::ifstream in(p);
        nlohmann::json j;
        in >> j;
        int trial = 0;
        for (const auto& row : j["trial_results"]) {
            out << j["policy"].get<std::string>() << "," << trial++ << ","
                << row["hausdorff"].get<double>() << "," << row["steps"].get<int>() << ","
                << row["done_cause"].get<std::string>() << ","
                << (row["completed"].get<bool>() ? 1 : 0) << "\n";
        }
    }
    std::cout << "wrote " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"keypoint-match imitation navigation testbed"};
    app.require_subcommand(1);

    CommonArgs demo_args, pre_args, train_args, eval_args, exp_args, cfg_args;
    std::string train_obs = "latent", eval_obs = "latent", exp_obs = "both";
    std::string agent_path, encoder_path, plot_in = "out", plot_out = "plot_summary.csv";
    int eval_trials = 0;
    bool dry_run = false;

    auto* demo_cmd = app.add_subcommand("demo-record", "record the scripted expert demo");
    add_common(demo_cmd, demo_args);

    auto* pre_cmd = app.add_subcommand("pretrain", "collect random rollouts and train the encoder");
    add_common(pre_cmd, pre_args);

    auto* train_cmd = app.add_subcommand("train", "train one policy end to end");
    add_common(train_cmd, train_args);
    train_cmd->add_option("--obs", train_obs, "observation mode: latent|scan");
    train_cmd->add_option("--encoder", encoder_path, "encoder checkpoint (latent mode)");

    auto* eval_cmd = app.add_subcommand("eval", "evaluate a trained agent checkpoint");
    add_common(eval_cmd, eval_args);
    eval_cmd->add_option("--agent", agent_path, "agent checkpoint")->required();
    eval_cmd->add_option("--obs", eval_obs, "observation mode: latent|scan");
    eval_cmd->add_option("--encoder", encoder_path, "encoder checkpoint (latent mode)");
    eval_cmd->add_option("--trials", eval_trials, "trial count override");

    auto* exp_cmd = app.add_subcommand("experiment", "demo + pretrain + train + eval + report");
    add_common(exp_cmd, exp_args);
    exp_cmd->add_flag("--dry-run", dry_run, "validate the config and exit");
    exp_cmd->add_option("--obs", exp_obs, "which policies to train: latent|scan|both");

    auto* plot_cmd = app.add_subcommand("plot-data", "flatten reports into plot-ready CSV");
    plot_cmd->add_option("--in", plot_in, "experiment output directory");
    plot_cmd->add_option("--out", plot_out, "CSV path to write");

    auto* cfg_cmd = app.add_subcommand("make-config", "write a preset config file");
    add_common(cfg_cmd, cfg_args);

    CLI11_PARSE(app, argc, argv);

    try {
        if (demo_cmd->parsed()) return run_demo_record(demo_args);
        if (pre_cmd->parsed()) return run_pretrain(pre_args);
        if (train_cmd->parsed()) return run_train(train_args, train_obs, encoder_path);
        if (eval_cmd->parsed())
            return run_eval(eval_args, agent_path, eval_obs, encoder_path, eval_trials);
        if (exp_cmd->parsed()) return run_full_experiment(exp_args, dry_run, exp_obs);
        if (plot_cmd->parsed()) return run_plot_data(plot_in, plot_out);
        if (cfg_cmd->parsed()) {
            const ExperimentConfig cfg = resolve_config(cfg_args);
            fs::create_directories(cfg_args.out_dir);
            const std::string path = (fs::path(cfg_args.out_dir) / (cfg_args.preset + ".cfg")).string();
            std::ofstream out(path);
            out << config_to_text(cfg);
            std::cout << "wrote " << path << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
