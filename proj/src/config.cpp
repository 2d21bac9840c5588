#include "matchnav/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace matchnav {

Pose ExperimentConfig::start_pose() const {
    if (waypoints.size() < 2) throw Error("bad-config", "need >= 2 waypoints");
    Pose p = waypoints.front();
    p.heading = std::atan2(waypoints[1].y - p.y, waypoints[1].x - p.x);
    return p;
}

void ExperimentConfig::validate() const {
    demo_camera.validate();
    robot_camera.validate();
    reward.validate();
    if (waypoints.size() < 2) throw Error("bad-config", "need >= 2 waypoints");
    if (world.floor_plan.size() < 3) throw Error("bad-config", "need a closed floor plan");
    if (ae.width != robot_camera.image_width || ae.height != robot_camera.image_height)
        throw Error("bad-config", "autoencoder geometry must match the robot camera");
    if (eval_trials < 1) throw Error("bad-config", "eval trials must be >= 1");
}

namespace {

class KvArgs {
public:
    KvArgs(const std::string& directive, int line_no) : directive_(directive), line_(line_no) {}

    void add(const std::string& token) {
        const auto eq = token.find('=');
        if (eq == std::string::npos)
            throw Error("bad-config", "line " + std::to_string(line_) + ": expected key=value, got '" +
                                          token + "'");
        kv_[token.substr(0, eq)] = token.substr(eq + 1);
    }

    double number(const std::string& key, double fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        used_.push_back(key);
        try {
            return std::stod(it->second);
        } catch (const std::exception&) {
            throw Error("bad-config", "line " + std::to_string(line_) + ": bad number for " + key);
        }
    }

    bool boolean(const std::string& key, bool fallback) {
        auto it = kv_.find(key);
        if (it == kv_.end()) return fallback;
        used_.push_back(key);
        if (it->second == "true" || it->second == "1") return true;
        if (it->second == "false" || it->second == "0") return false;
        throw Error("bad-config", "line " + std::to_string(line_) + ": bad boolean for " + key);
    }

    void finish() const {
        for (const auto& [key, value] : kv_) {
            bool found = false;
            for (const auto& u : used_)
                if (u == key) found = true;
            if (!found)
                throw Error("bad-config", "line " + std::to_string(line_) + ": unknown key '" + key +
                                              "' for directive '" + directive_ + "'");
        }
    }

private:
    std::string directive_;
    int line_;
    std::map<std::string, std::string> kv_;
    std::vector<std::string> used_;
};

} // namespace

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool saw_wall = false;

    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string directive;
        if (!(ls >> directive)) continue;

        if (directive == "wall") {
            Segment s;
            if (!(ls >> s.a.x >> s.a.y >> s.b.x >> s.b.y))
                throw Error("bad-config", "line " + std::to_string(line_no) + ": wall needs x1 y1 x2 y2");
            if (!saw_wall) {
                cfg.world.floor_plan.clear(); // replace any preset plan
                saw_wall = true;
            }
            cfg.world.floor_plan.push_back(s);
            continue;
        }
        if (directive == "waypoint") {
            Pose p;
            if (!(ls >> p.x >> p.y))
                throw Error("bad-config", "line " + std::to_string(line_no) + ": waypoint needs x y");
            cfg.waypoints.push_back(p);
            continue;
        }
        if (directive == "seed") {
            double s;
            if (!(ls >> s))
                throw Error("bad-config", "line " + std::to_string(line_no) + ": seed needs a value");
            cfg.seed = static_cast<uint64_t>(s);
            continue;
        }

        KvArgs args(directive, line_no);
        std::string camera_name;
        if (directive == "camera") {
            if (!(ls >> camera_name) || (camera_name != "demo" && camera_name != "robot"))
                throw Error("bad-config",
                            "line " + std::to_string(line_no) + ": camera needs a profile name demo|robot");
        }
        std::string token;
        while (ls >> token) args.add(token);

        if (directive == "world") {
            cfg.world.texture_seed = static_cast<uint64_t>(args.number("texture_seed", 7));
            cfg.world.poster_density = static_cast<int>(args.number("poster_density", 3));
            cfg.world.texture_amplitude = args.number("texture_amplitude", 0.35);
            cfg.world.wall_height = args.number("wall_height", 2.5);
            cfg.world.corridor_width = args.number("corridor_width", 2.0);
        } else if (directive == "camera") {
            world::CameraConfig& cam = camera_name == "demo" ? cfg.demo_camera : cfg.robot_camera;
            cam.height = args.number("height", cam.height);
            cam.pitch = args.number("pitch", cam.pitch);
            cam.hfov = args.number("hfov", cam.hfov);
            cam.image_width = static_cast<int>(args.number("width", cam.image_width));
            cam.image_height = static_cast<int>(args.number("height_px", cam.image_height));
        } else if (directive == "dynamics") {
            cfg.dynamics.k_s = args.number("k_s", cfg.dynamics.k_s);
            cfg.dynamics.k_v = args.number("k_v", cfg.dynamics.k_v);
            cfg.dynamics.dt = args.number("dt", cfg.dynamics.dt);
            cfg.dynamics.vehicle_radius = args.number("radius", cfg.dynamics.vehicle_radius);
        } else if (directive == "scan") {
            cfg.scan.beams = static_cast<int>(args.number("beams", cfg.scan.beams));
            cfg.scan.span = args.number("span", cfg.scan.span);
            cfg.scan.max_range = args.number("max_range", cfg.scan.max_range);
        } else if (directive == "expert") {
            cfg.expert.lookahead = args.number("lookahead", cfg.expert.lookahead);
            cfg.expert.cruise = args.number("cruise", cfg.expert.cruise);
            cfg.expert.frame_period = args.number("frame_period", cfg.expert.frame_period);
            cfg.expert.goal_tolerance = args.number("goal_tolerance", cfg.expert.goal_tolerance);
        } else if (directive == "vision") {
            cfg.vision.max_keypoints = static_cast<int>(args.number("max_keypoints", cfg.vision.max_keypoints));
            cfg.vision.demo_max_keypoints = static_cast<int>(args.number("demo_max_keypoints", cfg.vision.demo_max_keypoints));
            cfg.vision.ratio_threshold = args.number("ratio", cfg.vision.ratio_threshold);
            cfg.vision.nms_radius = static_cast<int>(args.number("nms_radius", cfg.vision.nms_radius));
            cfg.vision.response_threshold = args.number("response_threshold", cfg.vision.response_threshold);
        } else if (directive == "reward") {
            cfg.reward.gamma = args.number("gamma", cfg.reward.gamma);
            cfg.reward.lambda = args.number("lambda", cfg.reward.lambda);
            cfg.reward.done_penalty = args.number("done_penalty", cfg.reward.done_penalty);
            cfg.reward.min_matches = static_cast<int>(args.number("min_matches", cfg.reward.min_matches));
            cfg.reward.done_on_demo_end = args.boolean("done_on_demo_end", cfg.reward.done_on_demo_end);
            cfg.reward.retrieval_hysteresis = args.number("hysteresis", cfg.reward.retrieval_hysteresis);
            cfg.reward.demo_end_min_density = args.number("end_min_density", cfg.reward.demo_end_min_density);
        } else if (directive == "ae") {
            cfg.ae.latent = static_cast<int>(args.number("latent", cfg.ae.latent));
            cfg.ae.hidden = static_cast<int>(args.number("hidden", cfg.ae.hidden));
            cfg.ae.embed = static_cast<int>(args.number("embed", cfg.ae.embed));
            cfg.ae.patch = static_cast<int>(args.number("patch", cfg.ae.patch));
            cfg.ae.epochs = static_cast<int>(args.number("epochs", cfg.ae.epochs));
            cfg.ae.batch = static_cast<int>(args.number("batch", cfg.ae.batch));
            cfg.ae.lr = args.number("lr", cfg.ae.lr);
            cfg.ae.latent_penalty = args.number("latent_penalty", cfg.ae.latent_penalty);
            cfg.ae.decoder_decay = args.number("decoder_decay", cfg.ae.decoder_decay);
            cfg.pretrain_episodes = static_cast<int>(args.number("episodes", cfg.pretrain_episodes));
            cfg.pretrain_step_cap = static_cast<int>(args.number("step_cap", cfg.pretrain_step_cap));
        } else if (directive == "sac") {
            cfg.sac.hidden = static_cast<size_t>(args.number("hidden", static_cast<double>(cfg.sac.hidden)));
            cfg.sac.hidden_layers = static_cast<int>(args.number("layers", cfg.sac.hidden_layers));
            cfg.sac.lr = args.number("lr", cfg.sac.lr);
            cfg.sac.batch = static_cast<size_t>(args.number("batch", static_cast<double>(cfg.sac.batch)));
            cfg.sac.buffer_capacity =
                static_cast<size_t>(args.number("buffer", static_cast<double>(cfg.sac.buffer_capacity)));
            cfg.sac.tau = args.number("tau", cfg.sac.tau);
            cfg.sac.gamma = args.number("gamma", cfg.sac.gamma);
            cfg.sac.target_entropy = args.number("target_entropy", cfg.sac.target_entropy);
            cfg.sac.init_alpha = args.number("init_alpha", cfg.sac.init_alpha);
            cfg.sac.auto_alpha = args.boolean("auto_alpha", cfg.sac.auto_alpha);
        } else if (directive == "train") {
            cfg.budget_latent = static_cast<long long>(args.number("budget_latent", static_cast<double>(cfg.budget_latent)));
            cfg.budget_scan = static_cast<long long>(args.number("budget_scan", static_cast<double>(cfg.budget_scan)));
            cfg.train.step_cap = static_cast<int>(args.number("step_cap", cfg.train.step_cap));
            cfg.train.warmup = static_cast<long long>(args.number("warmup", static_cast<double>(cfg.train.warmup)));
            cfg.train.update_every = static_cast<int>(args.number("update_every", cfg.train.update_every));
            cfg.train.eval_every = static_cast<long long>(args.number("eval_every", static_cast<double>(cfg.train.eval_every)));
        } else if (directive == "jitter") {
            // start pose jitter for training and evaluation resets
            cfg.start_jitter_xy = args.number("xy", cfg.start_jitter_xy);
            cfg.start_jitter_heading = args.number("heading", cfg.start_jitter_heading);
        } else if (directive == "eval") {
            cfg.eval_trials = static_cast<int>(args.number("trials", cfg.eval_trials));
            cfg.eval_step_cap = static_cast<int>(args.number("step_cap", cfg.eval_step_cap));
            cfg.zigzag_amplitude = args.number("zigzag_amplitude", cfg.zigzag_amplitude);
        } else {
            throw Error("bad-config",
                        "line " + std::to_string(line_no) + ": unknown directive '" + directive + "'");
        }
        args.finish();
    }

    cfg.ae.width = cfg.robot_camera.image_width;
    cfg.ae.height = cfg.robot_camera.image_height;
    cfg.ae.seed = cfg.seed;
    cfg.sac.gamma = cfg.reward.gamma; // one shared discount
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("io-error", "cannot open config " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string config_to_text(const ExperimentConfig& cfg) {
    std::ostringstream out;
    out.precision(12);
    out << "# corridor world layout\n";
    for (const Segment& s : cfg.world.floor_plan)
        out << "wall " << s.a.x << " " << s.a.y << " " << s.b.x << " " << s.b.y << "\n";
    for (const Pose& p : cfg.waypoints) out << "waypoint " << p.x << " " << p.y << "\n";
    out << "world texture_seed=" << cfg.world.texture_seed
        << " poster_density=" << cfg.world.poster_density
        << " texture_amplitude=" << cfg.world.texture_amplitude
        << " wall_height=" << cfg.world.wall_height
        << " corridor_width=" << cfg.world.corridor_width << "\n";
    auto cam = [&](const char* name, const world::CameraConfig& c) {
        out << "camera " << name << " height=" << c.height << " pitch=" << c.pitch
            << " hfov=" << c.hfov << " width=" << c.image_width << " height_px=" << c.image_height
            << "\n";
    };
    cam("demo", cfg.demo_camera);
    cam("robot", cfg.robot_camera);
    out << "dynamics k_s=" << cfg.dynamics.k_s << " k_v=" << cfg.dynamics.k_v
        << " dt=" << cfg.dynamics.dt << " radius=" << cfg.dynamics.vehicle_radius << "\n";
    out << "scan beams=" << cfg.scan.beams << " span=" << cfg.scan.span
        << " max_range=" << cfg.scan.max_range << "\n";
    out << "expert lookahead=" << cfg.expert.lookahead << " cruise=" << cfg.expert.cruise
        << " frame_period=" << cfg.expert.frame_period
        << " goal_tolerance=" << cfg.expert.goal_tolerance << "\n";
    out << "vision max_keypoints=" << cfg.vision.max_keypoints
        << " demo_max_keypoints=" << cfg.vision.demo_max_keypoints
        << " ratio=" << cfg.vision.ratio_threshold << " nms_radius=" << cfg.vision.nms_radius
        << "\n";
    out << "reward gamma=" << cfg.reward.gamma << " lambda=" << cfg.reward.lambda
        << " done_penalty=" << cfg.reward.done_penalty << " min_matches=" << cfg.reward.min_matches
        << " done_on_demo_end=" << (cfg.reward.done_on_demo_end ? "true" : "false")
        << " hysteresis=" << cfg.reward.retrieval_hysteresis
        << " end_min_density=" << cfg.reward.demo_end_min_density << "\n";
    out << "ae latent=" << cfg.ae.latent << " hidden=" << cfg.ae.hidden << " embed=" << cfg.ae.embed
        << " patch=" << cfg.ae.patch << " epochs=" << cfg.ae.epochs << " batch=" << cfg.ae.batch
        << " lr=" << cfg.ae.lr << " episodes=" << cfg.pretrain_episodes
        << " step_cap=" << cfg.pretrain_step_cap << "\n";
    out << "sac hidden=" << cfg.sac.hidden << " layers=" << cfg.sac.hidden_layers
        << " lr=" << cfg.sac.lr << " batch=" << cfg.sac.batch << " buffer=" << cfg.sac.buffer_capacity
        << " tau=" << cfg.sac.tau << " target_entropy=" << cfg.sac.target_entropy
        << " init_alpha=" << cfg.sac.init_alpha << "\n";
    out << "train budget_latent=" << cfg.budget_latent << " budget_scan=" << cfg.budget_scan
        << " step_cap=" << cfg.train.step_cap << " warmup=" << cfg.train.warmup
        << " update_every=" << cfg.train.update_every << " eval_every=" << cfg.train.eval_every
        << "\n";
    out << "jitter xy=" << cfg.start_jitter_xy << " heading=" << cfg.start_jitter_heading << "\n";
    out << "eval trials=" << cfg.eval_trials << " step_cap=" << cfg.eval_step_cap
        << " zigzag_amplitude=" << cfg.zigzag_amplitude << "\n";
    out << "seed " << cfg.seed << "\n";
    return out.str();
}

} // namespace matchnav
