#include "matchnav/trainer.hpp"

#include <json.hpp>

namespace matchnav::rl {

ObsMode obs_mode_from_string(const std::string& s) {
    if (s == "latent") return ObsMode::latent;
    if (s == "scan") return ObsMode::scan;
    throw Error("bad-config", "unknown observation mode '" + s + "' (want latent|scan)");
}

const char* obs_mode_name(ObsMode m) { return m == ObsMode::latent ? "latent" : "scan"; }

std::string episode_json_line(const EpisodeRow& row) {
    nlohmann::json j;
    j["episode"] = row.episode;
    j["steps"] = row.steps;
    j["return"] = row.ret;
    j["done_cause"] = row.done_cause;
    j["eval"] = row.eval;
    return j.dump();
}

repr::PolicyState make_policy_state(ObsMode mode, const repr::Autoencoder* encoder,
                                    const NavEnv::Observation& prev,
                                    const NavEnv::Observation& now,
                                    const world::Action& last_action) {
    if (mode == ObsMode::latent) {
        if (!encoder) throw Error("bad-config", "latent mode needs a trained encoder");
        return repr::assemble_state(encoder->encode(prev.image), encoder->encode(now.image),
                                    last_action);
    }
    return repr::scan_state(prev.scan, now.scan, last_action);
}

namespace {

world::Action random_action(Rng& rng) {
    world::Action a;
    a.steer_delta = rng.uniform(-1.0, 1.0);
    a.throttle = rng.uniform(0.0, 1.0);
    return a;
}

} // namespace

TrainResult train(SacAgent& agent, NavEnv& env, const reward::Tracker& tracker,
                  const repr::Autoencoder* encoder, const TrainConfig& cfg,
                  const std::function<void(const EpisodeRow&)>& on_episode) {
    if (cfg.mode == ObsMode::latent && !encoder)
        throw Error("bad-config", "latent mode needs a trained encoder");

    TrainResult result;
    Rng master(hash_mix(cfg.seed, 0x7247));
    Rng sample_rng = master.fork(1);
    Rng eval_rng = master.fork(2);
    ReplayBuffer buffer(agent.config().buffer_capacity);
    const size_t batch_size = agent.config().batch;
    std::vector<Transition> batch;

    long long next_eval_at = cfg.eval_every > 0 ? cfg.eval_every : -1;
    int episode = 0;

    auto run_eval_episode = [&]() {
        NavEnv::Observation obs = env.reset(eval_rng);
        reward::State rstate = tracker.init_episode(obs.image);
        NavEnv::Observation prev = obs;
        world::Action last{};
        EpisodeRow row;
        row.episode = episode;
        row.eval = true;
        row.done_cause = "step-cap";
        for (int t = 0; t < cfg.step_cap; ++t) {
            const repr::PolicyState s = make_policy_state(cfg.mode, encoder, prev, obs, last);
            const world::Action a = agent.sample_action(s, true);
            const NavEnv::StepResult sr = env.step(a);
            const reward::Output out = tracker.step(rstate, obs.image, a, sr.obs.image, sr.collided);
            row.ret += out.reward;
            ++row.steps;
            prev = obs;
            obs = sr.obs;
            last = a;
            rstate = out.new_state;
            if (out.done) {
                row.done_cause = reward::cause_name(out.cause);
                break;
            }
        }
        return row;
    };

    while (result.env_steps < cfg.budget) {
        NavEnv::Observation obs = env.reset(master);
        reward::State rstate = tracker.init_episode(obs.image);
        NavEnv::Observation prev = obs;
        world::Action last{};
        repr::PolicyState state = make_policy_state(cfg.mode, encoder, prev, obs, last);

        EpisodeRow row;
        row.episode = episode;
        row.done_cause = "budget";
        bool done = false;

        while (!done && row.steps < cfg.step_cap && result.env_steps < cfg.budget) {
            const world::Action action = result.env_steps < cfg.warmup
                                             ? random_action(master)
                                             : agent.sample_action(state, false);
            const NavEnv::StepResult sr = env.step(action);
            const reward::Output out =
                tracker.step(rstate, obs.image, action, sr.obs.image, sr.collided);
            const repr::PolicyState next_state =
                make_policy_state(cfg.mode, encoder, obs, sr.obs, action);

            buffer.push({state.values, action, out.reward, next_state.values, out.done});
            ++result.env_steps;
            ++row.steps;
            row.ret += out.reward;

            if (result.env_steps > cfg.warmup && buffer.size() >= batch_size &&
                (result.env_steps % cfg.update_every) == 0) {
                batch.clear();
                for (size_t idx : buffer.sample_indices(batch_size, sample_rng))
                    batch.push_back(buffer.get(idx));
                agent.update(batch);
            }

            prev = obs;
            obs = sr.obs;
            last = action;
            state = next_state;
            rstate = out.new_state;
            if (out.done) {
                done = true;
                row.done_cause = reward::cause_name(out.cause);
            }
        }
        if (!done && row.steps >= cfg.step_cap) row.done_cause = "step-cap";

        result.episodes.push_back(row);
        if (on_episode) on_episode(row);
        ++episode;

        if (next_eval_at > 0 && result.env_steps >= next_eval_at) {
            const EpisodeRow eval_row = run_eval_episode();
            result.episodes.push_back(eval_row);
            if (on_episode) on_episode(eval_row);
            while (next_eval_at <= result.env_steps) next_eval_at += cfg.eval_every;
        }
    }
    return result;
}

} // namespace matchnav::rl
