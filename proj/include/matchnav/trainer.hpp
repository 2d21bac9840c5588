#ifndef MATCHNAV_TRAINER_HPP
#define MATCHNAV_TRAINER_HPP

#include <functional>
#include <string>
#include <vector>

#include "matchnav/env.hpp"
#include "matchnav/reward.hpp"
#include "matchnav/sac.hpp"

namespace matchnav::rl {

enum class ObsMode { latent, scan };

ObsMode obs_mode_from_string(const std::string& s);
const char* obs_mode_name(ObsMode m);

struct TrainConfig {
    long long budget = 20000;   // environment steps, warmup included
    int step_cap = 400;         // per-episode step limit (a truncation, not a terminal)
    long long warmup = 1000;    // uniform-random action steps before updates
    int update_every = 1;       // gradient step every N environment steps
    long long eval_every = 0;   // deterministic probe episode cadence; 0 disables
    uint64_t seed = 0;
    ObsMode mode = ObsMode::latent;
};

struct EpisodeRow {
    int episode = 0;
    int steps = 0;
    double ret = 0.0; // undiscounted return
    std::string done_cause;
    bool eval = false;
};

struct TrainResult {
    std::vector<EpisodeRow> episodes;
    long long env_steps = 0;
};

std::string episode_json_line(const EpisodeRow& row);

/// Builds policy states from observations; the demonstration is reachable
/// only through the reward tracker. The encoder is required in latent mode
/// and ignored in scan mode.
TrainResult train(SacAgent& agent, NavEnv& env, const reward::Tracker& tracker,
                  const repr::Autoencoder* encoder, const TrainConfig& cfg,
                  const std::function<void(const EpisodeRow&)>& on_episode = {});

/// Pure function from the observation history to the policy input; also
/// used by evaluation rollouts so the two paths cannot drift apart.
repr::PolicyState make_policy_state(ObsMode mode, const repr::Autoencoder* encoder,
                                    const NavEnv::Observation& prev,
                                    const NavEnv::Observation& now,
                                    const world::Action& last_action);

} // namespace matchnav::rl

#endif
