#ifndef MATCHNAV_REWARD_HPP
#define MATCHNAV_REWARD_HPP

#include <cstdint>
#include <string>

#include "matchnav/demo_store.hpp"

namespace matchnav::reward {

struct Params {
    double gamma = 0.99;        // shared with the RL objective
    double lambda = 0.01;       // steering penalty weight
    double done_penalty = -10.0;
    int min_matches = 10;       // accepted matches below this ends the episode
    bool done_on_demo_end = true; // false loops the retrieval window (patrol demos)
    // Advance the tracked frame only when a forward candidate beats the
    // held one by this density margin. At 64-px resolution adjacent demo
    // frames are close in appearance; without hysteresis, density noise
    // ratchets the monotone window forward even for a stationary agent.
    double retrieval_hysteresis = 0.04;
    // Reaching the final frame ends the episode only when its density also
    // clears this floor: finishing needs positive evidence of actually
    // standing at the end of the route, not just index drift.
    double demo_end_min_density = 0.34;

    void validate() const;
};

/// Tracked closest-expert-frame index plus the cached density against the
/// frame after it. The cache carries the hash of the observation it was
/// measured from, so a stale cache is recomputed instead of trusted.
struct State {
    int prev_index = 0;
    double prev_density_to_next = 0.0;
    uint64_t prev_obs_hash = 0;
};

enum class Cause { none, collision, low_matches, no_keypoints, demo_end };

const char* cause_name(Cause c);

struct Diagnostics {
    double f = 0.0;       // density at the retrieved frame
    double v = 0.0;       // shaping term
    double penalty = 0.0; // lambda * |steer|
    int expert_index = -1;
    double density = 0.0;
    int match_count = 0;
};

struct Output {
    double reward = 0.0;
    bool done = false;
    Cause cause = Cause::none;
    State new_state;
    Diagnostics diag;
};

/// Densities for one transition, however they were obtained. Tests drive
/// the reward arithmetic with synthetic values through this struct.
struct StepMeasurement {
    demo::RetrievalResult retrieval;  // at the next observation
    double d_next_at_anchor = 0.0;    // d(o_next, frames[succ(prev)])
    double d_curr_at_anchor = 0.0;    // d(o_t,    frames[succ(prev)])
    double d_next_at_succ = 0.0;      // d(o_next, frames[succ(retrieved)]), cached into new_state
    uint64_t next_obs_hash = 0;
    bool next_obs_featureless = false;
    // Best match count across the whole retrieval window; the starvation
    // check uses it when set (>= 0): the episode is starved only when no
    // nearby expert frame matches, not merely the held one.
    int window_max_count = -1;
};

/// The reward equation: F + V - lambda * |steer| while alive; the done
/// penalty on collision, featureless views, or the match count dropping
/// under min_matches. Reaching the final demo frame (when done_on_demo_end)
/// terminates as success with the alive reward. Pure arithmetic; no vision.
Output step_from_measurement(const State& state, const StepMeasurement& m, double steer_delta,
                             bool collided, int demo_len, const Params& params);

/// Index of the frame after i under the configured end handling.
int successor_index(int i, int demo_len, const Params& params);

/// Binds a demonstration. Measures densities with the demo's vision
/// parameters and feeds them through step_from_measurement. Single-owner
/// per episode; distinct episodes may share the demonstration.
class Tracker {
public:
    Tracker(const demo::Demonstration& demo, Params params);

    const Params& params() const { return params_; }

    /// Linear search for the closest frame, then cache the density against
    /// the following frame.
    State init_episode(const Image& first_obs) const;

    Output step(const State& state, const Image& o_t, const world::Action& action,
                const Image& o_next, bool collided) const;

private:
    const demo::Demonstration& demo_;
    Params params_;
};

/// One JSON line of per-step diagnostics: {t, F, V, penalty, reward,
/// expert_index, done, cause}.
std::string diagnostics_json_line(long long t, const Output& out);

} // namespace matchnav::reward

#endif
