#include "matchnav/reward.hpp"

#include <algorithm>
#include <cmath>

#include "matchnav/common.hpp"

#include <json.hpp>

namespace matchnav::reward {

void Params::validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("bad-config", "gamma must be in (0, 1]");
    if (lambda < 0.0) throw Error("bad-config", "lambda must be >= 0");
    if (min_matches < 1) throw Error("bad-config", "min_matches must be >= 1");
    if (retrieval_hysteresis < 0.0) throw Error("bad-config", "hysteresis must be >= 0");
}

const char* cause_name(Cause c) {
    switch (c) {
        case Cause::none: return "none";
        case Cause::collision: return "collision";
        case Cause::low_matches: return "low-matches";
        case Cause::no_keypoints: return "no-keypoints";
        case Cause::demo_end: return "demo-end";
    }
    return "unknown";
}

int successor_index(int i, int demo_len, const Params& params) {
    if (params.done_on_demo_end) return std::min(i + 1, demo_len - 1);
    return (i + 1) % demo_len;
}

Output step_from_measurement(const State& state, const StepMeasurement& m, double steer_delta,
                             bool collided, int demo_len, const Params& params) {
    Output out;
    out.new_state = state;

    if (collided) {
        out.reward = params.done_penalty;
        out.done = true;
        out.cause = Cause::collision;
        out.diag.expert_index = m.retrieval.index;
        return out;
    }
    if (m.next_obs_featureless) {
        out.reward = params.done_penalty;
        out.done = true;
        out.cause = Cause::no_keypoints;
        return out;
    }
    const int starvation_count = m.window_max_count >= 0 ? m.window_max_count
                                                         : m.retrieval.match_count;
    if (starvation_count < params.min_matches) {
        out.reward = params.done_penalty;
        out.done = true;
        out.cause = Cause::low_matches;
        out.diag.expert_index = m.retrieval.index;
        out.diag.density = m.retrieval.density;
        out.diag.match_count = m.retrieval.match_count;
        return out;
    }

    out.diag.f = m.retrieval.density;
    out.diag.v = params.gamma * m.d_next_at_anchor - m.d_curr_at_anchor;
    out.diag.penalty = params.lambda * std::fabs(steer_delta);
    out.diag.expert_index = m.retrieval.index;
    out.diag.density = m.retrieval.density;
    out.diag.match_count = m.retrieval.match_count;

    out.reward = out.diag.f + out.diag.v - out.diag.penalty;
    out.new_state.prev_index = m.retrieval.index;
    out.new_state.prev_density_to_next = m.d_next_at_succ;
    out.new_state.prev_obs_hash = m.next_obs_hash;

    // Finishing the demonstration is a success: the episode terminates with
    // the normal alive reward rather than the penalty.
    if (params.done_on_demo_end && m.retrieval.index == demo_len - 1 &&
        m.retrieval.density >= params.demo_end_min_density) {
        out.done = true;
        out.cause = Cause::demo_end;
    }
    return out;
}

Tracker::Tracker(const demo::Demonstration& demo, Params params)
    : demo_(demo), params_(params) {
    params_.validate();
    if (demo_.size() < 2) throw Error("demo-too-short", "tracker needs >= 2 demo frames");
}

State Tracker::init_episode(const Image& first_obs) const {
    const vision::KeypointSet obs_kp = vision::detect_keypoints(first_obs, demo_.vision_params);
    if (obs_kp.empty()) throw Error("no-keypoints", "first observation has no keypoints");
    const demo::WindowDetail scan = demo::retrieve_initial_detailed(demo_, obs_kp);
    // Earliest frame within the hysteresis margin of the best density: a
    // forward-facing camera makes frames ahead of the true position score
    // almost as well (their view is the current view advanced), so the
    // leading edge of that similarity ridge is the physical position.
    demo::RetrievalResult r = scan.best;
    for (const auto& cand : scan.candidates) {
        if (cand.density >= scan.best.density - params_.retrieval_hysteresis) {
            r.index = cand.index;
            r.density = cand.density;
            r.match_count = cand.match_count;
            break;
        }
    }

    State state;
    state.prev_index = r.index;
    const int next = successor_index(r.index, demo_.size(), params_);
    state.prev_density_to_next = vision::match_density(
        obs_kp, demo_.features[static_cast<size_t>(next)], demo_.vision_params.ratio_threshold);
    state.prev_obs_hash = first_obs.content_hash();
    return state;
}

Output Tracker::step(const State& state, const Image& o_t, const world::Action& action,
                     const Image& o_next, bool collided) const {
    const int n = demo_.size();
    const bool wrap = !params_.done_on_demo_end;
    StepMeasurement m;

    const vision::KeypointSet next_kp = vision::detect_keypoints(o_next, demo_.vision_params);
    if (next_kp.empty()) {
        m.next_obs_featureless = true;
        return step_from_measurement(state, m, action.steer_delta, collided, n, params_);
    }

    const demo::WindowDetail window =
        demo::retrieve_windowed_detailed(demo_, next_kp, state.prev_index, wrap);
    // Hysteresis: take the earliest candidate within the margin of the best
    // density. The held frame only loses to a decisively better forward one.
    m.retrieval = window.best;
    m.window_max_count = 0;
    for (const auto& cand : window.candidates)
        m.window_max_count = std::max(m.window_max_count, cand.match_count);
    if (m.window_max_count < params_.min_matches) {
        // The window may have drifted off the agent's true position; the
        // starvation verdict ("matches dropped below the threshold") is
        // about the observation against the demonstration as a whole, so
        // fall back to a full scan before declaring the episode dead.
        const demo::WindowDetail full = demo::retrieve_initial_detailed(demo_, next_kp);
        for (const auto& cand : full.candidates)
            m.window_max_count = std::max(m.window_max_count, cand.match_count);
    }
    for (const auto& cand : window.candidates) {
        if (cand.density >= window.best.density - params_.retrieval_hysteresis) {
            m.retrieval.index = cand.index;
            m.retrieval.density = cand.density;
            m.retrieval.match_count = cand.match_count;
            break;
        }
    }
    // Advance at most one frame per step: the vehicle cannot physically
    // outrun that rate, and single-step jumps are how density noise used to
    // ratchet the monotone window up the forward-similarity ridge.
    if (!wrap && m.retrieval.index > state.prev_index + 1) {
        for (const auto& cand : window.candidates) {
            if (cand.index == state.prev_index + 1) {
                m.retrieval.index = cand.index;
                m.retrieval.density = cand.density;
                m.retrieval.match_count = cand.match_count;
                break;
            }
        }
    }
    m.next_obs_hash = o_next.content_hash();

    auto window_density = [&](int idx) -> const demo::WindowDetail::Candidate* {
        for (const auto& c : window.candidates)
            if (c.index == idx) return &c;
        return nullptr;
    };

    const int anchor = successor_index(state.prev_index, n, params_);
    if (const auto* c = window_density(anchor)) {
        m.d_next_at_anchor = c->density;
    } else {
        m.d_next_at_anchor = vision::match_density(
            next_kp, demo_.features[static_cast<size_t>(anchor)], demo_.vision_params.ratio_threshold);
    }

    if (state.prev_obs_hash == o_t.content_hash()) {
        m.d_curr_at_anchor = state.prev_density_to_next; // cache measured from this very image
    } else {
        const vision::KeypointSet curr_kp = vision::detect_keypoints(o_t, demo_.vision_params);
        if (curr_kp.empty()) throw Error("no-keypoints", "current observation has no keypoints");
        m.d_curr_at_anchor = vision::match_density(
            curr_kp, demo_.features[static_cast<size_t>(anchor)], demo_.vision_params.ratio_threshold);
    }

    const int succ = successor_index(m.retrieval.index, n, params_);
    if (const auto* c = window_density(succ)) {
        m.d_next_at_succ = c->density;
    } else {
        m.d_next_at_succ = vision::match_density(
            next_kp, demo_.features[static_cast<size_t>(succ)], demo_.vision_params.ratio_threshold);
    }

    return step_from_measurement(state, m, action.steer_delta, collided, n, params_);
}

std::string diagnostics_json_line(long long t, const Output& out) {
    nlohmann::json j;
    j["t"] = t;
    j["F"] = out.diag.f;
    j["V"] = out.diag.v;
    j["penalty"] = out.diag.penalty;
    j["reward"] = out.reward;
    j["expert_index"] = out.diag.expert_index;
    j["done"] = out.done;
    j["cause"] = cause_name(out.cause);
    return j.dump();
}

} // namespace matchnav::reward
