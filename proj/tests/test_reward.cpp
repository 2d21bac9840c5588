#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "matchnav/common.hpp"
#include "matchnav/reward.hpp"

using namespace matchnav;
using reward::Cause;

namespace {

reward::StepMeasurement stub_measurement(double f, double d_next_anchor, double d_curr_anchor,
                                         int index = 5, int matches = 50) {
    reward::StepMeasurement m;
    m.retrieval.index = index;
    m.retrieval.density = f;
    m.retrieval.match_count = matches;
    m.d_next_at_anchor = d_next_anchor;
    m.d_curr_at_anchor = d_curr_anchor;
    m.d_next_at_succ = 0.5;
    return m;
}

} // namespace

TEST_CASE("collision yields exactly the penalty") {
    reward::Params params;
    reward::State state{3, 0.4, 0};
    const auto out = reward::step_from_measurement(state, stub_measurement(0.9, 0.8, 0.7), 0.3,
                                                   true, 40, params);
    CHECK(out.done);
    CHECK(out.cause == Cause::collision);
    CHECK(out.reward == -10.0);
}

TEST_CASE("match starvation yields exactly the penalty") {
    reward::Params params;
    reward::State state{3, 0.4, 0};
    const auto out = reward::step_from_measurement(
        state, stub_measurement(0.05, 0.1, 0.2, 5, params.min_matches - 1), 0.0, false, 40, params);
    CHECK(out.done);
    CHECK(out.cause == Cause::low_matches);
    CHECK(out.reward == -10.0);
}

TEST_CASE("featureless next views are crash-equivalent") {
    reward::Params params;
    reward::StepMeasurement m;
    m.next_obs_featureless = true;
    const auto out = reward::step_from_measurement({0, 0.0, 0}, m, 0.0, false, 40, params);
    CHECK(out.done);
    CHECK(out.cause == Cause::no_keypoints);
    CHECK(out.reward == -10.0);
}

TEST_CASE("steering penalty isolated") {
    reward::Params params; // lambda = 0.01
    const auto out = reward::step_from_measurement({0, 0.0, 0}, stub_measurement(0.0, 0.0, 0.0),
                                                   1.0, false, 40, params);
    CHECK_FALSE(out.done);
    CHECK(out.reward == doctest::Approx(-0.01).epsilon(1e-12));
}

TEST_CASE("reward decomposes exactly as F + V - lambda|steer|") {
    reward::Params params;
    Rng rng(314);
    for (int i = 0; i < 1000; ++i) {
        const double f = rng.u01();
        const double dn = rng.u01();
        const double dc = rng.u01();
        const double steer = rng.uniform(-1.0, 1.0);
        const int index = static_cast<int>(rng.below(38));
        const auto out = reward::step_from_measurement(
            {index, dc, 0}, stub_measurement(f, dn, dc, index, 20 + static_cast<int>(rng.below(100))),
            steer, false, 40, params);

        const double expected = f + (params.gamma * dn - dc) - params.lambda * std::fabs(steer);
        CHECK(std::fabs(out.reward - expected) < 1e-12);
        CHECK(std::fabs(out.reward - (out.diag.f + out.diag.v - out.diag.penalty)) < 1e-12);
        // alive rewards live in the analytic bounds
        CHECK(out.reward >= -1.0 - params.lambda - 1e-12);
        CHECK(out.reward <= 1.0 + params.gamma + 1e-12);
        // index never regresses
        CHECK(out.new_state.prev_index >= index);
    }
}

TEST_CASE("finishing the demo is a success, not a crash") {
    reward::Params params;
    const int n = 40;
    const auto out = reward::step_from_measurement(
        {n - 2, 0.6, 0}, stub_measurement(0.8, 0.7, 0.6, n - 1, 60), 0.1, false, n, params);
    CHECK(out.done);
    CHECK(out.cause == Cause::demo_end);
    // terminates with the alive reward
    const double expected = 0.8 + (params.gamma * 0.7 - 0.6) - params.lambda * 0.1;
    CHECK(out.reward == doctest::Approx(expected).epsilon(1e-12));

    reward::Params looping = params;
    looping.done_on_demo_end = false;
    const auto wrap = reward::step_from_measurement(
        {n - 2, 0.6, 0}, stub_measurement(0.8, 0.7, 0.6, n - 1, 60), 0.1, false, n, looping);
    CHECK_FALSE(wrap.done);
}

TEST_CASE("successor index clamps or wraps per config") {
    reward::Params ending;
    CHECK(reward::successor_index(5, 40, ending) == 6);
    CHECK(reward::successor_index(39, 40, ending) == 39);
    reward::Params looping;
    looping.done_on_demo_end = false;
    CHECK(reward::successor_index(39, 40, looping) == 0);
}

TEST_CASE("parameter validation") {
    reward::Params bad;
    bad.gamma = 0.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.lambda = -1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = {};
    bad.min_matches = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("episode initialization retrieves the closest frame") {
    const demo::Demonstration& d = fixtures::demonstration();
    const reward::Tracker tracker(d, fixtures::config().reward);

    const reward::State s0 = tracker.init_episode(d.frames[0]);
    CHECK(s0.prev_index == 0);
    const reward::State s7 = tracker.init_episode(d.frames[7]);
    CHECK(s7.prev_index == 7);
}

TEST_CASE("replaying the demo frames reproduces the hand-evaluated reward") {
    const demo::Demonstration& d = fixtures::demonstration();
    const reward::Params params = fixtures::config().reward;
    const reward::Tracker tracker(d, params);
    const int k = d.size() / 2;

    const reward::State state = tracker.init_episode(d.frames[static_cast<size_t>(k)]);
    REQUIRE(state.prev_index == k);
    const auto out = tracker.step(state, d.frames[static_cast<size_t>(k)], {0.0, 0.5},
                                  d.frames[static_cast<size_t>(k + 1)], false);

    // hand evaluation: retrieval must hit k+1 exactly (density 1), the
    // anchor is k+1, so F = 1, V = gamma * 1 - d(frames[k], frames[k+1]);
    // the o_t side is measured with the observation-query detector, exactly
    // as the tracker measures it
    const auto obs_kp = vision::detect_keypoints(d.frames[static_cast<size_t>(k)], d.vision_params);
    const double q = vision::match_density(obs_kp, d.features[static_cast<size_t>(k + 1)],
                                           d.vision_params.ratio_threshold);
    CHECK(out.diag.expert_index == k + 1);
    CHECK(out.diag.f == doctest::Approx(1.0));
    CHECK(out.reward == doctest::Approx(1.0 + params.gamma - q).epsilon(1e-9));
    CHECK_FALSE(out.done);
    CHECK(out.new_state.prev_index == k + 1);
}

TEST_CASE("cached density is reused only for the very same image") {
    const demo::Demonstration& d = fixtures::demonstration();
    const reward::Tracker tracker(d, fixtures::config().reward);
    const int k = 3;
    const reward::State state = tracker.init_episode(d.frames[static_cast<size_t>(k)]);

    // o_t differs from the cached observation: the tracker must recompute,
    // and the result must match a fresh measurement of d(o_t, anchor) made
    // with the observation-query detector
    const Image& other = d.frames[static_cast<size_t>(k + 1)];
    const auto out = tracker.step(state, other, {0.0, 0.0}, d.frames[static_cast<size_t>(k + 2)],
                                  false);
    const int anchor = k + 1;
    auto obs_density = [&](const Image& img) {
        return vision::match_density(vision::detect_keypoints(img, d.vision_params),
                                     d.features[static_cast<size_t>(anchor)],
                                     d.vision_params.ratio_threshold);
    };
    const double expected_dc = obs_density(other); // identical frames still score 1
    CHECK(out.diag.v ==
          doctest::Approx(fixtures::config().reward.gamma *
                              obs_density(d.frames[static_cast<size_t>(k + 2)]) -
                          expected_dc)
              .epsilon(1e-9));
}

TEST_CASE("stationary replay of the demo keeps the reward near gamma") {
    const demo::Demonstration& d = fixtures::demonstration();
    const reward::Params params = fixtures::config().reward;
    const reward::Tracker tracker(d, params);

    // the largest inter-frame density gap of this demo bounds the V term
    double eps = 0.0;
    for (int i = 0; i + 1 < d.size(); ++i) {
        const double q = vision::match_density(d.features[static_cast<size_t>(i)],
                                               d.features[static_cast<size_t>(i + 1)],
                                               d.vision_params.ratio_threshold);
        eps = std::fmax(eps, 1.0 - q);
    }

    reward::State state = tracker.init_episode(d.frames[0]);
    for (int t = 0; t + 1 < d.size(); ++t) {
        const auto out = tracker.step(state, d.frames[static_cast<size_t>(t)], {0.0, 0.6},
                                      d.frames[static_cast<size_t>(t + 1)], false);
        CHECK(out.reward >= params.gamma - eps - 1e-9);
        state = out.new_state;
        if (out.done) break;
    }
}

TEST_CASE("featureless observation ends the episode through the tracker") {
    const demo::Demonstration& d = fixtures::demonstration();
    const reward::Tracker tracker(d, fixtures::config().reward);
    const reward::State state = tracker.init_episode(d.frames[0]);
    const Image blank(64, 64, 0.5f);
    const auto out = tracker.step(state, d.frames[0], {0.0, 0.5}, blank, false);
    CHECK(out.done);
    CHECK(out.cause == Cause::no_keypoints);
    CHECK(out.reward == -10.0);
}

TEST_CASE("diagnostics serialize to one JSON line") {
    reward::Params params;
    const auto out = reward::step_from_measurement({2, 0.5, 0}, stub_measurement(0.9, 0.8, 0.5, 3),
                                                   0.25, false, 40, params);
    const std::string line = reward::diagnostics_json_line(17, out);
    CHECK(line.find("\"t\":17") != std::string::npos);
    CHECK(line.find("\"done\":false") != std::string::npos);
    CHECK(line.find("\"expert_index\":3") != std::string::npos);
}
