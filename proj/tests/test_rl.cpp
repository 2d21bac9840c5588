#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "fixtures.hpp"
#include "matchnav/sac.hpp"
#include "matchnav/trainer.hpp"

using namespace matchnav;
using rl::SacAgent;
using rl::SacConfig;
using rl::Transition;

namespace {

SacConfig tiny_config(uint64_t seed = 1) {
    SacConfig cfg;
    cfg.state_dim = 6;
    cfg.hidden = 8;
    cfg.hidden_layers = 3;
    cfg.batch = 8;
    cfg.buffer_capacity = 64;
    cfg.seed = seed;
    return cfg;
}

nn::Mat random_states(size_t n, size_t dim, Rng& rng) {
    nn::Mat m(n, dim);
    for (double& v : m.data) v = rng.normal();
    return m;
}

std::vector<Transition> random_batch(size_t n, size_t dim, Rng& rng, bool done = false,
                                     double fixed_reward = std::nan("")) {
    std::vector<Transition> batch(n);
    for (auto& t : batch) {
        t.state.resize(dim);
        t.next_state.resize(dim);
        for (double& v : t.state) v = rng.normal();
        for (double& v : t.next_state) v = rng.normal();
        t.action.steer_delta = rng.uniform(-1.0, 1.0);
        t.action.throttle = rng.uniform(0.0, 1.0);
        t.reward = std::isnan(fixed_reward) ? rng.normal() : fixed_reward;
        t.done = done;
    }
    return batch;
}

double max_rel_err(const std::vector<double>& a, const std::vector<double>& b) {
    REQUIRE(a.size() == b.size());
    double worst = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        const double scale = std::fmax(1e-4, std::fmax(std::fabs(a[i]), std::fabs(b[i])));
        worst = std::fmax(worst, std::fabs(a[i] - b[i]) / scale);
    }
    return worst;
}

} // namespace

TEST_CASE("replay buffer ring semantics") {
    rl::ReplayBuffer buf(4);
    Rng rng(1);
    for (int i = 0; i < 10; ++i) {
        Transition t;
        t.reward = i;
        buf.push(t);
    }
    CHECK(buf.size() == 4);
    CHECK(buf.inserted() == 10);
    // the last four rewards survive
    std::vector<double> rewards;
    for (size_t i = 0; i < buf.size(); ++i) rewards.push_back(buf.get(i).reward);
    std::sort(rewards.begin(), rewards.end());
    CHECK(rewards == std::vector<double>{6, 7, 8, 9});
}

TEST_CASE("replay sampling is uniform (chi-square at p=0.01)") {
    const size_t n = 1000;
    rl::ReplayBuffer buf(n);
    for (size_t i = 0; i < n; ++i) buf.push({});
    Rng rng(77);
    const size_t draws = 100000;
    std::vector<long long> counts(n, 0);
    for (size_t chunk = 0; chunk < draws / 1000; ++chunk)
        for (size_t idx : buf.sample_indices(1000, rng)) ++counts[idx];

    const double expected = static_cast<double>(draws) / n;
    double chi2 = 0.0;
    for (long long c : counts) {
        const double d = c - expected;
        chi2 += d * d / expected;
    }
    // Wilson-Hilferty upper critical value for df = n-1 at p = 0.01
    const double df = static_cast<double>(n - 1);
    const double z99 = 2.3263478740408408;
    const double crit = df * std::pow(1.0 - 2.0 / (9.0 * df) + z99 * std::sqrt(2.0 / (9.0 * df)), 3);
    CHECK(chi2 < crit);
}

TEST_CASE("actions are deterministic in deterministic mode and always in bounds") {
    SacAgent agent(tiny_config(3));
    repr::PolicyState state;
    state.values = {0.1, -0.2, 0.3, 0.0, -0.5, 0.7};

    const world::Action a1 = agent.sample_action(state, true);
    const world::Action a2 = agent.sample_action(state, true);
    CHECK(a1.steer_delta == a2.steer_delta);
    CHECK(a1.throttle == a2.throttle);

    for (int i = 0; i < 100000; ++i) {
        const world::Action a = agent.sample_action(state, false);
        CHECK(a.steer_delta >= -1.0);
        CHECK(a.steer_delta <= 1.0);
        CHECK(a.throttle >= 0.0);
        CHECK(a.throttle <= 1.0);
    }
}

TEST_CASE("stochastic action mean approaches the deterministic action") {
    SacAgent agent(tiny_config(4));
    repr::PolicyState state;
    state.values = {0.05, -0.1, 0.2, -0.3, 0.15, 0.0};
    const world::Action det = agent.sample_action(state, true);

    const int n = 10000;
    double mean_steer = 0.0, mean_throttle = 0.0;
    std::vector<double> steer_samples(n), throttle_samples(n);
    for (int i = 0; i < n; ++i) {
        const world::Action a = agent.sample_action(state, false);
        steer_samples[i] = a.steer_delta;
        throttle_samples[i] = a.throttle;
        mean_steer += a.steer_delta;
        mean_throttle += a.throttle;
    }
    mean_steer /= n;
    mean_throttle /= n;
    auto stderr_of = [&](const std::vector<double>& xs, double mean) {
        double var = 0.0;
        for (double x : xs) var += (x - mean) * (x - mean);
        return std::sqrt(var / (n - 1.0) / n);
    };
    CHECK(std::fabs(mean_steer - det.steer_delta) < 3.0 * stderr_of(steer_samples, mean_steer));
    CHECK(std::fabs(mean_throttle - det.throttle) <
          3.0 * stderr_of(throttle_samples, mean_throttle));
}

TEST_CASE("done transitions regress the critic to the raw reward") {
    SacConfig cfg = tiny_config(5);
    cfg.lr = 3e-3;
    SacAgent agent(cfg);
    agent.set_alpha(0.0, false);
    Rng rng(6);
    // identical done transitions with reward -10: the target is exactly -10
    std::vector<Transition> batch = random_batch(1, cfg.state_dim, rng, true, -10.0);
    std::vector<Transition> full;
    for (size_t i = 0; i < cfg.batch; ++i) full.push_back(batch[0]);

    rl::LossReport report;
    for (int it = 0; it < 2500; ++it) report = agent.update(full);
    CHECK(report.q1_loss < 1e-4);
    CHECK(report.q2_loss < 1e-4);

    // q(s, a) is now -10 up to regression error
    nn::Mat s(1, cfg.state_dim);
    std::copy(full[0].state.begin(), full[0].state.end(), s.row(0));
    nn::Mat a(1, 2);
    a.at(0, 0) = full[0].action.steer_delta;
    a.at(0, 1) = full[0].action.throttle;
    const auto ev = agent.critic_eval(agent.critic1_net(), s, a);
    CHECK(ev.q[0] == doctest::Approx(-10.0).epsilon(0.01));
}

TEST_CASE("gamma=0, alpha=0 critics fit deterministic rewards") {
    SacConfig cfg = tiny_config(7);
    cfg.gamma = 0.0;
    cfg.lr = 3e-3;
    SacAgent agent(cfg);
    agent.set_alpha(0.0, false);
    Rng rng(8);
    const std::vector<Transition> batch = random_batch(cfg.batch, cfg.state_dim, rng);
    rl::LossReport report;
    for (int it = 0; it < 4000; ++it) report = agent.update(batch);
    CHECK(report.q1_loss < 1e-3);
    CHECK(report.q2_loss < 1e-3);
}

TEST_CASE("critic gradients match finite differences") {
    SacConfig cfg = tiny_config(9);
    SacAgent agent(cfg);
    Rng rng(10);
    const size_t B = 6;
    const nn::Mat states = random_states(B, cfg.state_dim, rng);
    nn::Mat actions(B, 2);
    for (double& v : actions.data) v = rng.uniform(-1.0, 1.0);
    std::vector<double> y(B);
    for (double& v : y) v = rng.normal();

    auto loss_of = [&](const nn::Mlp& net) {
        auto ev = agent.critic_eval(net, states, actions);
        double loss = 0.0;
        for (size_t i = 0; i < B; ++i) {
            const double d = ev.q[i] - y[i];
            loss += d * d;
        }
        return loss / static_cast<double>(B);
    };

    nn::Mlp& q1 = agent.critic1_net();
    auto ev = agent.critic_eval(q1, states, actions);
    std::vector<double> dq(B);
    for (size_t i = 0; i < B; ++i) dq[i] = 2.0 * (ev.q[i] - y[i]) / static_cast<double>(B);
    q1.zero_grad();
    agent.critic_backward(q1, ev, dq, nullptr);
    std::vector<double> analytic;
    q1.get_grads(analytic);

    std::vector<double> params;
    q1.get_params(params);
    auto f = [&](const std::vector<double>& p) {
        nn::Mlp probe = q1;
        probe.set_params(p);
        return loss_of(probe);
    };
    const std::vector<double> numeric = nn::finite_difference(f, params, 1e-6);
    CHECK(max_rel_err(analytic, numeric) <= 1e-4);
}

TEST_CASE("actor gradients match finite differences") {
    SacConfig cfg = tiny_config(11);
    SacAgent agent(cfg);
    Rng rng(12);
    const size_t B = 6;
    const nn::Mat states = random_states(B, cfg.state_dim, rng);
    nn::Mat eps(B, 2);
    for (double& v : eps.data) v = rng.normal();
    const double alpha = 0.37;

    // actor loss with frozen critics and frozen Gaussian draws
    auto loss_with_actor = [&]() {
        auto sample = agent.actor_sample(states, eps);
        auto ev1 = agent.critic_eval(agent.critic1_net(), states, sample.actions);
        auto ev2 = agent.critic_eval(agent.critic2_net(), states, sample.actions);
        double loss = 0.0;
        for (size_t i = 0; i < B; ++i)
            loss += alpha * sample.logp[i] - std::fmin(ev1.q[i], ev2.q[i]);
        return loss / static_cast<double>(B);
    };

    auto sample = agent.actor_sample(states, eps);
    auto ev1 = agent.critic_eval(agent.critic1_net(), states, sample.actions);
    auto ev2 = agent.critic_eval(agent.critic2_net(), states, sample.actions);
    std::vector<double> dq1(B, 0.0), dq2(B, 0.0), d_logp(B, alpha / static_cast<double>(B));
    for (size_t i = 0; i < B; ++i) {
        if (ev1.q[i] <= ev2.q[i])
            dq1[i] = -1.0 / static_cast<double>(B);
        else
            dq2[i] = -1.0 / static_cast<double>(B);
    }
    nn::Mat da1, da2;
    agent.critic1_net().zero_grad();
    agent.critic2_net().zero_grad();
    agent.critic_backward(agent.critic1_net(), ev1, dq1, &da1);
    agent.critic_backward(agent.critic2_net(), ev2, dq2, &da2);
    nn::Mat d_actions(B, 2);
    for (size_t i = 0; i < d_actions.size(); ++i) d_actions.data[i] = da1.data[i] + da2.data[i];
    agent.actor_net().zero_grad();
    agent.actor_backward(sample, d_actions, d_logp);
    std::vector<double> analytic;
    agent.actor_net().get_grads(analytic);

    std::vector<double> params;
    agent.actor_net().get_params(params);
    auto f = [&](const std::vector<double>& p) {
        std::vector<double> saved;
        agent.actor_net().get_params(saved);
        agent.actor_net().set_params(p);
        const double loss = loss_with_actor();
        agent.actor_net().set_params(saved);
        return loss;
    };
    const std::vector<double> numeric = nn::finite_difference(f, params, 1e-6);
    CHECK(max_rel_err(analytic, numeric) <= 1e-4);
}

TEST_CASE("temperature gradient is the entropy residual") {
    // d/dlog_alpha of -log_alpha * (mean_logp + target) = -(mean_logp + target)
    SacConfig cfg = tiny_config(13);
    cfg.target_entropy = -2.0;
    SacAgent agent(cfg);
    Rng rng(14);
    const nn::Mat states = random_states(4, cfg.state_dim, rng);
    nn::Mat eps(4, 2);
    for (double& v : eps.data) v = rng.normal();
    const auto sample = agent.actor_sample(states, eps);
    double mean_logp = 0.0;
    for (double lp : sample.logp) mean_logp += lp;
    mean_logp /= 4.0;

    const double residual = mean_logp + cfg.target_entropy;
    auto loss = [&](double log_alpha) { return -log_alpha * residual; };
    const double h = 1e-6;
    const double numeric = (loss(0.1 + h) - loss(0.1 - h)) / (2 * h);
    CHECK(numeric == doctest::Approx(-residual).epsilon(1e-8));
}

TEST_CASE("target networks track the exponential moving average exactly") {
    SacConfig cfg = tiny_config(15);
    SacAgent agent(cfg);
    Rng rng(16);
    const std::vector<Transition> batch = random_batch(cfg.batch, cfg.state_dim, rng);

    // shadow EMA maintained outside the agent
    std::vector<double> shadow1, shadow2;
    agent.target1_net().get_params(shadow1);
    agent.target2_net().get_params(shadow2);

    for (int it = 0; it < 25; ++it) {
        agent.update(batch);
        std::vector<double> q1p, q2p;
        agent.critic1_net().get_params(q1p);
        agent.critic2_net().get_params(q2p);
        for (size_t i = 0; i < shadow1.size(); ++i) {
            shadow1[i] = (1.0 - cfg.tau) * shadow1[i] + cfg.tau * q1p[i];
            shadow2[i] = (1.0 - cfg.tau) * shadow2[i] + cfg.tau * q2p[i];
        }
    }
    std::vector<double> t1p, t2p;
    agent.target1_net().get_params(t1p);
    agent.target2_net().get_params(t2p);
    CHECK(t1p == shadow1);
    CHECK(t2p == shadow2);
}

TEST_CASE("checkpoints round-trip through disk") {
    SacAgent agent(tiny_config(17));
    Rng rng(18);
    const std::vector<Transition> batch = random_batch(8, 6, rng);
    for (int i = 0; i < 3; ++i) agent.update(batch);

    const auto path = std::filesystem::temp_directory_path() / "matchnav_agent_test.ckpt";
    agent.save(path.string());
    SacAgent loaded = SacAgent::load(path.string());

    repr::PolicyState state;
    state.values = {0.3, -0.3, 0.1, 0.9, -0.4, 0.2};
    const world::Action a = agent.sample_action(state, true);
    const world::Action b = loaded.sample_action(state, true);
    CHECK(a.steer_delta == b.steer_delta);
    CHECK(a.throttle == b.throttle);
    CHECK(loaded.alpha() == doctest::Approx(agent.alpha()));
}

TEST_CASE("zero budget leaves the agent untouched") {
    const demo::Demonstration& d = fixtures::demonstration();
    const reward::Tracker tracker(d, fixtures::config().reward);
    NavEnv::Config env_cfg{fixtures::robot_camera(), fixtures::config().scan,
                           fixtures::dynamics(),     fixtures::config().start_pose(),
                           0.25,                     0.12};
    NavEnv env(fixtures::world(), env_cfg);

    rl::SacConfig cfg = tiny_config(19);
    cfg.state_dim = 2 * static_cast<size_t>(fixtures::config().scan.beams) + 2;
    SacAgent agent(cfg);
    std::vector<double> before;
    agent.actor_net().get_params(before);

    rl::TrainConfig tcfg;
    tcfg.budget = 0;
    tcfg.mode = rl::ObsMode::scan;
    const rl::TrainResult result = rl::train(agent, env, tracker, nullptr, tcfg);
    CHECK(result.env_steps == 0);
    CHECK(result.episodes.empty());
    std::vector<double> after;
    agent.actor_net().get_params(after);
    CHECK(before == after);
}

TEST_CASE("training runs are reproducible under a fixed seed") {
    const demo::Demonstration& d = fixtures::demonstration();
    const reward::Tracker tracker(d, fixtures::config().reward);
    NavEnv::Config env_cfg{fixtures::robot_camera(), fixtures::config().scan,
                           fixtures::dynamics(),     fixtures::config().start_pose(),
                           0.25,                     0.12};

    auto run_once = [&]() {
        NavEnv env(fixtures::world(), env_cfg);
        rl::SacConfig cfg = tiny_config(20);
        cfg.state_dim = 2 * static_cast<size_t>(fixtures::config().scan.beams) + 2;
        cfg.batch = 16;
        cfg.buffer_capacity = 2000;
        SacAgent agent(cfg);
        rl::TrainConfig tcfg;
        tcfg.budget = 400;
        tcfg.warmup = 100;
        tcfg.step_cap = 60;
        tcfg.seed = 31337;
        tcfg.mode = rl::ObsMode::scan;
        return rl::train(agent, env, tracker, nullptr, tcfg);
    };
    const rl::TrainResult a = run_once();
    const rl::TrainResult b = run_once();
    REQUIRE(a.episodes.size() == b.episodes.size());
    for (size_t i = 0; i < a.episodes.size(); ++i) {
        CHECK(a.episodes[i].ret == b.episodes[i].ret);
        CHECK(a.episodes[i].steps == b.episodes[i].steps);
        CHECK(a.episodes[i].done_cause == b.episodes[i].done_cause);
    }
    CHECK(a.env_steps == 400);
}

TEST_CASE("episode rows serialize to JSON lines") {
    rl::EpisodeRow row;
    row.episode = 3;
    row.steps = 42;
    row.ret = -1.5;
    row.done_cause = "collision";
    const std::string line = rl::episode_json_line(row);
    CHECK(line.find("\"episode\":3") != std::string::npos);
    CHECK(line.find("\"done_cause\":\"collision\"") != std::string::npos);
}
