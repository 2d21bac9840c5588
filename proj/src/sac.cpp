#include "matchnav/sac.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace matchnav::rl {

namespace {

constexpr double kLogSqrt2Pi = 0.91893853320467274178; // 0.5 * log(2*pi)
constexpr double kSquashEps = 1e-9;

// Per-component action bounds: a = center + scale * tanh(u).
struct Bound {
    double center, scale;
};

Bound bound_for(size_t k) {
    return k == 0 ? Bound{0.0, 1.0} : Bound{0.5, 0.5}; // steer in [-1,1], throttle in [0,1]
}

constexpr uint32_t kAgentMagic = 0x4d4e5341; // "MNSA"
constexpr uint32_t kAgentVersion = 1;

void write_vec(std::ofstream& out, const std::vector<double>& v) {
    const uint64_t n = v.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

std::vector<double> read_vec(std::ifstream& in) {
    uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    std::vector<double> v(n);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    return v;
}

} // namespace

ReplayBuffer::ReplayBuffer(size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw Error("bad-config", "replay capacity must be positive");
    store_.reserve(std::min<size_t>(capacity, 1 << 16));
}

void ReplayBuffer::push(Transition t) {
    if (store_.size() < capacity_) {
        store_.push_back(std::move(t));
    } else {
        store_[write_] = std::move(t);
    }
    write_ = (write_ + 1) % capacity_;
    ++inserted_;
}

std::vector<size_t> ReplayBuffer::sample_indices(size_t count, Rng& rng) const {
    if (store_.empty()) throw Error("bad-config", "sampling from an empty replay buffer");
    std::vector<size_t> idx(count);
    for (size_t i = 0; i < count; ++i) idx[i] = rng.below(store_.size());
    return idx;
}

SacAgent::SacAgent(const SacConfig& cfg) : cfg_(cfg), rng_(hash_mix(cfg.seed, 0x5ac)) {
    if (cfg_.state_dim == 0) throw Error("bad-config", "state_dim must be set");
    Rng init_rng(hash_mix(cfg.seed, 0x1417));

    std::vector<size_t> actor_dims{cfg_.state_dim};
    std::vector<size_t> critic_dims{cfg_.state_dim + cfg_.action_dim};
    for (int i = 0; i < cfg_.hidden_layers; ++i) {
        actor_dims.push_back(cfg_.hidden);
        critic_dims.push_back(cfg_.hidden);
    }
    actor_dims.push_back(2 * cfg_.action_dim);
    critic_dims.push_back(1);

    // A small head keeps the initial policy near zero-mean / unit-std.
    actor_ = nn::Mlp(actor_dims, init_rng, 0.01);
    q1_ = nn::Mlp(critic_dims, init_rng);
    q2_ = nn::Mlp(critic_dims, init_rng);
    t1_ = q1_;
    t2_ = q2_;

    actor_opt_ = nn::Adam(actor_.param_count(), cfg_.lr);
    q1_opt_ = nn::Adam(q1_.param_count(), cfg_.lr);
    q2_opt_ = nn::Adam(q2_.param_count(), cfg_.lr);
    alpha_opt_ = nn::Adam(1, cfg_.lr);
    log_alpha_ = std::log(cfg_.init_alpha);
}

double SacAgent::alpha() const { return std::exp(log_alpha_); }

void SacAgent::set_alpha(double alpha, bool auto_tune) {
    if (alpha <= 0.0) {
        // Exact zero temperature: used by fit-to-constant diagnostics.
        log_alpha_ = -745.0; // exp underflows to 0
    } else {
        log_alpha_ = std::log(alpha);
    }
    cfg_.auto_alpha = auto_tune;
}

SacAgent::ActorSample SacAgent::actor_sample(const nn::Mat& states, const nn::Mat& eps) const {
    ActorSample s;
    s.eps = eps;
    const nn::Mat& out = actor_.forward(states, s.cache);
    const size_t B = states.rows;
    const size_t A = cfg_.action_dim;

    s.mean = nn::Mat(B, A);
    s.log_std_raw = nn::Mat(B, A);
    s.log_std = nn::Mat(B, A);
    s.pre_tanh = nn::Mat(B, A);
    s.actions = nn::Mat(B, A);
    s.logp.assign(B, 0.0);

    for (size_t i = 0; i < B; ++i) {
        for (size_t k = 0; k < A; ++k) {
            const double mu = out.at(i, k);
            const double ls_raw = out.at(i, A + k);
            const double ls = std::clamp(ls_raw, cfg_.log_std_min, cfg_.log_std_max);
            const double sigma = std::exp(ls);
            const double u = mu + sigma * eps.at(i, k);
            const double th = std::tanh(u);
            const Bound bd = bound_for(k);

            s.mean.at(i, k) = mu;
            s.log_std_raw.at(i, k) = ls_raw;
            s.log_std.at(i, k) = ls;
            s.pre_tanh.at(i, k) = u;
            s.actions.at(i, k) = bd.center + bd.scale * th;

            const double e = eps.at(i, k);
            s.logp[i] += -0.5 * e * e - ls - kLogSqrt2Pi -
                         std::log(1.0 - th * th + kSquashEps) - std::log(bd.scale);
        }
    }
    return s;
}

void SacAgent::actor_backward(ActorSample& s, const nn::Mat& d_actions,
                              const std::vector<double>& d_logp) {
    const size_t B = s.actions.rows;
    const size_t A = cfg_.action_dim;
    nn::Mat d_out(B, 2 * A);

    for (size_t i = 0; i < B; ++i) {
        for (size_t k = 0; k < A; ++k) {
            const double th = std::tanh(s.pre_tanh.at(i, k));
            const double one_m = 1.0 - th * th;
            const Bound bd = bound_for(k);
            const double sigma = std::exp(s.log_std.at(i, k));
            const double e = s.eps.at(i, k);

            // du collects the action path and the squash-correction path.
            double du = d_actions.at(i, k) * bd.scale * one_m;
            du += d_logp[i] * (2.0 * th * one_m / (one_m + kSquashEps));

            double d_mu = du;
            double d_ls = du * sigma * e - d_logp[i]; // -1 from the -log_std term
            // clamp gate
            const double ls_raw = s.log_std_raw.at(i, k);
            if (ls_raw <= cfg_.log_std_min || ls_raw >= cfg_.log_std_max) d_ls = 0.0;

            d_out.at(i, k) = d_mu;
            d_out.at(i, A + k) = d_ls;
        }
    }
    actor_.backward(s.cache, d_out, nullptr);
}

SacAgent::CriticEval SacAgent::critic_eval(const nn::Mlp& net, const nn::Mat& states,
                                           const nn::Mat& actions) const {
    CriticEval ev;
    const size_t B = states.rows;
    ev.input = nn::Mat(B, cfg_.state_dim + cfg_.action_dim);
    for (size_t i = 0; i < B; ++i) {
        double* row = ev.input.row(i);
        const double* st = states.row(i);
        std::copy(st, st + cfg_.state_dim, row);
        const double* ac = actions.row(i);
        std::copy(ac, ac + cfg_.action_dim, row + cfg_.state_dim);
    }
    const nn::Mat& out = net.forward(ev.input, ev.cache);
    ev.q.resize(B);
    for (size_t i = 0; i < B; ++i) ev.q[i] = out.at(i, 0);
    return ev;
}

void SacAgent::critic_backward(nn::Mlp& net, CriticEval& ev, const std::vector<double>& dq,
                               nn::Mat* d_actions) const {
    const size_t B = ev.q.size();
    nn::Mat d_out(B, 1);
    for (size_t i = 0; i < B; ++i) d_out.at(i, 0) = dq[i];
    nn::Mat d_input;
    net.backward(ev.cache, d_out, d_actions ? &d_input : nullptr);
    if (d_actions) {
        *d_actions = nn::Mat(B, cfg_.action_dim);
        for (size_t i = 0; i < B; ++i)
            for (size_t k = 0; k < cfg_.action_dim; ++k)
                d_actions->at(i, k) = d_input.at(i, cfg_.state_dim + k);
    }
}

world::Action SacAgent::sample_action(const repr::PolicyState& state, bool deterministic) {
    if (state.size() != cfg_.state_dim)
        throw Error("bad-config", "policy state dim " + std::to_string(state.size()) +
                                      " does not match the actor input " +
                                      std::to_string(cfg_.state_dim));
    nn::Mat s(1, cfg_.state_dim);
    s.data.assign(state.values.begin(), state.values.end());
    nn::Mat eps(1, cfg_.action_dim);
    if (!deterministic)
        for (double& e : eps.data) e = rng_.normal();

    const ActorSample sample = actor_sample(s, eps);
    world::Action a;
    a.steer_delta = sample.actions.at(0, 0);
    a.throttle = sample.actions.at(0, 1);
    if (!std::isfinite(a.steer_delta) || !std::isfinite(a.throttle))
        throw Error("actor-diverged", "actor produced a non-finite action");
    return a;
}

nn::Mat SacAgent::states_to_mat(std::span<const Transition> batch, bool next) const {
    nn::Mat m(batch.size(), cfg_.state_dim);
    for (size_t i = 0; i < batch.size(); ++i) {
        const std::vector<double>& src = next ? batch[i].next_state : batch[i].state;
        if (src.size() != cfg_.state_dim)
            throw Error("bad-config", "transition state dim mismatch");
        std::copy(src.begin(), src.end(), m.row(i));
    }
    return m;
}

void SacAgent::polyak(nn::Mlp& target, const nn::Mlp& online) {
    for (size_t l = 0; l < target.layers().size(); ++l) {
        nn::Linear& t = target.layers()[l];
        const nn::Linear& o = online.layers()[l];
        for (size_t i = 0; i < t.w.size(); ++i)
            t.w.data[i] = (1.0 - cfg_.tau) * t.w.data[i] + cfg_.tau * o.w.data[i];
        for (size_t i = 0; i < t.b.size(); ++i)
            t.b[i] = (1.0 - cfg_.tau) * t.b[i] + cfg_.tau * o.b[i];
    }
}

void SacAgent::adam_step(nn::Mlp& net, nn::Adam& opt) {
    std::vector<double> params, grads;
    net.get_params(params);
    net.get_grads(grads);
    opt.step(params, grads);
    net.set_params(params);
}

LossReport SacAgent::update(std::span<const Transition> batch) {
    if (batch.empty()) throw Error("bad-config", "update needs a non-empty batch");
    const size_t B = batch.size();
    const size_t A = cfg_.action_dim;
    const double alpha_v = alpha();
    LossReport report;
    report.alpha = alpha_v;

    const nn::Mat states = states_to_mat(batch, false);
    const nn::Mat next_states = states_to_mat(batch, true);
    nn::Mat actions(B, A);
    for (size_t i = 0; i < B; ++i) {
        actions.at(i, 0) = batch[i].action.steer_delta;
        actions.at(i, 1) = batch[i].action.throttle;
    }

    // critic targets from the target networks and a fresh next action
    nn::Mat eps2(B, A);
    for (double& e : eps2.data) e = rng_.normal();
    const ActorSample next_sample = actor_sample(next_states, eps2);
    const CriticEval tq1 = critic_eval(t1_, next_states, next_sample.actions);
    const CriticEval tq2 = critic_eval(t2_, next_states, next_sample.actions);

    std::vector<double> y(B);
    for (size_t i = 0; i < B; ++i) {
        const double qmin = std::min(tq1.q[i], tq2.q[i]);
        const double bootstrap = batch[i].done ? 0.0 : cfg_.gamma * (qmin - alpha_v * next_sample.logp[i]);
        y[i] = batch[i].reward + bootstrap;
    }

    // critic regression
    auto critic_step = [&](nn::Mlp& net, nn::Adam& opt, const char* name) {
        CriticEval ev = critic_eval(net, states, actions);
        std::vector<double> dq(B);
        double loss = 0.0;
        for (size_t i = 0; i < B; ++i) {
            const double diff = ev.q[i] - y[i];
            loss += diff * diff;
            dq[i] = 2.0 * diff / static_cast<double>(B);
        }
        loss /= static_cast<double>(B);
        if (!std::isfinite(loss))
            throw Error("loss-diverged", std::string(name) + " loss is non-finite");
        net.zero_grad();
        critic_backward(net, ev, dq, nullptr);
        adam_step(net, opt);
        return loss;
    };
    report.q1_loss = critic_step(q1_, q1_opt_, "critic-1");
    report.q2_loss = critic_step(q2_, q2_opt_, "critic-2");

    // actor step: maximize min-Q minus entropy cost
    nn::Mat eps(B, A);
    for (double& e : eps.data) e = rng_.normal();
    ActorSample cur = actor_sample(states, eps);
    CriticEval aq1 = critic_eval(q1_, states, cur.actions);
    CriticEval aq2 = critic_eval(q2_, states, cur.actions);

    double actor_loss = 0.0, mean_logp = 0.0;
    std::vector<double> dq1(B, 0.0), dq2(B, 0.0), d_logp(B, 0.0);
    for (size_t i = 0; i < B; ++i) {
        const double qmin = std::min(aq1.q[i], aq2.q[i]);
        actor_loss += alpha_v * cur.logp[i] - qmin;
        mean_logp += cur.logp[i];
        if (aq1.q[i] <= aq2.q[i])
            dq1[i] = -1.0 / static_cast<double>(B);
        else
            dq2[i] = -1.0 / static_cast<double>(B);
        d_logp[i] = alpha_v / static_cast<double>(B);
    }
    actor_loss /= static_cast<double>(B);
    mean_logp /= static_cast<double>(B);
    report.actor_loss = actor_loss;
    report.mean_logp = mean_logp;
    if (!std::isfinite(actor_loss)) throw Error("loss-diverged", "actor loss is non-finite");

    nn::Mat d_a1, d_a2;
    q1_.zero_grad();
    q2_.zero_grad();
    critic_backward(q1_, aq1, dq1, &d_a1);
    critic_backward(q2_, aq2, dq2, &d_a2);
    q1_.zero_grad(); // critics only mediate gradient flow to the actions here
    q2_.zero_grad();

    nn::Mat d_actions(B, A);
    for (size_t i = 0; i < B * A; ++i) d_actions.data[i] = d_a1.data[i] + d_a2.data[i];
    actor_.zero_grad();
    actor_backward(cur, d_actions, d_logp);
    adam_step(actor_, actor_opt_);

    // temperature step toward the target entropy
    if (cfg_.auto_alpha) {
        const double residual = mean_logp + cfg_.target_entropy;
        report.alpha_loss = -log_alpha_ * residual;
        std::vector<double> la{log_alpha_};
        std::vector<double> gla{-residual};
        alpha_opt_.step(la, gla);
        log_alpha_ = la[0];
        report.alpha = alpha();
    }

    polyak(t1_, q1_);
    polyak(t2_, q2_);
    return report;
}

void SacAgent::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("io-error", "cannot write checkpoint " + path);
    out.write(reinterpret_cast<const char*>(&kAgentMagic), sizeof(kAgentMagic));
    out.write(reinterpret_cast<const char*>(&kAgentVersion), sizeof(kAgentVersion));
    out.write(reinterpret_cast<const char*>(&cfg_), sizeof(cfg_));
    std::vector<double> v;
    for (const nn::Mlp* net : {&actor_, &q1_, &q2_, &t1_, &t2_}) {
        net->get_params(v);
        write_vec(out, v);
    }
    out.write(reinterpret_cast<const char*>(&log_alpha_), sizeof(log_alpha_));
    for (const nn::Adam* opt : {&actor_opt_, &q1_opt_, &q2_opt_, &alpha_opt_}) {
        out.write(reinterpret_cast<const char*>(&opt->t_), sizeof(opt->t_));
        write_vec(out, opt->m_);
        write_vec(out, opt->v_);
    }
    if (!out) throw Error("io-error", "short write to checkpoint " + path);
}

SacAgent SacAgent::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io-error", "cannot open checkpoint " + path);
    uint32_t magic = 0, version = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof(magic));
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (!in || magic != kAgentMagic) throw Error("io-error", path + " is not an agent checkpoint");
    if (version != kAgentVersion)
        throw Error("io-error", path + " has unsupported checkpoint version");
    SacConfig cfg;
    in.read(reinterpret_cast<char*>(&cfg), sizeof(cfg));
    SacAgent agent(cfg);
    std::vector<double> v;
    for (nn::Mlp* net : {&agent.actor_, &agent.q1_, &agent.q2_, &agent.t1_, &agent.t2_}) {
        v = read_vec(in);
        net->set_params(v);
    }
    in.read(reinterpret_cast<char*>(&agent.log_alpha_), sizeof(agent.log_alpha_));
    for (nn::Adam* opt : {&agent.actor_opt_, &agent.q1_opt_, &agent.q2_opt_, &agent.alpha_opt_}) {
        in.read(reinterpret_cast<char*>(&opt->t_), sizeof(opt->t_));
        opt->m_ = read_vec(in);
        opt->v_ = read_vec(in);
    }
    if (!in) throw Error("io-error", path + ": truncated checkpoint");
    return agent;
}

} // namespace matchnav::rl
