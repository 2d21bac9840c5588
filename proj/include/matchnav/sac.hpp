#ifndef MATCHNAV_SAC_HPP
#define MATCHNAV_SAC_HPP

#include <span>
#include <string>
#include <vector>

#include "matchnav/autoencoder.hpp"
#include "matchnav/nn.hpp"
#include "matchnav/world.hpp"

namespace matchnav::rl {

/// One step of experience. done marks true terminals only; time-limit
/// truncations keep done = false so the bootstrap target survives.
struct Transition {
    std::vector<double> state;
    world::Action action;
    double reward = 0.0;
    std::vector<double> next_state;
    bool done = false;
};

/// Uniform-sampling ring buffer.
class ReplayBuffer {
public:
    explicit ReplayBuffer(size_t capacity);

    void push(Transition t);
    size_t size() const { return store_.size(); }
    size_t capacity() const { return capacity_; }
    long long inserted() const { return inserted_; }
    const Transition& get(size_t i) const { return store_[i]; }

    std::vector<size_t> sample_indices(size_t count, Rng& rng) const;

private:
    size_t capacity_;
    size_t write_ = 0;
    long long inserted_ = 0;
    std::vector<Transition> store_;
};

struct SacConfig {
    size_t state_dim = 0;
    size_t action_dim = 2; // (steer_delta, throttle)
    size_t hidden = 256;
    int hidden_layers = 3;
    double lr = 3e-4;
    double gamma = 0.99;
    double tau = 0.005;
    size_t batch = 256;
    size_t buffer_capacity = 100000;
    bool auto_alpha = true;
    double target_entropy = -2.0;
    double init_alpha = 0.2;
    double log_std_min = -20.0;
    double log_std_max = 2.0;
    uint64_t seed = 0;
};

struct LossReport {
    double q1_loss = 0.0;
    double q2_loss = 0.0;
    double actor_loss = 0.0;
    double alpha_loss = 0.0;
    double alpha = 0.0;
    double mean_logp = 0.0;
};

/// Soft actor-critic with a tanh-squashed Gaussian policy, twin critics and
/// polyak-averaged targets. All gradients are hand-derived; the
/// finite-difference suite in the tests pins them down.
class SacAgent {
public:
    explicit SacAgent(const SacConfig& cfg);

    const SacConfig& config() const { return cfg_; }
    double alpha() const;

    /// Squash the actor output into action bounds. Deterministic mode
    /// returns the squashed mean; stochastic mode samples the Gaussian
    /// first. Throws "actor-diverged" on non-finite network output.
    world::Action sample_action(const repr::PolicyState& state, bool deterministic);

    /// One gradient step on both critics, the actor, and (optionally) the
    /// entropy temperature, then target smoothing.
    LossReport update(std::span<const Transition> batch);

    void save(const std::string& path) const;
    static SacAgent load(const std::string& path);

    // --- pieces exposed for the gradient-check and unit suites ---

    struct ActorSample {
        nn::Mat actions;          // bounded actions, B x A
        std::vector<double> logp; // per-row log-probability
        nn::Mat eps;              // the Gaussian draws used
        nn::Mlp::Cache cache;
        nn::Mat pre_tanh;         // u
        nn::Mat mean;
        nn::Mat log_std;          // after clamping
        nn::Mat log_std_raw;
    };
    /// Reparametrized sample at fixed Gaussian noise.
    ActorSample actor_sample(const nn::Mat& states, const nn::Mat& eps) const;
    /// Accumulates actor parameter gradients given d(actions) and the
    /// per-row coefficient on d(logp).
    void actor_backward(ActorSample& sample, const nn::Mat& d_actions,
                        const std::vector<double>& d_logp);

    /// Critic evaluation (rows of q) with caches for backward.
    struct CriticEval {
        std::vector<double> q;
        nn::Mat input; // [state, action]
        nn::Mlp::Cache cache;
    };
    CriticEval critic_eval(const nn::Mlp& net, const nn::Mat& states, const nn::Mat& actions) const;
    /// Backward through a critic; optionally returns d(actions).
    void critic_backward(nn::Mlp& net, CriticEval& eval, const std::vector<double>& dq,
                         nn::Mat* d_actions) const;

    nn::Mlp& actor_net() { return actor_; }
    nn::Mlp& critic1_net() { return q1_; }
    nn::Mlp& critic2_net() { return q2_; }
    const nn::Mlp& target1_net() const { return t1_; }
    const nn::Mlp& target2_net() const { return t2_; }
    double log_alpha() const { return log_alpha_; }
    void set_alpha(double alpha, bool auto_tune);
    Rng& rng() { return rng_; }

    nn::Mat states_to_mat(std::span<const Transition> batch, bool next) const;

private:
    SacConfig cfg_;
    nn::Mlp actor_, q1_, q2_, t1_, t2_;
    nn::Adam actor_opt_, q1_opt_, q2_opt_, alpha_opt_;
    double log_alpha_ = 0.0;
    Rng rng_;

    void polyak(nn::Mlp& target, const nn::Mlp& online);
    void adam_step(nn::Mlp& net, nn::Adam& opt);
};

} // namespace matchnav::rl

#endif
