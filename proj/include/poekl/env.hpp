#pragma once

#include "poekl/gaussian.hpp"
#include "poekl/rng.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace poekl {

/// Deterministic point-mass environment: double integrator with drag on a
/// bounded workspace. Reward components per step are
/// (velocity along the first axis, -||action||^2, alive).
struct EnvConfig {
    size_t action_dim = 2;
    double dt = 0.05;
    double workspace_halfwidth = 5.0;
    size_t max_steps = 200;
    double drag = 0.1;
    bool terminate_on_exit = true;

    void validate() const {
        if (action_dim < 1) throw std::invalid_argument("EnvConfig: action_dim must be >= 1");
        if (!(dt > 0.0)) throw std::invalid_argument("EnvConfig: dt must be > 0");
        if (max_steps < 1) throw std::invalid_argument("EnvConfig: max_steps must be >= 1");
    }
};

struct Goal {
    std::array<double, 3> weights{};
    std::string id;

    double dot(const std::array<double, 3>& rc) const {
        return weights[0] * rc[0] + weights[1] * rc[1] + weights[2] * rc[2];
    }
};

struct EnvState {
    std::vector<double> pos;
    std::vector<double> vel;
    size_t t = 0;

    std::vector<double> flat() const {
        std::vector<double> x(pos);
        x.insert(x.end(), vel.begin(), vel.end());
        return x;
    }
};

inline EnvState env_reset(const EnvConfig& config, Rng& rng) {
    EnvState s;
    s.pos.assign(config.action_dim, 0.0);
    s.vel.assign(config.action_dim, 0.0);
    for (size_t i = 0; i < config.action_dim; ++i) {
        s.pos[i] = rng.uniform(-0.25, 0.25);
        s.vel[i] = rng.normal(0.0, 0.05);
    }
    s.t = 0;
    return s;
}

struct StepResult {
    EnvState next;
    std::array<double, 3> rc{};
    bool done = false;
};

inline StepResult env_step(const EnvConfig& config, const EnvState& state,
                           const std::vector<double>& action) {
    config.validate();
    if (action.size() != config.action_dim)
        throw std::invalid_argument("env_step: action dimension mismatch");
    for (double a : action)
        if (!std::isfinite(a)) throw std::invalid_argument("env_step: non-finite action");
    for (double x : state.pos)
        if (!std::isfinite(x)) throw std::invalid_argument("env_step: non-finite state");

    StepResult out;
    out.next = state;
    double ctrl = 0.0;
    for (size_t i = 0; i < config.action_dim; ++i) {
        out.next.vel[i] = (1.0 - config.drag) * state.vel[i] + config.dt * action[i];
        out.next.pos[i] = state.pos[i] + config.dt * out.next.vel[i];
        ctrl += action[i] * action[i];
    }
    out.next.t = state.t + 1;
    // alive counts the step just survived, including the exit step
    out.rc = {out.next.vel[0], -ctrl, 1.0};
    bool exited = false;
    if (config.terminate_on_exit)
        for (double x : out.next.pos)
            if (std::abs(x) > config.workspace_halfwidth) exited = true;
    out.done = exited || out.next.t >= config.max_steps;
    return out;
}

/// Per-axis linear-Gaussian controller: mean_i = kp_i*pos_i + kv_i*vel_i + b_i,
/// diagonal stddev exp(log_std_i). The parameter vector layout (kp, kv, b,
/// log_std) is what the prior-degradation variants perturb.
struct LinearGaussianPolicy {
    std::vector<double> kp, kv, b, log_std;

    size_t dim() const { return kp.size(); }

    DiagGaussian dist(const EnvState& s) const {
        const size_t n = dim();
        std::vector<double> mean(n), var(n);
        for (size_t i = 0; i < n; ++i) {
            mean[i] = kp[i] * s.pos[i] + kv[i] * s.vel[i] + b[i];
            const double sd = std::exp(log_std[i]);
            var[i] = sd * sd;
        }
        return DiagGaussian{std::move(mean), std::move(var)};
    }

    std::vector<double>& param_block(int which) {
        switch (which) {
        case 0: return kp;
        case 1: return kv;
        case 2: return b;
        default: return log_std;
        }
    }
};

/// State-conditional Gaussian policy abstraction used by the rollout engine.
using GaussianPolicyFn = std::function<DiagGaussian(const EnvState&)>;

enum class PriorKind { trained, undertrained, noisy, random };

/// Feedforward gain of the analytic controllers; calibrated together with the
/// stddevs below so the composed-policy KL curve straddles the KL budgets.
constexpr double kSpeedGain = 1.1;

namespace detail {

/// Goal-dependent target forward speed: heavier forward weight asks for more
/// speed, heavier control weight damps it.
inline double target_speed(const Goal& goal) {
    const double g_f = std::abs(goal.weights[0]);
    const double g_c = std::abs(goal.weights[1]);
    const double g_a = std::abs(goal.weights[2]);
    const double z = g_f + g_c + g_a;
    if (z == 0.0) return 0.0;
    return g_f / z; // in [0,1], units of workspace per second
}

inline LinearGaussianPolicy trained_controller(const Goal& goal, size_t dim, double log_std) {
    LinearGaussianPolicy p;
    p.kp.assign(dim, 0.0);
    p.kv.assign(dim, -2.0);
    p.b.assign(dim, 0.0);
    p.log_std.assign(dim, log_std);
    const double v_star = target_speed(goal);
    // first axis tracks the target speed (steady-state forward velocity is
    // b/4 under kv=-2, dt=0.05, drag=0.1), lateral axes damp toward center
    p.b[0] = kSpeedGain * v_star;
    for (size_t i = 1; i < dim; ++i) p.kp[i] = -1.0;
    return p;
}

inline LinearGaussianPolicy random_controller(size_t dim, Rng& rng) {
    LinearGaussianPolicy p;
    p.kp.resize(dim);
    p.kv.resize(dim);
    p.b.resize(dim);
    p.log_std.assign(dim, 0.0); // std 1: a random prior is low-precision
    for (size_t i = 0; i < dim; ++i) {
        p.kp[i] = rng.normal(0.0, 1.0);
        p.kv[i] = rng.normal(0.0, 1.0);
        p.b[i] = rng.normal(0.0, 1.0);
    }
    return p;
}

} // namespace detail

constexpr double kTrainedPriorLogStd = -1.139434283188365; // log(0.32)
constexpr double kActorLogStd = -0.798507696217772;        // log(0.45)

/// The frozen actor of the fixture: the trained controller for the behavior
/// goal, with a wider stddev than the deployment priors.
inline LinearGaussianPolicy make_actor(const EnvConfig& config) {
    Goal behavior{{0.5, 0.5, 0.5}, "behavior"};
    return detail::trained_controller(behavior, config.action_dim, kActorLogStd);
}

/// Prior families for the degradation study. All parameters are deterministic
/// functions of (kind, goal, seed).
inline LinearGaussianPolicy make_prior(PriorKind kind, const Goal& goal, const EnvConfig& config,
                                       uint64_t seed, double sigma = 0.05) {
    const size_t dim = config.action_dim;
    switch (kind) {
    case PriorKind::trained:
        return detail::trained_controller(goal, dim, kTrainedPriorLogStd);
    case PriorKind::random: {
        Rng rng(Rng::derive(seed, 0x72616E64ULL)); // "rand"
        return detail::random_controller(dim, rng);
    }
    case PriorKind::undertrained: {
        // parameter-space midpoint between trained and a seeded random draw
        LinearGaussianPolicy t = detail::trained_controller(goal, dim, kTrainedPriorLogStd);
        Rng rng(Rng::derive(seed, 0x756E6465ULL)); // "unde"
        LinearGaussianPolicy r = detail::random_controller(dim, rng);
        for (int blk = 0; blk < 4; ++blk) {
            auto& tb = t.param_block(blk);
            auto& rb = r.param_block(blk);
            for (size_t i = 0; i < dim; ++i) tb[i] = 0.5 * tb[i] + 0.5 * rb[i];
        }
        return t;
    }
    case PriorKind::noisy: {
        if (!(sigma > 0.0)) throw std::invalid_argument("make_prior: noisy sigma must be > 0");
        LinearGaussianPolicy t = detail::trained_controller(goal, dim, kTrainedPriorLogStd);
        Rng rng(Rng::derive(seed, 0x6E6F6973ULL)); // "nois"
        for (int blk = 0; blk < 4; ++blk) {
            auto& tb = t.param_block(blk);
            for (size_t i = 0; i < dim; ++i) tb[i] += rng.normal(0.0, sigma);
        }
        return t;
    }
    }
    throw std::invalid_argument("make_prior: invalid kind");
}

inline const char* prior_kind_name(PriorKind k) {
    switch (k) {
    case PriorKind::trained: return "trained";
    case PriorKind::undertrained: return "undertrained";
    case PriorKind::noisy: return "noisy";
    case PriorKind::random: return "random";
    }
    return "?";
}

} // namespace poekl
