#pragma once

#include "poekl/env.hpp"
#include "poekl/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace poekl {

struct Transition {
    std::vector<double> state;      // (pos, vel) flattened
    std::vector<double> action;
    std::array<double, 3> rc{};
    std::vector<double> next_state;
    bool done = false;
};

/// Offline dataset: seeded stochastic rollouts of a behavior policy, episodes
/// reset on termination.
inline std::vector<Transition> behavior_dataset(const EnvConfig& config,
                                                const GaussianPolicyFn& behavior,
                                                size_t n_transitions, uint64_t seed) {
    config.validate();
    if (n_transitions < 1) throw std::invalid_argument("behavior_dataset: n_transitions must be >= 1");
    Rng rng(Rng::derive(seed, 0x64617461ULL)); // "data"
    std::vector<Transition> out;
    out.reserve(n_transitions);
    EnvState s = env_reset(config, rng);
    while (out.size() < n_transitions) {
        const DiagGaussian d = behavior(s);
        std::vector<double> a(d.dim());
        for (size_t i = 0; i < d.dim(); ++i)
            a[i] = rng.normal(d.mean[i], std::sqrt(d.var[i]));
        const StepResult step = env_step(config, s, a);
        Transition tr;
        tr.state = s.flat();
        tr.action = a;
        tr.rc = step.rc;
        tr.next_state = step.next.flat();
        tr.done = step.done;
        out.push_back(std::move(tr));
        if (step.done)
            s = env_reset(config, rng);
        else
            s = step.next;
    }
    return out;
}

/// Fixed quadratic feature map. psi(s,a) = [1, pos, vel, a, pos^2, vel^2, a^2]
/// and phi(s,a,g) = g (x) psi, so Q is linear in the goal by construction,
/// matching the goal-weighted reward structure.
struct FeatureSpec {
    size_t action_dim = 2;
    std::string id = "quad-v1";

    size_t psi_dim() const { return 1 + 6 * action_dim; }
    size_t dim() const { return 3 * psi_dim(); }

    void psi(const std::vector<double>& state, const std::vector<double>& action,
             std::vector<double>& out) const {
        const size_t d = action_dim;
        out.resize(psi_dim());
        size_t k = 0;
        out[k++] = 1.0;
        for (size_t i = 0; i < d; ++i) out[k++] = state[i];          // pos
        for (size_t i = 0; i < d; ++i) out[k++] = state[d + i];      // vel
        for (size_t i = 0; i < d; ++i) out[k++] = action[i];
        for (size_t i = 0; i < d; ++i) out[k++] = state[i] * state[i];
        for (size_t i = 0; i < d; ++i) out[k++] = state[d + i] * state[d + i];
        for (size_t i = 0; i < d; ++i) out[k++] = action[i] * action[i];
    }

    void phi(const std::vector<double>& state, const std::vector<double>& action,
             const std::array<double, 3>& goal, std::vector<double>& out) const {
        std::vector<double> p;
        psi(state, action, p);
        out.resize(dim());
        for (size_t c = 0; c < 3; ++c)
            for (size_t j = 0; j < p.size(); ++j) out[c * p.size() + j] = goal[c] * p[j];
    }
};

struct LinearCritic {
    FeatureSpec spec;
    std::vector<double> weights;

    double value(const std::vector<double>& state, const std::vector<double>& action,
                 const std::array<double, 3>& goal) const {
        std::vector<double> f;
        spec.phi(state, action, goal, f);
        double v = 0.0;
        for (size_t i = 0; i < f.size(); ++i) v += weights[i] * f[i];
        return v;
    }

    /// Analytic gradient of Q with respect to the action.
    std::vector<double> action_gradient(const std::vector<double>& state,
                                        const std::vector<double>& action,
                                        const std::array<double, 3>& goal) const {
        const size_t d = spec.action_dim;
        const size_t pd = spec.psi_dim();
        // psi layout offsets: action block at 1+2d, action^2 block at 1+5d
        const size_t a_off = 1 + 2 * d;
        const size_t a2_off = 1 + 5 * d;
        std::vector<double> grad(d, 0.0);
        for (size_t i = 0; i < d; ++i)
            for (size_t c = 0; c < 3; ++c)
                grad[i] += goal[c] * (weights[c * pd + a_off + i] +
                                      2.0 * action[i] * weights[c * pd + a2_off + i]);
        return grad;
    }
};

/// Goal sampling mixture for critic training: 50% flat simplex, 30%
/// concentrated simplex, 20% uniform over the configured deployment goals.
struct GoalSampler {
    std::vector<Goal> deployment_goals;

    std::array<double, 3> sample(Rng& rng) const {
        const double u = rng.uniform();
        std::array<double, 3> g{};
        if (u < 0.5) {
            double z = 0.0;
            for (double& gi : g) {
                gi = rng.exponential(); // Dirichlet(1,1,1)
                z += gi;
            }
            for (double& gi : g) gi /= z;
        } else if (u < 0.8) {
            double z = 0.0;
            for (double& gi : g) {
                const double n = rng.normal();
                gi = 0.5 * n * n; // Gamma(1/2) -> Dirichlet(1/2,...)
                z += gi;
            }
            if (z == 0.0) return sample(rng);
            for (double& gi : g) gi /= z;
        } else {
            g = deployment_goals[rng.uniform_int(deployment_goals.size())].weights;
        }
        return g;
    }
};

struct FqeResult {
    LinearCritic critic;
    std::vector<double> td_residuals; // RMS TD error per epoch
};

/// Iterative least-squares fitted-Q evaluation. Each epoch samples one goal
/// per transition, solves the ridge-regularized normal equations against the
/// Polyak target's one-step TD values, then moves the target toward the
/// solution by polyak_tau.
inline FqeResult fqe_train(const std::vector<Transition>& dataset, const FeatureSpec& spec,
                           const GoalSampler& goals, size_t epochs, double gamma,
                           double polyak_tau, const GaussianPolicyFn& actor, uint64_t seed,
                           double ridge = 1e-6) {
    if (dataset.empty()) throw std::invalid_argument("fqe_train: empty dataset");
    const size_t K = spec.dim();
    const size_t N = dataset.size();
    const size_t d = spec.action_dim;
    Rng rng(Rng::derive(seed, 0x66716520ULL)); // "fqe "

    // precompute actor mean action at s'
    std::vector<std::vector<double>> next_actions(N);
    for (size_t i = 0; i < N; ++i) {
        EnvState ns;
        ns.pos.assign(dataset[i].next_state.begin(), dataset[i].next_state.begin() + d);
        ns.vel.assign(dataset[i].next_state.begin() + d, dataset[i].next_state.end());
        next_actions[i] = actor(ns).mean;
    }

    Eigen::VectorXd w = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd w_target = Eigen::VectorXd::Zero(K);
    FqeResult out;
    out.critic.spec = spec;
    std::vector<double> f, fn;
    Eigen::MatrixXd Phi(N, K), PhiNext(N, K);
    Eigen::VectorXd y(N);

    for (size_t epoch = 0; epoch < epochs; ++epoch) {
        for (size_t i = 0; i < N; ++i) {
            const std::array<double, 3> g = goals.sample(rng);
            spec.phi(dataset[i].state, dataset[i].action, g, f);
            spec.phi(dataset[i].next_state, next_actions[i], g, fn);
            for (size_t k = 0; k < K; ++k) {
                Phi(i, k) = f[k];
                PhiNext(i, k) = dataset[i].done ? 0.0 : fn[k];
            }
            const double r = g[0] * dataset[i].rc[0] + g[1] * dataset[i].rc[1] + g[2] * dataset[i].rc[2];
            y(i) = r;
        }
        const Eigen::VectorXd target = y + gamma * (PhiNext * w_target);
        const Eigen::MatrixXd A =
            Phi.transpose() * Phi + ridge * Eigen::MatrixXd::Identity(K, K);
        w = A.ldlt().solve(Phi.transpose() * target);
        w_target += polyak_tau * (w - w_target);

        const Eigen::VectorXd resid = Phi * w - target;
        out.td_residuals.push_back(std::sqrt(resid.squaredNorm() / static_cast<double>(N)));
    }
    out.critic.weights.assign(w.data(), w.data() + K);
    return out;
}

/// First-order advantage-weighted mean shift: per dimension
/// clamp(var_i/beta * dQ/da_i, +-clip) added to the actor mean.
inline std::vector<double> awr_step(const DiagGaussian& actor_at_state, const LinearCritic& critic,
                                    const EnvState& state, const Goal& goal, double beta,
                                    double clip) {
    if (!(beta > 0.0)) throw std::invalid_argument("awr_step: beta must be > 0");
    if (!(clip > 0.0)) throw std::invalid_argument("awr_step: clip must be > 0");
    const std::vector<double> s = state.flat();
    const std::vector<double> grad =
        critic.action_gradient(s, actor_at_state.mean, goal.weights);
    std::vector<double> a(actor_at_state.dim());
    for (size_t i = 0; i < a.size(); ++i) {
        const double shift = actor_at_state.var[i] / beta * grad[i];
        if (!std::isfinite(shift)) throw std::runtime_error("awr_step: non-finite gradient");
        a[i] = actor_at_state.mean[i] + std::clamp(shift, -clip, clip);
    }
    return a;
}

struct RiskRates {
    double cat_pct = 0.0;
    double con_pct = 0.0;
    double rob = 0.0;
};

namespace detail {
inline double percentile(std::vector<double> v, double pct) {
    std::sort(v.begin(), v.end());
    const double idx = pct / 100.0 * static_cast<double>(v.size() - 1);
    const size_t lo = static_cast<size_t>(idx);
    const size_t hi = std::min(lo + 1, v.size() - 1);
    const double frac = idx - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}
} // namespace detail

/// Quantile-threshold risk rates: thresholds are the 10th/5th percentile of
/// critic scores on dataset actions; rates are the fraction of policy actions
/// scoring below each. Rob = 1 - Cat% - 0.5 Con%.
inline RiskRates quantile_risk(const std::function<std::vector<double>(const EnvState&)>& policy,
                               const LinearCritic& critic, const std::vector<Transition>& dataset,
                               const Goal& goal, double cat_percentile = 10.0,
                               double con_percentile = 5.0) {
    if (dataset.empty()) throw std::invalid_argument("quantile_risk: empty dataset");
    const size_t d = critic.spec.action_dim;
    std::vector<double> data_q;
    data_q.reserve(dataset.size());
    for (const auto& tr : dataset)
        data_q.push_back(critic.value(tr.state, tr.action, goal.weights));
    const double tau_cat = detail::percentile(data_q, cat_percentile);
    const double tau_con = detail::percentile(data_q, con_percentile);

    size_t n_cat = 0, n_con = 0;
    for (const auto& tr : dataset) {
        EnvState s;
        s.pos.assign(tr.state.begin(), tr.state.begin() + d);
        s.vel.assign(tr.state.begin() + d, tr.state.end());
        const std::vector<double> a = policy(s);
        const double q = critic.value(tr.state, a, goal.weights);
        if (q < tau_cat) ++n_cat;
        if (q < tau_con) ++n_con;
    }
    RiskRates out;
    out.cat_pct = static_cast<double>(n_cat) / static_cast<double>(dataset.size());
    out.con_pct = static_cast<double>(n_con) / static_cast<double>(dataset.size());
    out.rob = 1.0 - out.cat_pct - 0.5 * out.con_pct;
    return out;
}

} // namespace poekl
