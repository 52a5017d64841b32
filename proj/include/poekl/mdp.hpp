#pragma once

#include "poekl/finite.hpp"
#include "poekl/rng.hpp"

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace poekl {

using Goal3 = std::array<double, 3>;

/// Explicit finite MDP with a three-component reward channel. The scalar
/// reward in use is always the goal-weighted contraction g . rc(s,a).
struct TabularMdp {
    size_t n_states = 0;
    size_t n_actions = 0;
    // transition[s][a] is a row-stochastic vector over next states
    std::vector<std::vector<std::vector<double>>> transition;
    // components[s][a] is the 3-vector (forward, control, alive analogs)
    std::vector<std::vector<Goal3>> components;
    double gamma = 0.0;
    std::vector<double> initial_dist;

    void validate() const {
        if (n_states == 0 || n_actions == 0) throw std::invalid_argument("TabularMdp: empty");
        if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("TabularMdp: gamma outside (0,1)");
        if (transition.size() != n_states || components.size() != n_states ||
            initial_dist.size() != n_states)
            throw std::invalid_argument("TabularMdp: shape mismatch");
        double mu_sum = 0.0;
        for (double p : initial_dist) {
            if (p < 0.0) throw std::invalid_argument("TabularMdp: negative initial mass");
            mu_sum += p;
        }
        if (std::abs(mu_sum - 1.0) > 1e-10)
            throw std::invalid_argument("TabularMdp: initial_dist does not sum to 1");
        for (size_t s = 0; s < n_states; ++s) {
            if (transition[s].size() != n_actions || components[s].size() != n_actions)
                throw std::invalid_argument("TabularMdp: shape mismatch");
            for (size_t a = 0; a < n_actions; ++a) {
                if (transition[s][a].size() != n_states)
                    throw std::invalid_argument("TabularMdp: shape mismatch");
                double row = 0.0;
                for (double p : transition[s][a]) {
                    if (p < 0.0) throw std::invalid_argument("TabularMdp: negative transition mass");
                    row += p;
                }
                if (std::abs(row - 1.0) > 1e-10)
                    throw std::invalid_argument("TabularMdp: transition row does not sum to 1");
            }
        }
    }

    double reward(size_t s, size_t a, const Goal3& goal) const {
        const Goal3& rc = components[s][a];
        return goal[0] * rc[0] + goal[1] * rc[1] + goal[2] * rc[2];
    }
};

/// Stationary stochastic policy pi[s][a].
struct TabularPolicy {
    std::vector<std::vector<double>> probs;

    size_t n_states() const { return probs.size(); }

    void validate(size_t n_actions) const {
        for (const auto& row : probs) {
            if (row.size() != n_actions) throw std::invalid_argument("TabularPolicy: shape mismatch");
            double s = 0.0;
            for (double p : row) {
                if (p < 0.0) throw std::invalid_argument("TabularPolicy: negative mass");
                s += p;
            }
            if (std::abs(s - 1.0) > 1e-10)
                throw std::invalid_argument("TabularPolicy: row does not sum to 1");
        }
    }

    FinitePolicy row(size_t s) const { return FinitePolicy{probs[s]}; }
};

struct ValueBundle {
    std::vector<double> V;
    std::vector<std::vector<double>> Q;
    std::vector<std::vector<double>> A;
};

namespace detail {
inline Eigen::MatrixXd policy_kernel(const TabularMdp& mdp, const TabularPolicy& pi) {
    Eigen::MatrixXd P(mdp.n_states, mdp.n_states);
    P.setZero();
    for (size_t s = 0; s < mdp.n_states; ++s)
        for (size_t a = 0; a < mdp.n_actions; ++a)
            for (size_t s2 = 0; s2 < mdp.n_states; ++s2)
                P(s, s2) += pi.probs[s][a] * mdp.transition[s][a][s2];
    return P;
}
} // namespace detail

/// Exact policy evaluation: direct solve of (I - gamma P_pi) V = r_pi, then a
/// one-step backup for Q and A = Q - V.
inline ValueBundle solve_values(const TabularMdp& mdp, const TabularPolicy& policy,
                                const Goal3& goal) {
    mdp.validate();
    policy.validate(mdp.n_actions);
    const size_t S = mdp.n_states, A = mdp.n_actions;
    const Eigen::MatrixXd P = detail::policy_kernel(mdp, policy);
    Eigen::VectorXd r(S);
    for (size_t s = 0; s < S; ++s) {
        double rs = 0.0;
        for (size_t a = 0; a < A; ++a) rs += policy.probs[s][a] * mdp.reward(s, a, goal);
        r(s) = rs;
    }
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - mdp.gamma * P;
    const Eigen::VectorXd V = M.partialPivLu().solve(r);

    ValueBundle out;
    out.V.assign(V.data(), V.data() + S);
    out.Q.assign(S, std::vector<double>(A, 0.0));
    out.A.assign(S, std::vector<double>(A, 0.0));
    for (size_t s = 0; s < S; ++s)
        for (size_t a = 0; a < A; ++a) {
            double q = mdp.reward(s, a, goal);
            for (size_t s2 = 0; s2 < S; ++s2) q += mdp.gamma * mdp.transition[s][a][s2] * V(s2);
            out.Q[s][a] = q;
            out.A[s][a] = q - out.V[s];
        }
    return out;
}

/// Normalized discounted state occupancy: solves d = (1-gamma) mu + gamma P_pi^T d.
inline std::vector<double> discounted_occupancy(const TabularMdp& mdp, const TabularPolicy& policy) {
    mdp.validate();
    policy.validate(mdp.n_actions);
    const size_t S = mdp.n_states;
    const Eigen::MatrixXd P = detail::policy_kernel(mdp, policy);
    Eigen::VectorXd mu(S);
    for (size_t s = 0; s < S; ++s) mu(s) = mdp.initial_dist[s];
    const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(S, S) - mdp.gamma * P.transpose();
    const Eigen::VectorXd d = M.partialPivLu().solve((1.0 - mdp.gamma) * mu);
    return std::vector<double>(d.data(), d.data() + S);
}

inline double exact_return(const TabularMdp& mdp, const TabularPolicy& policy, const Goal3& goal) {
    const ValueBundle vb = solve_values(mdp, policy, goal);
    double j = 0.0;
    for (size_t s = 0; s < mdp.n_states; ++s) j += mdp.initial_dist[s] * vb.V[s];
    return j;
}

/// Residual of the performance difference identity
/// J(pi') - J(pi) = 1/(1-gamma) E_{s~d^{pi'}} E_{a~pi'} [A^pi(s,a)].
inline double pdl_check(const TabularMdp& mdp, const TabularPolicy& pi,
                        const TabularPolicy& pi_prime, const Goal3& goal) {
    const double lhs = exact_return(mdp, pi_prime, goal) - exact_return(mdp, pi, goal);
    const ValueBundle vb = solve_values(mdp, pi, goal);
    const std::vector<double> d = discounted_occupancy(mdp, pi_prime);
    double adv = 0.0;
    for (size_t s = 0; s < mdp.n_states; ++s)
        for (size_t a = 0; a < mdp.n_actions; ++a)
            adv += d[s] * pi_prime.probs[s][a] * vb.A[s][a];
    return std::abs(lhs - adv / (1.0 - mdp.gamma));
}

inline double max_policy_tv(const TabularPolicy& p, const TabularPolicy& q) {
    double m = 0.0;
    for (size_t s = 0; s < p.n_states(); ++s)
        m = std::max(m, tv_distance(p.row(s), q.row(s)));
    return m;
}

struct BoundCheck {
    double lhs = 0.0;
    double rhs = 0.0;
    bool holds() const { return lhs <= rhs + 1e-12; }
};

/// Occupancy perturbation bound ||d^{pi'} - d^pi||_1 <= 2 gamma/(1-gamma) * max_s TV.
inline BoundCheck occupancy_bound_check(const TabularMdp& mdp, const TabularPolicy& pi,
                                        const TabularPolicy& pi_prime) {
    const auto d = discounted_occupancy(mdp, pi);
    const auto dp = discounted_occupancy(mdp, pi_prime);
    double l1 = 0.0;
    for (size_t s = 0; s < mdp.n_states; ++s) l1 += std::abs(dp[s] - d[s]);
    BoundCheck bc;
    bc.lhs = l1;
    bc.rhs = (2.0 * mdp.gamma / (1.0 - mdp.gamma)) * max_policy_tv(pi, pi_prime);
    return bc;
}

struct KernelShiftCheck {
    double eps_p = 0.0;
    BoundCheck occupancy;
    BoundCheck ret;
};

/// Transition-shift robustness: occupancy and return gaps between two MDPs
/// that differ only in their kernels, against the 2 gamma eps_P/(1-gamma) and
/// 2 gamma R_max eps_P/(1-gamma)^2 bounds.
inline KernelShiftCheck kernel_shift_bound_check(const TabularMdp& train, const TabularMdp& deploy,
                                                 const TabularPolicy& policy, const Goal3& goal) {
    if (train.n_states != deploy.n_states || train.n_actions != deploy.n_actions ||
        train.gamma != deploy.gamma || train.initial_dist != deploy.initial_dist ||
        train.components != deploy.components)
        throw std::invalid_argument("kernel_shift_bound_check: MDPs must differ only in kernels");

    KernelShiftCheck out;
    for (size_t s = 0; s < train.n_states; ++s)
        for (size_t a = 0; a < train.n_actions; ++a) {
            double tv = 0.0;
            for (size_t s2 = 0; s2 < train.n_states; ++s2)
                tv += std::abs(train.transition[s][a][s2] - deploy.transition[s][a][s2]);
            out.eps_p = std::max(out.eps_p, 0.5 * tv);
        }

    const auto d_train = discounted_occupancy(train, policy);
    const auto d_deploy = discounted_occupancy(deploy, policy);
    double l1 = 0.0;
    for (size_t s = 0; s < train.n_states; ++s) l1 += std::abs(d_deploy[s] - d_train[s]);
    out.occupancy.lhs = l1;
    out.occupancy.rhs = 2.0 * train.gamma * out.eps_p / (1.0 - train.gamma);

    double r_max = 0.0;
    for (size_t s = 0; s < train.n_states; ++s)
        for (size_t a = 0; a < train.n_actions; ++a)
            r_max = std::max(r_max, std::abs(train.reward(s, a, goal)));
    out.ret.lhs = std::abs(exact_return(deploy, policy, goal) - exact_return(train, policy, goal));
    out.ret.rhs = 2.0 * train.gamma * r_max * out.eps_p / ((1.0 - train.gamma) * (1.0 - train.gamma));
    return out;
}

struct Corollary4Check {
    double deploy_improvement = 0.0; // J_deploy(refined) - J_deploy(actor)
    double train_rhs = 0.0;          // Theorem-2 RHS on the training MDP
    double transfer_penalty = 0.0;   // 4 gamma R_max eps_P / (1-gamma)^2
    bool holds() const { return deploy_improvement >= train_rhs - transfer_penalty - 1e-12; }
};

struct CpiDiagnostic {
    double lhs = 0.0;          // J(refined) - J(actor)
    double gain_term = 0.0;    // E_{s~d^actor} [ E_{a~refined} A^actor(s,a) ]
    double penalty_coeff = 0.0;
    double eps_a = 0.0;
    double delta_pi = 0.0;
    double rhs = 0.0;
    bool improvement_flag = false; // sufficient-condition check: gain dominates penalty
};

inline double cpi_penalty_coeff(double gamma) {
    return 2.0 * gamma / ((1.0 - gamma) * (1.0 - gamma));
}

/// Conservative-improvement decomposition on exact tabular quantities.
inline CpiDiagnostic cpi_diagnostic(const TabularMdp& mdp, const TabularPolicy& actor,
                                    const TabularPolicy& refined, const Goal3& goal) {
    const ValueBundle vb = solve_values(mdp, actor, goal);
    const auto d = discounted_occupancy(mdp, actor);
    CpiDiagnostic out;
    for (size_t s = 0; s < mdp.n_states; ++s) {
        double abar = 0.0;
        for (size_t a = 0; a < mdp.n_actions; ++a)
            abar += refined.probs[s][a] * vb.A[s][a];
        out.gain_term += d[s] * abar;
        out.eps_a = std::max(out.eps_a, std::abs(abar));
    }
    out.delta_pi = max_policy_tv(refined, actor);
    out.penalty_coeff = cpi_penalty_coeff(mdp.gamma);
    out.rhs = out.gain_term / (1.0 - mdp.gamma) - out.penalty_coeff * out.eps_a * out.delta_pi;
    out.lhs = exact_return(mdp, refined, goal) - exact_return(mdp, actor, goal);
    out.improvement_flag =
        out.gain_term > (2.0 * mdp.gamma / (1.0 - mdp.gamma)) * out.eps_a * out.delta_pi;
    return out;
}

/// Composite transfer bound: the refined policy's deploy-side improvement is
/// lower-bounded by the train-side conservative-improvement RHS minus the
/// kernel-shift transfer penalty 4 gamma R_max eps_P / (1-gamma)^2.
inline Corollary4Check corollary4_check(const TabularMdp& train, const TabularMdp& deploy,
                                        const TabularPolicy& actor, const TabularPolicy& refined,
                                        const Goal3& goal) {
    const KernelShiftCheck shift = kernel_shift_bound_check(train, deploy, actor, goal);
    const CpiDiagnostic cpi = cpi_diagnostic(train, actor, refined, goal);
    double r_max = 0.0;
    for (size_t s = 0; s < train.n_states; ++s)
        for (size_t a = 0; a < train.n_actions; ++a)
            r_max = std::max(r_max, std::abs(train.reward(s, a, goal)));
    Corollary4Check out;
    out.deploy_improvement =
        exact_return(deploy, refined, goal) - exact_return(deploy, actor, goal);
    out.train_rhs = cpi.rhs;
    out.transfer_penalty = 4.0 * train.gamma * r_max * shift.eps_p /
                           ((1.0 - train.gamma) * (1.0 - train.gamma));
    return out;
}

/// Seeded random instance family: Dirichlet(1) transition rows (normalized
/// exponentials), reward components uniform in [-1,1], uniform initial state.
inline TabularMdp random_mdp(size_t n_states, size_t n_actions, double gamma, Rng& rng) {
    TabularMdp mdp;
    mdp.n_states = n_states;
    mdp.n_actions = n_actions;
    mdp.gamma = gamma;
    mdp.initial_dist.assign(n_states, 1.0 / static_cast<double>(n_states));
    mdp.transition.assign(n_states, std::vector<std::vector<double>>(n_actions));
    mdp.components.assign(n_states, std::vector<Goal3>(n_actions));
    for (size_t s = 0; s < n_states; ++s)
        for (size_t a = 0; a < n_actions; ++a) {
            auto& row = mdp.transition[s][a];
            row.assign(n_states, 0.0);
            double z = 0.0;
            for (size_t s2 = 0; s2 < n_states; ++s2) {
                row[s2] = rng.exponential();
                z += row[s2];
            }
            for (double& p : row) p /= z;
            for (double& c : mdp.components[s][a]) c = rng.uniform(-1.0, 1.0);
        }
    // renormalize rows exactly against accumulated rounding
    for (auto& per_a : mdp.transition)
        for (auto& row : per_a) {
            double z = 0.0;
            for (double p : row) z += p;
            for (double& p : row) p /= z;
        }
    return mdp;
}

inline TabularPolicy random_policy(size_t n_states, size_t n_actions, Rng& rng) {
    TabularPolicy pi;
    pi.probs.assign(n_states, std::vector<double>(n_actions, 0.0));
    for (auto& row : pi.probs) {
        double z = 0.0;
        for (double& p : row) {
            p = rng.exponential();
            z += p;
        }
        for (double& p : row) p /= z;
        // second pass keeps the sum at 1 within validation tolerance
        z = 0.0;
        for (double p : row) z += p;
        for (double& p : row) p /= z;
    }
    return pi;
}

} // namespace poekl
