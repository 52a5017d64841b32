#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace poekl {

/// Probability mass function over a fixed finite action set.
struct FinitePolicy {
    std::vector<double> probs;

    FinitePolicy() = default;
    explicit FinitePolicy(std::vector<double> p) : probs(std::move(p)) { validate(); }

    size_t size() const { return probs.size(); }

    void validate() const {
        if (probs.empty()) throw std::invalid_argument("FinitePolicy: empty");
        double s = 0.0;
        for (double p : probs) {
            if (p < 0.0) throw std::invalid_argument("FinitePolicy: negative mass");
            s += p;
        }
        if (std::abs(s - 1.0) > 1e-10)
            throw std::invalid_argument("FinitePolicy: does not sum to 1");
    }
};

struct EmptySupportError : std::runtime_error {
    EmptySupportError() : std::runtime_error("empty effective support: no action with actor>0 and prior>0") {}
};

inline void check_same_size(const FinitePolicy& a, const FinitePolicy& b) {
    if (a.size() != b.size()) throw std::invalid_argument("action-set size mismatch");
}

/// Index set where both actor and prior place positive mass.
inline std::vector<size_t> effective_support(const FinitePolicy& actor, const FinitePolicy& prior) {
    check_same_size(actor, prior);
    std::vector<size_t> gamma;
    for (size_t a = 0; a < actor.size(); ++a)
        if (actor.probs[a] > 0.0 && prior.probs[a] > 0.0) gamma.push_back(a);
    return gamma;
}

/// Multiplicative composition actor^alpha * prior^(1-alpha), normalized over
/// the effective support. Computed in log space with max subtraction; mass is
/// exactly zero outside the support for every alpha > 0.
inline FinitePolicy poe_finite(const FinitePolicy& actor, const FinitePolicy& prior, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0))
        throw std::invalid_argument("poe_finite: alpha must be in (0,1]");
    const auto gamma = effective_support(actor, prior);
    if (gamma.empty()) throw EmptySupportError{};

    std::vector<double> logw(gamma.size());
    double maxw = -std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < gamma.size(); ++k) {
        const size_t a = gamma[k];
        logw[k] = alpha * std::log(actor.probs[a]) + (1.0 - alpha) * std::log(prior.probs[a]);
        maxw = std::max(maxw, logw[k]);
    }
    double z = 0.0;
    for (double lw : logw) z += std::exp(lw - maxw);
    std::vector<double> out(actor.size(), 0.0);
    for (size_t k = 0; k < gamma.size(); ++k)
        out[gamma[k]] = std::exp(logw[k] - maxw) / z;
    return FinitePolicy{std::move(out)};
}

constexpr double kInfeasible = -std::numeric_limits<double>::infinity();

/// Entropy-regularized attraction objective
///   F(p) = sum_a p_a (alpha log actor_a + (1-alpha) log prior_a) - sum_a p_a log p_a,
/// with 0 log 0 := 0. Mass outside the effective support makes the objective
/// -infinity; that sentinel is returned directly.
inline double variational_value(const FinitePolicy& candidate, const FinitePolicy& actor,
                                const FinitePolicy& prior, double alpha) {
    check_same_size(candidate, actor);
    check_same_size(candidate, prior);
    double f = 0.0;
    for (size_t a = 0; a < candidate.size(); ++a) {
        const double p = candidate.probs[a];
        if (p == 0.0) continue;
        if (actor.probs[a] == 0.0 || prior.probs[a] == 0.0) return kInfeasible;
        f += p * (alpha * std::log(actor.probs[a]) + (1.0 - alpha) * std::log(prior.probs[a]));
        f -= p * std::log(p);
    }
    return f;
}

/// alpha KL(candidate||actor) + (1-alpha) KL(candidate||prior). Equals
/// -variational_value on the feasible set.
inline double weighted_kl_value(const FinitePolicy& candidate, const FinitePolicy& actor,
                                const FinitePolicy& prior, double alpha) {
    const double f = variational_value(candidate, actor, prior, alpha);
    if (f == kInfeasible) return std::numeric_limits<double>::infinity();
    return -f;
}

/// Exhaustive simplex-grid maximizer of the variational objective, restricted
/// to the effective support. Intended as an oracle for small action sets;
/// tie-break is first in lexicographic enumeration order.
inline FinitePolicy brute_force_barycenter(const FinitePolicy& actor, const FinitePolicy& prior,
                                           double alpha, double grid_step) {
    check_same_size(actor, prior);
    if (actor.size() > 5) throw std::invalid_argument("brute_force_barycenter: action set too large");
    if (!(grid_step > 0.0 && grid_step <= 0.1))
        throw std::invalid_argument("brute_force_barycenter: grid_step must be in (0, 0.1]");
    const auto gamma = effective_support(actor, prior);
    if (gamma.empty()) throw EmptySupportError{};

    const size_t m = gamma.size();
    const long n = std::lround(1.0 / grid_step);
    std::vector<double> cand(actor.size(), 0.0);
    FinitePolicy best;
    double best_f = kInfeasible;

    // enumerate all compositions of n into m parts, lexicographic
    const auto eval = [&](const std::vector<long>& c) {
        std::fill(cand.begin(), cand.end(), 0.0);
        for (size_t k = 0; k < m; ++k)
            cand[gamma[k]] = static_cast<double>(c[k]) / static_cast<double>(n);
        FinitePolicy fp;
        fp.probs = cand;
        const double f = variational_value(fp, actor, prior, alpha);
        if (f > best_f) {
            best_f = f;
            best = fp;
        }
    };
    // Nijenhuis-Wilf composition enumeration, starting at (n,0,...,0)
    std::vector<long> c(m, 0);
    c[0] = n;
    while (true) {
        eval(c);
        if (m == 1) break;
        const long t = c[m - 1];
        long j = static_cast<long>(m) - 2;
        while (j >= 0 && c[j] == 0) --j;
        if (j < 0) break;
        c[j] -= 1;
        c[j + 1] = t + 1;
        for (size_t k = j + 2; k < m; ++k) c[k] = 0;
    }
    return best;
}

/// Total variation distance 1/2 sum |p - q|.
inline double tv_distance(const FinitePolicy& p, const FinitePolicy& q) {
    check_same_size(p, q);
    double s = 0.0;
    for (size_t a = 0; a < p.size(); ++a) s += std::abs(p.probs[a] - q.probs[a]);
    return 0.5 * s;
}

/// KL(p || q) for finite pmfs; infinity if p puts mass where q has none.
inline double finite_kl(const FinitePolicy& p, const FinitePolicy& q) {
    check_same_size(p, q);
    double kl = 0.0;
    for (size_t a = 0; a < p.size(); ++a) {
        if (p.probs[a] == 0.0) continue;
        if (q.probs[a] == 0.0) return std::numeric_limits<double>::infinity();
        kl += p.probs[a] * std::log(p.probs[a] / q.probs[a]);
    }
    return std::max(0.0, kl);
}

} // namespace poekl
