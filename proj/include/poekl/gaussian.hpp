#pragma once

#include "poekl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace poekl {

/// Diagonal Gaussian over an action vector: per-dimension mean and variance.
struct DiagGaussian {
    std::vector<double> mean;
    std::vector<double> var;

    DiagGaussian() = default;
    DiagGaussian(std::vector<double> m, std::vector<double> v)
        : mean(std::move(m)), var(std::move(v)) {
        validate();
    }

    size_t dim() const { return mean.size(); }

    void validate() const {
        if (mean.empty() || mean.size() != var.size())
            throw std::invalid_argument("DiagGaussian: mean/var must be nonempty and equal length");
        for (double v : var)
            if (!(v > 0.0)) throw std::invalid_argument("DiagGaussian: variance must be positive");
    }

    double log_density(const std::vector<double>& x) const {
        if (x.size() != dim()) throw std::invalid_argument("log_density: dimension mismatch");
        double lp = 0.0;
        for (size_t i = 0; i < dim(); ++i) {
            const double d = x[i] - mean[i];
            lp += -0.5 * (std::log(2.0 * std::numbers::pi * var[i]) + d * d / var[i]);
        }
        return lp;
    }
};

inline void check_same_dim(const DiagGaussian& a, const DiagGaussian& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
    a.validate();
    b.validate();
}

/// Precision-weighted combination with weight w on the actor and (1-w) on the
/// prior. Shared by the PoE and KL-Reg deterministic action paths so that the
/// two parameterizations run through identical float operations.
inline DiagGaussian precision_weighted(const DiagGaussian& actor, const DiagGaussian& prior,
                                       double w) {
    const size_t n = actor.dim();
    std::vector<double> mean(n), var(n);
    for (size_t i = 0; i < n; ++i) {
        const double pa = 1.0 / actor.var[i];
        const double pp = 1.0 / prior.var[i];
        const double prec = w * pa + (1.0 - w) * pp;
        var[i] = 1.0 / prec;
        mean[i] = var[i] * (w * pa * actor.mean[i] + (1.0 - w) * pp * prior.mean[i]);
    }
    return DiagGaussian{std::move(mean), std::move(var)};
}

/// PoE composition: precision is the alpha-convex combination of the input
/// precisions. Endpoints return exact copies (the beta map is singular there).
inline DiagGaussian poe_compose(const DiagGaussian& actor, const DiagGaussian& prior,
                                double alpha) {
    check_same_dim(actor, prior);
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw std::invalid_argument("poe_compose: alpha outside [0,1]");
    if (alpha == 1.0) return actor;
    if (alpha == 0.0) return prior;
    return precision_weighted(actor, prior, alpha);
}

/// KL-regularized update: precision beta/actor.var + 1/prior.var.
inline DiagGaussian klreg_compose(const DiagGaussian& actor, const DiagGaussian& prior,
                                  double beta) {
    check_same_dim(actor, prior);
    if (!(beta > 0.0)) throw std::invalid_argument("klreg_compose: beta must be > 0");
    const size_t n = actor.dim();
    std::vector<double> mean(n), var(n);
    for (size_t i = 0; i < n; ++i) {
        const double pa = 1.0 / actor.var[i];
        const double pp = 1.0 / prior.var[i];
        const double prec = beta * pa + pp;
        var[i] = 1.0 / prec;
        mean[i] = var[i] * (beta * pa * actor.mean[i] + pp * prior.mean[i]);
    }
    return DiagGaussian{std::move(mean), std::move(var)};
}

inline double alpha_to_beta(double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("alpha_to_beta: alpha must be in (0,1)");
    return alpha / (1.0 - alpha);
}

inline double beta_to_alpha(double beta) {
    if (!(beta > 0.0)) throw std::invalid_argument("beta_to_alpha: beta must be > 0");
    return beta / (1.0 + beta);
}

struct EquivalenceRecord {
    double alpha = 0.0;
    double beta = 0.0;
    double max_mean_abs_diff = 0.0;
    double variance_identity_residual = 0.0; // relative
};

/// Compares the PoE and matched KL-Reg closed forms on one (actor, prior) pair.
inline EquivalenceRecord equivalence_audit(const DiagGaussian& actor, const DiagGaussian& prior,
                                           double alpha) {
    const double beta = alpha_to_beta(alpha);
    const DiagGaussian poe = poe_compose(actor, prior, alpha);
    const DiagGaussian kl = klreg_compose(actor, prior, beta);
    EquivalenceRecord rec;
    rec.alpha = alpha;
    rec.beta = beta;
    for (size_t i = 0; i < poe.dim(); ++i) {
        rec.max_mean_abs_diff = std::max(rec.max_mean_abs_diff, std::abs(poe.mean[i] - kl.mean[i]));
        const double res = std::abs(poe.var[i] - (1.0 + beta) * kl.var[i]) / poe.var[i];
        rec.variance_identity_residual = std::max(rec.variance_identity_residual, res);
    }
    return rec;
}

/// Mean-and-std interpolation baseline: lambda = 0 is the actor, 1 the prior.
inline DiagGaussian additive_mix(const DiagGaussian& actor, const DiagGaussian& prior,
                                 double lambda) {
    check_same_dim(actor, prior);
    if (!(lambda >= 0.0 && lambda <= 1.0))
        throw std::invalid_argument("additive_mix: lambda outside [0,1]");
    const size_t n = actor.dim();
    std::vector<double> mean(n), var(n);
    for (size_t i = 0; i < n; ++i) {
        mean[i] = (1.0 - lambda) * actor.mean[i] + lambda * prior.mean[i];
        const double sd = (1.0 - lambda) * std::sqrt(actor.var[i]) + lambda * std::sqrt(prior.var[i]);
        var[i] = sd * sd;
    }
    return DiagGaussian{std::move(mean), std::move(var)};
}

/// KL(p || q) in nats, closed form for diagonal Gaussians.
inline double gaussian_kl(const DiagGaussian& p, const DiagGaussian& q) {
    check_same_dim(p, q);
    double kl = 0.0;
    for (size_t i = 0; i < p.dim(); ++i) {
        const double d = p.mean[i] - q.mean[i];
        kl += 0.5 * (p.var[i] / q.var[i] + d * d / q.var[i] - 1.0 + std::log(q.var[i] / p.var[i]));
    }
    return std::max(0.0, kl);
}

/// 2-Wasserstein distance; for diagonal Gaussians
/// W2^2 = ||mu_p - mu_q||^2 + sum_i (sigma_p,i - sigma_q,i)^2.
inline double gaussian_w2(const DiagGaussian& p, const DiagGaussian& q) {
    check_same_dim(p, q);
    double s = 0.0;
    for (size_t i = 0; i < p.dim(); ++i) {
        const double dm = p.mean[i] - q.mean[i];
        const double ds = std::sqrt(p.var[i]) - std::sqrt(q.var[i]);
        s += dm * dm + ds * ds;
    }
    return std::sqrt(s);
}

/// TV <= min(1, sqrt(KL/2)).
inline double pinsker_tv_bound(double kl) {
    if (kl < 0.0) throw std::invalid_argument("pinsker_tv_bound: negative KL");
    return std::min(1.0, std::sqrt(0.5 * kl));
}

/// Monte Carlo total-variation estimate with mixture sampling:
/// TV(p,q) = E_{x ~ (p+q)/2} [ |p(x)-q(x)| / (p(x)+q(x)) ], estimated by the
/// sample mean. Unbiased, bounded in [0,1], deterministic for a fixed seed.
inline double mc_tv_estimate(const DiagGaussian& p, const DiagGaussian& q, size_t n_samples,
                             uint64_t seed) {
    check_same_dim(p, q);
    if (n_samples < 1) throw std::invalid_argument("mc_tv_estimate: n_samples must be >= 1");
    Rng rng(seed);
    const size_t d = p.dim();
    std::vector<double> x(d);
    double acc = 0.0;
    for (size_t k = 0; k < n_samples; ++k) {
        const DiagGaussian& comp = (rng.uniform() < 0.5) ? p : q;
        for (size_t i = 0; i < d; ++i)
            x[i] = rng.normal(comp.mean[i], std::sqrt(comp.var[i]));
        const double lp = p.log_density(x);
        const double lq = q.log_density(x);
        // |p-q|/(p+q) = |1-e^t|/(1+e^t) with t = lq-lp, evaluated stably
        const double t = lq - lp;
        const double e = std::exp(-std::abs(t));
        acc += (1.0 - e) / (1.0 + e);
    }
    return acc / static_cast<double>(n_samples);
}

} // namespace poekl
