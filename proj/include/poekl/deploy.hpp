#pragma once

#include "poekl/critic.hpp"
#include "poekl/env.hpp"
#include "poekl/gaussian.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace poekl {

enum class MethodKind { frozen, prior_only, additive, poe, klreg, awr };

struct MethodSpec {
    MethodKind kind = MethodKind::frozen;
    double param = 0.0; // alpha / beta / lambda depending on kind
    double clip = 1.0;  // awr only

    std::string id() const {
        char buf[64];
        switch (kind) {
        case MethodKind::frozen: return "frozen";
        case MethodKind::prior_only: return "prior_only";
        case MethodKind::additive: std::snprintf(buf, sizeof buf, "additive_%.3f", param); return buf;
        case MethodKind::poe: std::snprintf(buf, sizeof buf, "poe_%.3f", param); return buf;
        case MethodKind::klreg: std::snprintf(buf, sizeof buf, "klreg_%.3f", param); return buf;
        case MethodKind::awr: std::snprintf(buf, sizeof buf, "awr_%.3f", param); return buf;
        }
        return "?";
    }
};

/// Deterministic per-state action rule plus a per-state KL-from-actor
/// reporter (each method's own covariance convention).
struct ActionRule {
    std::function<std::vector<double>(const EnvState&)> act;
    std::function<double(const EnvState&)> kl_from_actor;
};

/// Builds the deterministic deployment rule for a method. The PoE and KL-Reg
/// rules share one precision-weighted code path: the KL-Reg weight is
/// beta/(1+beta), which makes matched pairs run through identical float
/// operations (their distributions differ only by the (1+beta) covariance
/// scalar, which deterministic action selection never touches).
inline ActionRule compose_method(const MethodSpec& spec, const GaussianPolicyFn& actor,
                                 const GaussianPolicyFn& prior,
                                 std::shared_ptr<const LinearCritic> critic = nullptr,
                                 const Goal& goal = {}) {
    ActionRule rule;
    switch (spec.kind) {
    case MethodKind::frozen:
        rule.act = [actor](const EnvState& s) { return actor(s).mean; };
        rule.kl_from_actor = [](const EnvState&) { return 0.0; };
        break;
    case MethodKind::prior_only:
        rule.act = [prior](const EnvState& s) { return prior(s).mean; };
        rule.kl_from_actor = [actor, prior](const EnvState& s) {
            return gaussian_kl(prior(s), actor(s));
        };
        break;
    case MethodKind::additive: {
        const double lambda = spec.param;
        rule.act = [actor, prior, lambda](const EnvState& s) {
            return additive_mix(actor(s), prior(s), lambda).mean;
        };
        rule.kl_from_actor = [actor, prior, lambda](const EnvState& s) {
            return gaussian_kl(additive_mix(actor(s), prior(s), lambda), actor(s));
        };
        break;
    }
    case MethodKind::poe: {
        const double alpha = spec.param;
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("poe: alpha outside [0,1]");
        rule.act = [actor, prior, alpha](const EnvState& s) {
            return poe_compose(actor(s), prior(s), alpha).mean;
        };
        rule.kl_from_actor = [actor, prior, alpha](const EnvState& s) {
            return gaussian_kl(poe_compose(actor(s), prior(s), alpha), actor(s));
        };
        break;
    }
    case MethodKind::klreg: {
        const double beta = spec.param;
        const double w = beta_to_alpha(beta); // canonical precision weight
        rule.act = [actor, prior, w](const EnvState& s) {
            return poe_compose(actor(s), prior(s), w).mean;
        };
        rule.kl_from_actor = [actor, prior, beta](const EnvState& s) {
            return gaussian_kl(klreg_compose(actor(s), prior(s), beta), actor(s));
        };
        break;
    }
    case MethodKind::awr: {
        if (!critic) throw std::invalid_argument("compose_method: awr requires a critic");
        const double beta = spec.param;
        const double clip = spec.clip;
        rule.act = [actor, critic, goal, beta, clip](const EnvState& s) {
            return awr_step(actor(s), *critic, s, goal, beta, clip);
        };
        rule.kl_from_actor = [actor, critic, goal, beta, clip](const EnvState& s) {
            const DiagGaussian a = actor(s);
            const std::vector<double> act = awr_step(a, *critic, s, goal, beta, clip);
            double kl = 0.0;
            for (size_t i = 0; i < a.dim(); ++i) {
                const double d = act[i] - a.mean[i];
                kl += 0.5 * d * d / a.var[i];
            }
            return kl;
        };
        break;
    }
    }
    return rule;
}

struct EpisodeRecord {
    std::string method_id;
    std::string goal_id;
    uint64_t seed = 0;
    size_t episode_index = 0;
    double goal_weighted_return = 0.0;
    std::array<double, 3> raw_component_sums{};
    size_t length = 0;
    double mean_kl_from_actor = 0.0;
};

/// Seeded rollout engine. Initial conditions are a function of
/// (seed, goal_id, episode_index) only, never of the method, so records are
/// method-matched per episode.
inline std::vector<EpisodeRecord> rollout(const EnvConfig& config, const ActionRule& rule,
                                          const Goal& goal, const std::vector<uint64_t>& seeds,
                                          size_t episodes_per_seed, const std::string& method_id) {
    config.validate();
    if (seeds.empty()) throw std::invalid_argument("rollout: empty seed list");
    if (episodes_per_seed < 1) throw std::invalid_argument("rollout: episodes_per_seed must be >= 1");

    std::vector<EpisodeRecord> out;
    out.reserve(seeds.size() * episodes_per_seed);
    const uint64_t goal_tag = Rng::hash_str(goal.id);
    for (uint64_t seed : seeds) {
        for (size_t ep = 0; ep < episodes_per_seed; ++ep) {
            Rng reset_rng(Rng::derive(seed, goal_tag, ep));
            EnvState s = env_reset(config, reset_rng);
            EpisodeRecord rec;
            rec.method_id = method_id;
            rec.goal_id = goal.id;
            rec.seed = seed;
            rec.episode_index = ep;
            double kl_sum = 0.0;
            while (true) {
                kl_sum += rule.kl_from_actor(s);
                const std::vector<double> a = rule.act(s);
                const StepResult step = env_step(config, s, a);
                for (size_t c = 0; c < 3; ++c) rec.raw_component_sums[c] += step.rc[c];
                rec.length += 1;
                if (step.done) break;
                s = step.next;
            }
            rec.goal_weighted_return = goal.dot(rec.raw_component_sums);
            rec.mean_kl_from_actor = kl_sum / static_cast<double>(rec.length);
            out.push_back(std::move(rec));
        }
    }
    return out;
}

} // namespace poekl
