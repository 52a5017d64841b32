#include "poekl/deploy.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace poekl;

namespace {

struct Fixture {
    EnvConfig cfg;
    Goal goal{{1.0, 0.1, 0.1}, "G1"};
    LinearGaussianPolicy actor;
    LinearGaussianPolicy prior;
    GaussianPolicyFn actor_fn;
    GaussianPolicyFn prior_fn;

    Fixture()
        : actor(make_actor(cfg)), prior(make_prior(PriorKind::trained, goal, cfg, 2740)) {
        actor_fn = [this](const EnvState& s) { return actor.dist(s); };
        prior_fn = [this](const EnvState& s) { return prior.dist(s); };
    }

    EnvState probe(Rng& rng) const {
        EnvState s;
        s.pos = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        s.vel = {rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
        return s;
    }
};

} // namespace

TEST_CASE("method ids are stable", "[deploy]") {
    REQUIRE(MethodSpec{MethodKind::frozen}.id() == "frozen");
    REQUIRE(MethodSpec{MethodKind::prior_only}.id() == "prior_only");
    REQUIRE(MethodSpec{MethodKind::additive, 0.5}.id() == "additive_0.500");
    REQUIRE(MethodSpec{MethodKind::poe, 0.5}.id() == "poe_0.500");
    REQUIRE(MethodSpec{MethodKind::klreg, 1.0 / 9.0}.id() == "klreg_0.111");
    REQUIRE(MethodSpec{MethodKind::awr, 3.0}.id() == "awr_3.000");
}

TEST_CASE("frozen and prior_only act on the respective means", "[deploy]") {
    Fixture fx;
    Rng rng(1);
    const EnvState s = fx.probe(rng);
    const ActionRule frozen = compose_method({MethodKind::frozen}, fx.actor_fn, fx.prior_fn);
    const ActionRule prior = compose_method({MethodKind::prior_only}, fx.actor_fn, fx.prior_fn);
    REQUIRE(frozen.act(s) == fx.actor.dist(s).mean);
    REQUIRE(frozen.kl_from_actor(s) == 0.0);
    REQUIRE(prior.act(s) == fx.prior.dist(s).mean);
    REQUIRE(prior.kl_from_actor(s) ==
            Catch::Approx(gaussian_kl(fx.prior.dist(s), fx.actor.dist(s))).margin(1e-12));
}

TEST_CASE("additive lambda=0.5 averages the means", "[deploy]") {
    Fixture fx;
    Rng rng(2);
    const EnvState s = fx.probe(rng);
    const ActionRule mix = compose_method({MethodKind::additive, 0.5}, fx.actor_fn, fx.prior_fn);
    const std::vector<double> a = mix.act(s);
    const DiagGaussian da = fx.actor.dist(s), dp = fx.prior.dist(s);
    for (size_t i = 0; i < a.size(); ++i)
        REQUIRE(a[i] == Catch::Approx(0.5 * (da.mean[i] + dp.mean[i])).margin(1e-14));
}

TEST_CASE("poe KL reporter matches the closed form", "[deploy]") {
    Fixture fx;
    Rng rng(3);
    const ActionRule rule = compose_method({MethodKind::poe, 0.7}, fx.actor_fn, fx.prior_fn);
    for (int k = 0; k < 20; ++k) {
        const EnvState s = fx.probe(rng);
        const DiagGaussian poe = poe_compose(fx.actor.dist(s), fx.prior.dist(s), 0.7);
        REQUIRE(rule.kl_from_actor(s) ==
                Catch::Approx(gaussian_kl(poe, fx.actor.dist(s))).margin(1e-12));
        REQUIRE(rule.act(s) == poe.mean);
    }
}

TEST_CASE("matched poe and klreg rules act bitwise identically", "[deploy]") {
    Fixture fx;
    Rng rng(4);
    for (double alpha : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double beta = alpha_to_beta(alpha);
        const ActionRule poe = compose_method({MethodKind::poe, alpha}, fx.actor_fn, fx.prior_fn);
        const ActionRule klreg = compose_method({MethodKind::klreg, beta}, fx.actor_fn, fx.prior_fn);
        for (int k = 0; k < 100; ++k) {
            const EnvState s = fx.probe(rng);
            REQUIRE(poe.act(s) == klreg.act(s)); // exact float equality
        }
    }
}

TEST_CASE("klreg KL reporter uses its own tighter covariance", "[deploy]") {
    Fixture fx;
    Rng rng(5);
    const double beta = 1.0;
    const ActionRule rule = compose_method({MethodKind::klreg, beta}, fx.actor_fn, fx.prior_fn);
    const EnvState s = fx.probe(rng);
    const DiagGaussian kd = klreg_compose(fx.actor.dist(s), fx.prior.dist(s), beta);
    REQUIRE(rule.kl_from_actor(s) ==
            Catch::Approx(gaussian_kl(kd, fx.actor.dist(s))).margin(1e-12));
}

TEST_CASE("invalid method setups throw", "[deploy]") {
    Fixture fx;
    REQUIRE_THROWS_AS(compose_method({MethodKind::poe, 1.5}, fx.actor_fn, fx.prior_fn),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(compose_method({MethodKind::awr, 1.0}, fx.actor_fn, fx.prior_fn),
                      std::invalid_argument);
}

TEST_CASE("rollout records satisfy their invariants", "[deploy]") {
    Fixture fx;
    const ActionRule rule = compose_method({MethodKind::poe, 0.5}, fx.actor_fn, fx.prior_fn);
    const std::vector<uint64_t> seeds{0, 1};
    const auto recs = rollout(fx.cfg, rule, fx.goal, seeds, 3, "poe_0.500");
    REQUIRE(recs.size() == 6);
    for (const EpisodeRecord& r : recs) {
        REQUIRE(r.method_id == "poe_0.500");
        REQUIRE(r.goal_id == "G1");
        REQUIRE(r.length >= 1);
        REQUIRE(r.length <= fx.cfg.max_steps);
        REQUIRE(r.goal_weighted_return ==
                Catch::Approx(fx.goal.dot(r.raw_component_sums)).margin(1e-9));
        REQUIRE(std::isfinite(r.mean_kl_from_actor));
        REQUIRE(r.mean_kl_from_actor >= 0.0);
    }
    const auto again = rollout(fx.cfg, rule, fx.goal, seeds, 3, "poe_0.500");
    for (size_t i = 0; i < recs.size(); ++i) {
        REQUIRE(recs[i].goal_weighted_return == again[i].goal_weighted_return);
        REQUIRE(recs[i].length == again[i].length);
    }
}

TEST_CASE("matched poe and klreg rollouts are trajectory-identical", "[deploy]") {
    Fixture fx;
    for (double alpha : {0.1, 0.5, 0.9}) {
        const ActionRule poe = compose_method({MethodKind::poe, alpha}, fx.actor_fn, fx.prior_fn);
        const ActionRule klreg =
            compose_method({MethodKind::klreg, alpha_to_beta(alpha)}, fx.actor_fn, fx.prior_fn);
        const auto a = rollout(fx.cfg, poe, fx.goal, {0, 1, 2}, 2, "poe");
        const auto b = rollout(fx.cfg, klreg, fx.goal, {0, 1, 2}, 2, "klreg");
        for (size_t i = 0; i < a.size(); ++i) {
            REQUIRE(a[i].goal_weighted_return == b[i].goal_weighted_return); // bitwise
            REQUIRE(a[i].length == b[i].length);
            REQUIRE(a[i].raw_component_sums == b[i].raw_component_sums);
        }
    }
}

TEST_CASE("initial conditions depend only on seed, goal, episode", "[deploy]") {
    // A frozen one-step probe: two different methods must see the same start.
    Fixture fx;
    EnvConfig one_step = fx.cfg;
    one_step.max_steps = 1;
    const ActionRule zero{[](const EnvState&) { return std::vector<double>{0.0, 0.0}; },
                          [](const EnvState&) { return 0.0; }};
    const auto a = rollout(one_step, zero, fx.goal, {7}, 2, "m1");
    const auto b = rollout(one_step, zero, fx.goal, {7}, 2, "m2");
    for (size_t i = 0; i < a.size(); ++i)
        REQUIRE(a[i].raw_component_sums == b[i].raw_component_sums);
    const Goal other{{0.1, 1.0, 0.1}, "G3"};
    const auto c = rollout(one_step, zero, other, {7}, 2, "m1");
    REQUIRE(a[0].raw_component_sums != c[0].raw_component_sums);
}

TEST_CASE("rollout rejects bad arguments", "[deploy]") {
    Fixture fx;
    const ActionRule rule = compose_method({MethodKind::frozen}, fx.actor_fn, fx.prior_fn);
    REQUIRE_THROWS_AS(rollout(fx.cfg, rule, fx.goal, {}, 3, "frozen"), std::invalid_argument);
    REQUIRE_THROWS_AS(rollout(fx.cfg, rule, fx.goal, {0}, 0, "frozen"), std::invalid_argument);
}
