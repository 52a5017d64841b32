#include "poekl/critic.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace poekl;

namespace {

LinearCritic random_critic(uint64_t seed) {
    LinearCritic c;
    c.spec = FeatureSpec{};
    c.weights.resize(c.spec.dim());
    Rng rng(seed);
    for (double& w : c.weights) w = rng.uniform(-1.0, 1.0);
    return c;
}

GoalSampler default_sampler() {
    GoalSampler gs;
    gs.deployment_goals = {Goal{{1.0, 0.1, 0.1}, "G1"}, Goal{{0.5, 0.5, 0.5}, "G2"},
                           Goal{{0.1, 1.0, 0.1}, "G3"}};
    return gs;
}

} // namespace

TEST_CASE("behavior_dataset is deterministic and rejects n=0", "[critic]") {
    EnvConfig cfg;
    const LinearGaussianPolicy actor = make_actor(cfg);
    const auto fn = [&actor](const EnvState& s) { return actor.dist(s); };
    const auto d1 = behavior_dataset(cfg, fn, 50, 3);
    const auto d2 = behavior_dataset(cfg, fn, 50, 3);
    REQUIRE(d1.size() == 50);
    for (size_t i = 0; i < 50; ++i) {
        REQUIRE(d1[i].state == d2[i].state);
        REQUIRE(d1[i].action == d2[i].action);
        REQUIRE(d1[i].rc == d2[i].rc);
    }
    const auto d3 = behavior_dataset(cfg, fn, 50, 4);
    REQUIRE(d1[0].action != d3[0].action);
    REQUIRE_THROWS_AS(behavior_dataset(cfg, fn, 0, 3), std::invalid_argument);
}

TEST_CASE("goal sampler outputs stay on the simplex", "[critic]") {
    const GoalSampler gs = default_sampler();
    Rng rng(17);
    for (int k = 0; k < 2000; ++k) {
        const std::array<double, 3> g = gs.sample(rng);
        double z = 0.0;
        for (double gi : g) {
            REQUIRE(gi >= 0.0);
            z += gi;
        }
        // the deployment-goal branch reuses fixed (non-simplex) weights
        REQUIRE(z > 0.0);
        REQUIRE(std::isfinite(z));
    }
}

TEST_CASE("fqe on a zero-reward dataset keeps zero weights", "[critic]") {
    std::vector<Transition> data(32);
    Rng rng(9);
    for (auto& tr : data) {
        tr.state = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
        tr.action = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        tr.rc = {0.0, 0.0, 0.0};
        tr.next_state = tr.state;
        tr.done = false;
    }
    EnvConfig cfg;
    const LinearGaussianPolicy actor = make_actor(cfg);
    const FqeResult res = fqe_train(data, FeatureSpec{}, default_sampler(), 10, 0.99, 0.05,
                                    [&actor](const EnvState& s) { return actor.dist(s); }, 1);
    for (double w : res.critic.weights) REQUIRE(std::abs(w) < 1e-8);
    REQUIRE(res.td_residuals.back() < 1e-8);
}

TEST_CASE("fqe fits an absorbing unit-reward transition", "[critic]") {
    // rc = (1,1,1) makes the goal-weighted reward exactly 1 for every
    // simplex goal, so the fixed point is Q(s,a,g) = 1.
    Transition tr;
    tr.state = {0.1, -0.2, 0.3, 0.0};
    tr.action = {0.2, -0.1};
    tr.rc = {1.0, 1.0, 1.0};
    tr.next_state = tr.state;
    tr.done = true;
    std::vector<Transition> data(200, tr);
    EnvConfig cfg;
    const LinearGaussianPolicy actor = make_actor(cfg);
    const FqeResult res = fqe_train(data, FeatureSpec{}, default_sampler(), 30, 0.9, 0.05,
                                    [&actor](const EnvState& s) { return actor.dist(s); }, 5);
    const double q = res.critic.value(tr.state, tr.action, {0.2, 0.3, 0.5});
    REQUIRE(q == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("fqe TD residual stays bounded and settles on a real dataset", "[critic]") {
    // The immediate reward is exactly linear in the quadratic features, so the
    // first epoch fits almost perfectly; bootstrapped targets then raise the
    // residual until the Polyak target converges. The meaningful property is
    // that the residual stays bounded and stabilizes, not that it decreases.
    EnvConfig cfg;
    cfg.max_steps = 40;
    const LinearGaussianPolicy actor = make_actor(cfg);
    const auto fn = [&actor](const EnvState& s) { return actor.dist(s); };
    const auto data = behavior_dataset(cfg, fn, 400, 7);
    const FqeResult res = fqe_train(data, FeatureSpec{}, default_sampler(), 40, 0.99, 0.05, fn, 2);
    REQUIRE(res.td_residuals.size() == 40);
    for (double r : res.td_residuals) {
        REQUIRE(std::isfinite(r));
        REQUIRE(r < 10.0);
    }
    const double tail = res.td_residuals.back();
    const double earlier = res.td_residuals[34];
    REQUIRE(std::abs(tail - earlier) < 0.5 * (tail + 1e-9));
}

TEST_CASE("action_gradient matches central finite differences", "[critic]") {
    const LinearCritic critic = random_critic(21);
    Rng rng(22);
    for (int k = 0; k < 50; ++k) {
        const std::vector<double> s = {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                                       rng.uniform(-1, 1)};
        std::vector<double> a = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
        const std::array<double, 3> g = {rng.uniform(0, 1), rng.uniform(0, 1), rng.uniform(0, 1)};
        const std::vector<double> grad = critic.action_gradient(s, a, g);
        const double h = 1e-6;
        for (size_t i = 0; i < a.size(); ++i) {
            std::vector<double> ap = a, am = a;
            ap[i] += h;
            am[i] -= h;
            const double fd = (critic.value(s, ap, g) - critic.value(s, am, g)) / (2.0 * h);
            REQUIRE(grad[i] == Catch::Approx(fd).margin(1e-6));
        }
    }
}

TEST_CASE("awr_step limits and degenerate cases", "[critic]") {
    EnvConfig cfg;
    const LinearGaussianPolicy actor = make_actor(cfg);
    EnvState s;
    s.pos = {0.4, -0.3};
    s.vel = {0.1, 0.2};
    const DiagGaussian d = actor.dist(s);
    const Goal goal{{1.0, 0.1, 0.1}, "G1"};

    SECTION("zero critic returns the actor mean exactly") {
        LinearCritic zero;
        zero.spec = FeatureSpec{};
        zero.weights.assign(zero.spec.dim(), 0.0);
        REQUIRE(awr_step(d, zero, s, goal, 1.0, 1.0) == d.mean);
    }
    SECTION("huge beta collapses onto the actor mean") {
        const LinearCritic critic = random_critic(33);
        const std::vector<double> a = awr_step(d, critic, s, goal, 1e9, 1.0);
        for (size_t i = 0; i < a.size(); ++i)
            REQUIRE(std::abs(a[i] - d.mean[i]) < 1e-8);
    }
    SECTION("shift is clamped to +-clip") {
        LinearCritic critic = random_critic(34);
        for (double& w : critic.weights) w *= 1e6;
        const double clip = 0.25;
        const std::vector<double> a = awr_step(d, critic, s, goal, 1.0, clip);
        for (size_t i = 0; i < a.size(); ++i)
            REQUIRE(std::abs(a[i] - d.mean[i]) <= clip + 1e-12);
    }
    SECTION("invalid beta or clip throws") {
        const LinearCritic critic = random_critic(35);
        REQUIRE_THROWS_AS(awr_step(d, critic, s, goal, 0.0, 1.0), std::invalid_argument);
        REQUIRE_THROWS_AS(awr_step(d, critic, s, goal, 1.0, 0.0), std::invalid_argument);
    }
}

TEST_CASE("quantile risk rates on an exact replay policy", "[critic]") {
    // Q = 1.2 * a[0] under this goal; dataset actions replay deterministically
    // from the state, so the policy's score distribution equals the data's.
    LinearCritic critic;
    critic.spec = FeatureSpec{};
    critic.weights.assign(critic.spec.dim(), 0.0);
    const size_t pd = critic.spec.psi_dim();
    const size_t a_off = 1 + 2 * critic.spec.action_dim;
    for (size_t c = 0; c < 3; ++c) critic.weights[c * pd + a_off] = 1.0;

    const size_t n = 1000;
    std::vector<Transition> data(n);
    for (size_t i = 0; i < n; ++i) {
        const double x = static_cast<double>(i) / static_cast<double>(n);
        data[i].state = {x, 0.0, 0.0, 0.0};
        data[i].action = {x, 0.0};
        data[i].next_state = data[i].state;
    }
    const Goal goal{{1.0, 0.1, 0.1}, "G1"};
    const auto replay = [](const EnvState& s) { return std::vector<double>{s.pos[0], 0.0}; };
    const RiskRates r = quantile_risk(replay, critic, data, goal);
    REQUIRE(r.cat_pct == Catch::Approx(0.10).margin(0.005));
    REQUIRE(r.con_pct == Catch::Approx(0.05).margin(0.005));
    REQUIRE(r.rob == Catch::Approx(1.0 - r.cat_pct - 0.5 * r.con_pct).margin(1e-12));
    REQUIRE(r.rob == Catch::Approx(0.875).margin(0.01));

    SECTION("a uniformly worse policy is flagged on every state") {
        const auto bad = [](const EnvState&) { return std::vector<double>{-1.0, 0.0}; };
        const RiskRates rb = quantile_risk(bad, critic, data, goal);
        REQUIRE(rb.cat_pct == 1.0);
        REQUIRE(rb.con_pct == 1.0);
        REQUIRE(rb.rob == Catch::Approx(-0.5).margin(1e-12));
    }
    SECTION("empty dataset throws") {
        REQUIRE_THROWS_AS(quantile_risk(replay, critic, {}, goal), std::invalid_argument);
    }
}
