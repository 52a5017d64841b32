#include "poekl/deploy.hpp"
#include "poekl/env.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace poekl;

namespace {

EnvState rest_state(size_t dim) {
    EnvState s;
    s.pos.assign(dim, 0.0);
    s.vel.assign(dim, 0.0);
    return s;
}

} // namespace

TEST_CASE("zero action from rest leaves the state unchanged", "[env]") {
    EnvConfig cfg;
    const StepResult out = env_step(cfg, rest_state(2), {0.0, 0.0});
    REQUIRE(out.rc[0] == 0.0);
    REQUIRE(out.rc[1] == 0.0);
    REQUIRE(out.rc[2] == 1.0);
    REQUIRE(out.next.pos == std::vector<double>{0.0, 0.0});
    REQUIRE(out.next.vel == std::vector<double>{0.0, 0.0});
    REQUIRE_FALSE(out.done);
}

TEST_CASE("exiting the workspace terminates but still counts the step", "[env]") {
    EnvConfig cfg;
    EnvState s = rest_state(2);
    s.pos[0] = 4.99;
    s.vel[0] = 4.0;
    const StepResult out = env_step(cfg, s, {20.0, 0.0});
    REQUIRE(out.next.pos[0] > cfg.workspace_halfwidth);
    REQUIRE(out.done);
    REQUIRE(out.rc[2] == 1.0);
}

TEST_CASE("unit forward action without drag telescopes", "[env]") {
    EnvConfig cfg;
    cfg.drag = 0.0;
    cfg.workspace_halfwidth = 1e9;
    EnvState s = rest_state(2);
    const int k = 20;
    double forward_sum = 0.0;
    for (int t = 0; t < k; ++t) {
        const StepResult out = env_step(cfg, s, {1.0, 0.0});
        forward_sum += out.rc[0];
        s = out.next;
    }
    // vel_t = dt * t, so the forward-velocity sum is dt * k(k+1)/2
    REQUIRE(forward_sum == Catch::Approx(cfg.dt * k * (k + 1) / 2.0).margin(1e-12));
    REQUIRE(s.vel[0] == Catch::Approx(cfg.dt * k).margin(1e-12));
}

TEST_CASE("non-finite inputs are rejected", "[env]") {
    EnvConfig cfg;
    REQUIRE_THROWS_AS(env_step(cfg, rest_state(2), {std::nan(""), 0.0}), std::invalid_argument);
    EnvState s = rest_state(2);
    s.pos[0] = std::numeric_limits<double>::infinity();
    REQUIRE_THROWS_AS(env_step(cfg, s, {0.0, 0.0}), std::invalid_argument);
    REQUIRE_THROWS_AS(env_step(cfg, rest_state(2), {0.0}), std::invalid_argument);
}

TEST_CASE("max_steps terminates episodes", "[env]") {
    EnvConfig cfg;
    cfg.max_steps = 3;
    EnvState s = rest_state(2);
    StepResult out;
    for (int t = 0; t < 3; ++t) {
        out = env_step(cfg, s, {0.0, 0.0});
        s = out.next;
    }
    REQUIRE(out.done);
}

TEST_CASE("make_prior is reproducible and kind-sensitive", "[env]") {
    EnvConfig cfg;
    const Goal g{{1.0, 0.1, 0.1}, "G1"};
    for (PriorKind k : {PriorKind::trained, PriorKind::undertrained, PriorKind::noisy,
                        PriorKind::random}) {
        const LinearGaussianPolicy a = make_prior(k, g, cfg, 7);
        const LinearGaussianPolicy b = make_prior(k, g, cfg, 7);
        REQUIRE(a.kp == b.kp);
        REQUIRE(a.kv == b.kv);
        REQUIRE(a.b == b.b);
        REQUIRE(a.log_std == b.log_std);
    }
    const LinearGaussianPolicy r1 = make_prior(PriorKind::random, g, cfg, 7);
    const LinearGaussianPolicy r2 = make_prior(PriorKind::random, g, cfg, 8);
    REQUIRE(r1.b != r2.b);
    REQUIRE_THROWS_AS(make_prior(PriorKind::noisy, g, cfg, 7, -0.1), std::invalid_argument);
}

TEST_CASE("trained prior damps actions for the efficiency goal", "[env]") {
    EnvConfig cfg;
    const Goal g3{{0.1, 1.0, 0.1}, "G3"};
    const Goal g1{{1.0, 0.1, 0.1}, "G1"};
    const LinearGaussianPolicy eff = make_prior(PriorKind::trained, g3, cfg, 0);
    const LinearGaussianPolicy fast = make_prior(PriorKind::trained, g1, cfg, 0);
    REQUIRE(eff.b[0] < fast.b[0]); // smaller feedforward drive
}

TEST_CASE("random prior is farther from the actor in KL than the trained prior", "[env]") {
    EnvConfig cfg;
    const Goal g{{1.0, 0.1, 0.1}, "G1"};
    const LinearGaussianPolicy actor = make_actor(cfg);
    const LinearGaussianPolicy trained = make_prior(PriorKind::trained, g, cfg, 2740);
    const LinearGaussianPolicy random = make_prior(PriorKind::random, g, cfg, 2740);
    Rng rng(99);
    double kl_trained = 0.0, kl_random = 0.0;
    for (int k = 0; k < 200; ++k) {
        EnvState s = rest_state(2);
        for (int i = 0; i < 2; ++i) {
            s.pos[i] = rng.uniform(-1.0, 1.0);
            s.vel[i] = rng.uniform(-0.5, 0.5);
        }
        kl_trained += gaussian_kl(trained.dist(s), actor.dist(s));
        kl_random += gaussian_kl(random.dist(s), actor.dist(s));
    }
    REQUIRE(kl_random > kl_trained);
}

TEST_CASE("env_reset is deterministic in its generator", "[env]") {
    EnvConfig cfg;
    Rng a(5), b(5);
    const EnvState sa = env_reset(cfg, a);
    const EnvState sb = env_reset(cfg, b);
    REQUIRE(sa.pos == sb.pos);
    REQUIRE(sa.vel == sb.vel);
    for (double p : sa.pos) REQUIRE(std::abs(p) <= 0.25);
}
