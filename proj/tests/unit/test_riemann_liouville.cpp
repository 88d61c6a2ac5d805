#include <catch2/catch.hpp>

#include <cmath>

#include "fracpath/process.hpp"
#include "fracpath/riemann_liouville.hpp"
#include "fracpath/rng.hpp"
#include "fracpath/stats.hpp"

using namespace fracpath;


namespace {

SampledPath random_step_path(RngStream& rng, double T, std::size_t max_jumps) {
    std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * static_cast<double>(max_jumps));
    std::vector<double> times{0.0}, values{rng.uniform(-2.0, 2.0)};
    for (std::size_t i = 0; i < n; ++i) {
        double t = rng.uniform(1e-3, T - 1e-3);
        if (t > times.back()) {
            times.push_back(t);
            values.push_back(rng.uniform(-2.0, 2.0));
        }
    }
    return SampledPath(T, std::move(times), std::move(values));
}

const std::vector<double> kEval16 = linspace(0.01, 0.95, 16);

} // namespace

TEST_CASE("transform of a constant path is the constant", "[riemann_liouville]") {
    SampledPath c = SampledPath::constant(1.0, 2.5);
    for (double alpha : {-0.75, -0.25, 0.0, 0.25, 1.0, 1.5}) {
        SampledPath tr = rl_transform(c, alpha);
        CHECK(tr.evaluate(0.3) == Approx(2.5).margin(1e-14));
        CHECK(tr.evaluate(0.9) == Approx(2.5).margin(1e-14));
    }
}

TEST_CASE("hand-integrated indicator step", "[riemann_liouville]") {
    // K = 1_{[0.5,1)}, T = 1, alpha = 1, t = 0.75:
    // int_0^{0.75} K du + 0.25 * K_{0.75} = 0.25 + 0.25
    SampledPath k(1.0, {0.0, 0.5}, {0.0, 1.0});
    SampledPath tr = rl_transform(k, 1.0);
    CHECK(tr.evaluate(0.75) == Approx(0.5).margin(1e-14));
}

TEST_CASE("order zero is the identity", "[riemann_liouville]") {
    RngStream rng(8, 0);
    SampledPath p = random_step_path(rng, 1.0, 8);
    SampledPath tr = rl_transform(p, 0.0);
    for (double u : kEval16)
        CHECK(tr.evaluate(u) == p.evaluate(u));
}

TEST_CASE("rl_apply samples the transform and guards the endpoint", "[riemann_liouville]") {
    SampledPath k(1.0, {0.0, 0.5}, {0.0, 1.0});
    SampledPath s = rl_apply(k, 1.0, {0.25, 0.75});
    CHECK(s.evaluate(0.75) == Approx(0.5).margin(1e-14));
    CHECK_THROWS_AS(rl_apply(k, -0.5, {1.0 - 1e-12}), std::domain_error);
    CHECK_THROWS_AS(rl_apply(k, 0.5, {1.0}), std::out_of_range);
}

TEST_CASE("group law holds to machine precision on step paths", "[riemann_liouville]") {
    const std::vector<double> orders{-0.75, -0.25, 0.0, 0.25, 0.5, 1.0, 1.5};
    RngStream rng(17, 0);
    for (int trial = 0; trial < 40; ++trial) {
        SampledPath p = random_step_path(rng, 1.0, 64);
        for (double a : orders)
            for (double b : orders) {
                if (a + b <= -1.0) continue;
                double dev = rl_compose_check(p, a, b, kEval16, ComposeMode::exact);
                REQUIRE(dev < 1e-10);
            }
    }
}

TEST_CASE("group law survives the dense-grid fallback", "[riemann_liouville]") {
    RngStream rng(18, 0);
    for (int trial = 0; trial < 5; ++trial) {
        SampledPath p = random_step_path(rng, 1.0, 8);
        double dev = rl_compose_check(p, 0.7, -0.3, kEval16, ComposeMode::dense, 4096);
        REQUIRE(dev < 1e-8);
    }
}

TEST_CASE("identity element deviation is exactly zero", "[riemann_liouville]") {
    RngStream rng(19, 0);
    SampledPath p = random_step_path(rng, 1.0, 16);
    CHECK(rl_compose_check(p, 0.0, 0.6, kEval16) == 0.0);
    CHECK(rl_compose_check(p, 0.6, 0.0, kEval16) <= 1e-15);
}

TEST_CASE("inverse order recovers the path", "[riemann_liouville]") {
    RngStream rng(20, 0);
    for (int trial = 0; trial < 20; ++trial) {
        SampledPath p = random_step_path(rng, 1.0, 32);
        for (double a : {0.25, 0.5, 0.75}) {
            SampledPath tr = rl_transform(rl_transform(p, a), -a);
            for (double u : kEval16)
                REQUIRE(std::fabs(tr.evaluate(u) - p.evaluate(u)) < 1e-8);
        }
    }
}

TEST_CASE("compose check rejects too negative order sums", "[riemann_liouville]") {
    SampledPath k(1.0, {0.0, 0.5}, {0.0, 1.0});
    CHECK_THROWS_AS(rl_compose_check(k, -0.75, -0.75, kEval16), std::invalid_argument);
}

TEST_CASE("jump identity", "[riemann_liouville]") {
    SampledPath k(1.0, {0.0, 0.5}, {0.0, 1.0});
    SampledPath tr = rl_transform(k, 1.0);
    CHECK(tr.jump_at(0.5) == Approx(0.5).margin(1e-14)); // ((1-0.5)/1)^1 * 1
    CHECK(rl_jump_identity_check(k, 1.0) < 1e-12);
    CHECK(rl_jump_identity_check(k, 0.0) < 1e-15);

    RngStream rng(21, 0);
    for (int trial = 0; trial < 25; ++trial) {
        SampledPath p = random_step_path(rng, 1.0, 24);
        if (p.jump_times().empty()) continue;
        for (double a : {-0.5, 0.25, 1.5})
            REQUIRE(rl_jump_identity_check(p, a) < 1e-12);
    }
}

TEST_CASE("inversion formula reconstructs increments", "[riemann_liouville]") {
    SampledPath k(1.0, {0.0, 0.5}, {0.0, 1.0});
    SampledPath tr = rl_transform(k, 0.25);
    CHECK(rl_inversion_reconstruct(tr, 0.25, 0.25, 0.75) == Approx(1.0).margin(1e-8));

    SampledPath c = rl_transform(SampledPath::constant(1.0, 4.0), 0.6);
    CHECK(rl_inversion_reconstruct(c, 0.6, 0.1, 0.8) == Approx(0.0).margin(1e-12));

    RngStream rng(22, 0);
    for (int trial = 0; trial < 20; ++trial) {
        SampledPath p = random_step_path(rng, 1.0, 16);
        for (double a : {0.25, 0.7}) {
            SampledPath trp = rl_transform(p, a);
            double s = rng.uniform(0.0, 0.4), t = rng.uniform(s + 0.05, 0.95);
            double rec = rl_inversion_reconstruct(trp, a, s, t);
            double truth = p.evaluate(t) - p.evaluate(s);
            REQUIRE(std::fabs(rec - truth) < 1e-8);
            REQUIRE(std::fabs(truth) <= rl_inversion_bound(trp, a, s, t) + 1e-12);
        }
    }
    CHECK_THROWS(rl_inversion_reconstruct(tr, 0.25, 0.5, 1.0)); // t must stay below T
}

TEST_CASE("martingale transform keeps mean zero and the variance profile",
          "[riemann_liouville][slow]") {
    // On a grid the transform telescopes to L_0 + sum ((T-u_i)/T)^alpha dL_i,
    // so the exact second moment is sum ((T-u_i)/T)^{2 alpha} du_i.
    const double alpha = 0.25, t_eval = 0.75;
    const std::size_t n = 512, reps = 100000;
    auto grid = linspace(0.0, 1.0, n + 1);
    double exact_second = 0.0, integral_target = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] > t_eval) break;
        exact_second += std::pow(1.0 - grid[i], 2.0 * alpha) * (grid[i] - grid[i - 1]);
    }
    integral_target = (1.0 - std::pow(1.0 - t_eval, 1.0 + 2.0 * alpha)) / (1.0 + 2.0 * alpha);
    RunningStat mean_stat, second_stat;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
        RngStream rng(777, rep);
        SampledPath w = simulate_path(ProcessSpec::brownian(1.0), grid, rng);
        double v = rl_transform(w, alpha).evaluate(t_eval);
        mean_stat.add(v);
        second_stat.add(v * v);
    }
    CHECK(std::fabs(mean_stat.mean()) <= 3.0 * mean_stat.stderr_mean());
    CHECK(std::fabs(second_stat.mean() - exact_second) <= 3.0 * second_stat.stderr_mean());
    // the grid-exact second moment sits within 3 stderr of the continuous target
    CHECK(std::fabs(second_stat.mean() - integral_target)
          <= 3.0 * second_stat.stderr_mean() + std::fabs(exact_second - integral_target));
    CHECK(std::fabs(exact_second - integral_target) < 1e-3);
}
