#include <catch2/catch.hpp>

#include <cmath>

#include "fracpath/process.hpp"
#include "fracpath/rng.hpp"
#include "fracpath/sampled_path.hpp"
#include "fracpath/stats.hpp"

using namespace fracpath;

TEST_CASE("path evaluation follows the cadlag convention", "[core_paths]") {
    SampledPath c = SampledPath::constant(1.0, 3.5);
    CHECK(c.evaluate(0.0) == 3.5);
    CHECK(c.evaluate(0.7) == 3.5);
    CHECK(c.left_limit(0.7) == 3.5);

    SampledPath p(1.0, {0.0, 0.5}, {0.0, 1.0});
    CHECK(p.evaluate(0.5) == 1.0);      // right continuity at the jump
    CHECK(p.left_limit(0.5) == 0.0);    // left limit across the jump
    CHECK(p.jump_at(0.5) == 1.0);
    CHECK(p.left_limit(0.0) == p.evaluate(0.0));
    CHECK(p.evaluate(0.49) == 0.0);
    CHECK(p.evaluate(1.0) == 1.0);
    CHECK_THROWS_AS(p.evaluate(1.5), std::out_of_range);
    CHECK_THROWS_AS(p.evaluate(-0.1), std::out_of_range);
}

TEST_CASE("path constructor rejects malformed input", "[core_paths]") {
    CHECK_THROWS(SampledPath(1.0, {0.1, 0.5}, {0.0, 1.0}));      // must start at 0
    CHECK_THROWS(SampledPath(1.0, {0.0, 0.5, 0.5}, {0, 1, 2}));  // strictly increasing
    CHECK_THROWS(SampledPath(1.0, {0.0, 1.5}, {0.0, 1.0}));      // beyond horizon
    CHECK_THROWS(SampledPath(1.0, {0.0}, {1.0, 2.0}));           // size mismatch
}

TEST_CASE("brownian path at the trivial grid", "[core_paths]") {
    RngStream rng(42, 0);
    SampledPath p = simulate_path(ProcessSpec::brownian(1.0), {0.0}, rng);
    CHECK(p.evaluate(0.0) == 0.0);
}

TEST_CASE("simulation is deterministic in (seed, index)", "[core_paths]") {
    auto grid = linspace(0.0, 1.0, 65);
    RngStream a(7, 3), b(7, 3), c(7, 4);
    SampledPath pa = simulate_path(ProcessSpec::brownian(1.0), grid, a);
    SampledPath pb = simulate_path(ProcessSpec::brownian(1.0), grid, b);
    SampledPath pc = simulate_path(ProcessSpec::brownian(1.0), grid, c);
    CHECK(pa.values() == pb.values());
    CHECK(pa.values() != pc.values());
}

TEST_CASE("geometric brownian values stay positive", "[core_paths]") {
    auto grid = linspace(0.0, 1.0, 129);
    for (std::uint64_t rep = 0; rep < 50; ++rep) {
        RngStream rng(11, rep);
        SampledPath p = simulate_path(ProcessSpec::geometric_brownian(1.0), grid, rng);
        for (double v : p.values()) REQUIRE(v > 0.0);
    }
}

TEST_CASE("brownian terminal variance matches at desk scale", "[core_paths]") {
    const std::size_t reps = 100000;
    RunningStat sq;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
        RngStream rng(123, rep);
        SampledPath p = simulate_path(ProcessSpec::brownian(1.0), {0.0, 1.0}, rng);
        double w = p.evaluate(1.0);
        sq.add(w * w);
    }
    CHECK(std::fabs(sq.mean() - 1.0) <= 5.0 * sq.stderr_mean());
}

TEST_CASE("compound poisson jump count matches the superposed rate", "[core_paths]") {
    ProcessSpec spec = ProcessSpec::compound_poisson(1.0, {{+1.0, 1.0}, {-1.0, 1.0}});
    const std::size_t reps = 100000;
    RunningStat njumps;
    for (std::uint64_t rep = 0; rep < reps; ++rep) {
        RngStream rng(5, rep);
        SampledPath p = simulate_path(spec, {0.0}, rng);
        njumps.add(static_cast<double>(p.jump_times().size()));
    }
    // superposition: expected number of jumps = sum of rates = 2
    CHECK(std::fabs(njumps.mean() - 2.0) <= 3.0 * njumps.stderr_mean());
}

TEST_CASE("compound poisson paths are piecewise constant between jumps", "[core_paths]") {
    ProcessSpec spec = ProcessSpec::compound_poisson(1.0, {{+0.5, 2.0}, {-1.0, 1.0}});
    RngStream rng(99, 0);
    SampledPath p = simulate_path(spec, linspace(0.0, 1.0, 11), rng);
    // between recorded knots the path has no drift: each value change is one atom
    for (std::size_t i = 1; i < p.size(); ++i) {
        double d = p.values()[i] - p.values()[i - 1];
        bool atom = d == 0.0 || std::fabs(d - 0.5) < 1e-15 || std::fabs(d + 1.0) < 1e-15;
        REQUIRE(atom);
    }
}

TEST_CASE("stable increment sampler matches the cauchy quartiles", "[core_paths]") {
    // For beta = 1 the unit draw is tan(U): quartiles at -1, 0, 1.
    const std::size_t reps = 200000;
    std::size_t below_m1 = 0, below_0 = 0, below_p1 = 0;
    RngStream rng(2024, 0);
    for (std::size_t i = 0; i < reps; ++i) {
        double x = rng.symmetric_stable(1.0);
        below_m1 += x < -1.0;
        below_0 += x < 0.0;
        below_p1 += x < 1.0;
    }
    double n = static_cast<double>(reps);
    CHECK(std::fabs(below_m1 / n - 0.25) < 0.005);
    CHECK(std::fabs(below_0 / n - 0.50) < 0.005);
    CHECK(std::fabs(below_p1 / n - 0.75) < 0.005);
}

TEST_CASE("stable spec validates beta", "[core_paths]") {
    CHECK_THROWS(ProcessSpec::symmetric_stable(1.0, 2.0));
    CHECK_THROWS(ProcessSpec::symmetric_stable(1.0, 0.0));
    CHECK_THROWS(ProcessSpec::compound_poisson(1.0, {}));
    RngStream rng(1, 0);
    CHECK_THROWS(simulate_path(ProcessSpec::brownian(1.0), {0.0, 0.5, 0.4}, rng));
    CHECK_THROWS(simulate_path(ProcessSpec::brownian(1.0), {0.0, 1.5}, rng));
}
