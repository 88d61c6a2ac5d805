#include <catch2/catch.hpp>

#include <cmath>

#include "fracpath/rng.hpp"
#include "fracpath/time_net.hpp"

using namespace fracpath;


TEST_CASE("mesh_theta on small hand-evaluated nets", "[time_nets]") {
    TimeNet a(1.0, {0.0, 0.5, 1.0});
    CHECK(mesh_theta(a, 1.0) == Approx(0.5).margin(1e-15));

    TimeNet b(1.0, {0.0, 0.75, 1.0});
    // max{0.75/1, 0.25/0.5}
    CHECK(mesh_theta(b, 0.5) == Approx(0.75).margin(1e-15));

    TimeNet c(2.0, {0.0, 0.3, 1.1, 2.0});
    CHECK(mesh_theta(c, 1.0) == Approx(0.9).margin(1e-15));

    CHECK_THROWS(mesh_theta(a, 0.0));
    CHECK_THROWS(mesh_theta(a, 1.5));
}

TEST_CASE("adapted nets reproduce the closed form", "[time_nets]") {
    TimeNet n2 = adapted_net(1.0, 1.0, 2);
    CHECK(n2.knots() == std::vector<double>{0.0, 0.5, 1.0});

    TimeNet h2 = adapted_net(1.0, 0.5, 2);
    REQUIRE(h2.knots().size() == 3);
    CHECK(h2.knots()[1] == Approx(0.75).margin(1e-15)); // 1 - (1 - 1/2)^2
    CHECK(h2.knots()[2] == 1.0);

    // theta = 1 gives the uniform net for any n
    TimeNet u = adapted_net(2.0, 1.0, 8);
    for (std::size_t i = 0; i <= 8; ++i)
        CHECK(u.knots()[i] == Approx(0.25 * static_cast<double>(i)).margin(1e-14));

    CHECK_THROWS(adapted_net(1.0, 0.5, 0));
}

TEST_CASE("adapted nets satisfy the mesh bound and quantization identity", "[time_nets]") {
    for (double theta : {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0}) {
        for (std::size_t n : {1ul, 2ul, 7ul, 100ul, 10000ul}) {
            TimeNet net = adapted_net(1.0, theta, n);
            REQUIRE(net.knots().size() == n + 1);
            CHECK(net.knots().back() == 1.0);
            CHECK(mesh_theta(net, theta) <= 1.0 / (theta * static_cast<double>(n)) + 1e-12);
            // (theta/T^theta) int_{t_{i-1}}^{t_i} (T-u)^{theta-1} du = 1/n
            for (std::size_t i = 1; i <= n; ++i)
                REQUIRE(std::fabs(quantization_cell(net, theta, i)
                                  - 1.0 / static_cast<double>(n)) < 1e-12);
        }
    }
}

TEST_CASE("randomized nets shift the knots and keep the mesh bound", "[time_nets]") {
    TimeNet r0 = randomized_net(1.0, 1.0, 4, 0.0);
    CHECK(r0.knots() == adapted_net(1.0, 1.0, 4).knots());

    TimeNet r = randomized_net(1.0, 1.0, 2, 0.5);
    CHECK(r.knots() == std::vector<double>{0.0, 0.25, 0.75, 1.0});

    for (double theta : {0.25, 0.5, 1.0}) {
        for (int k = 0; k < 16; ++k) {
            double rr = static_cast<double>(k) / 16.0;
            for (std::size_t n : {1ul, 3ul, 32ul}) {
                TimeNet rn = randomized_net(1.0, theta, n, rr);
                TimeNet an = adapted_net(1.0, theta, n);
                CHECK(mesh_theta(rn, 1.0) <= mesh_theta(an, 1.0) + 1e-14);
                CHECK(mesh_theta(rn, 1.0) <= 1.0 / (theta * static_cast<double>(n)) + 1e-12);
            }
        }
    }
    CHECK_THROWS(randomized_net(1.0, 0.5, 4, 1.0));
    CHECK_THROWS(randomized_net(1.0, 0.5, 4, -0.1));
}

TEST_CASE("bracketing knots use the half-open convention", "[time_nets]") {
    TimeNet net(1.0, {0.0, 0.5, 1.0});
    CHECK(bracketing_knots(net, 0.3) == std::make_pair(0.0, 0.5));
    CHECK(bracketing_knots(net, 0.5) == std::make_pair(0.5, 1.0));
    TimeNet single(1.0, {0.0, 1.0});
    CHECK(bracketing_knots(single, 0.0) == std::make_pair(0.0, 1.0));
    CHECK_THROWS(bracketing_knots(net, 1.0));
    CHECK_THROWS(bracketing_knots(net, -0.2));
}

TEST_CASE("interior monotonicity of the weighted increment", "[time_nets]") {
    // (t_i - u)/(T-u)^{1-theta} <= (t_i - t_{i-1})/(T-t_{i-1})^{1-theta} on [t_{i-1}, t_i]
    RngStream rng(314, 0);
    for (int trial = 0; trial < 50; ++trial) {
        double theta = rng.uniform(0.05, 1.0);
        std::vector<double> knots{0.0};
        for (int i = 0; i < 6; ++i) knots.push_back(knots.back() + rng.uniform(0.01, 0.3));
        double T = knots.back();
        TimeNet net(T, knots);
        const auto& t = net.knots();
        for (std::size_t i = 1; i < t.size(); ++i) {
            double rhs = (t[i] - t[i - 1]) / std::pow(T - t[i - 1], 1.0 - theta);
            for (int k = 0; k < 20; ++k) {
                double u = rng.uniform(t[i - 1], std::min(t[i], T - 1e-12));
                double lhs = (t[i] - u) / std::pow(T - u, 1.0 - theta);
                REQUIRE(lhs <= rhs + 1e-12);
            }
        }
    }
}
