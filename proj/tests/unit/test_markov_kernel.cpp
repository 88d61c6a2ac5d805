#include <catch2/catch.hpp>

#include <cmath>

#include "fracpath/markov_kernel.hpp"
#include "fracpath/stats.hpp"

using namespace fracpath;

namespace {
MarkovKernelModel bs_model(TestFunction payoff, double sig = 1.0, double T = 1.0) {
    return MarkovKernelModel(ModelCase::black_scholes, sig, 1.0, std::move(payoff), T);
}
} // namespace

TEST_CASE("linear payoff gives the martingale kernel", "[markov_kernel]") {
    MarkovKernelModel m = bs_model(TestFunction::linear());
    for (double t : {0.0, 0.3, 0.9}) {
        for (double y : {0.4, 1.0, 2.7}) {
            CHECK(m.kernel_G(t, y) == Approx(y).epsilon(1e-10));
            CHECK(m.kernel_phi(t, y) == Approx(1.0).epsilon(1e-9));
            CHECK(m.kernel_H(t, y) == Approx(0.0).margin(1e-8));
        }
    }
}

TEST_CASE("call kernels match the closed forms", "[markov_kernel]") {
    MarkovKernelModel m = bs_model(TestFunction::call(1.0));
    CHECK(m.kernel_phi(0.0, 1.0) == Approx(normal_cdf(0.5)).epsilon(1e-9));
    CHECK(normal_cdf(0.5) == Approx(0.6914624613).epsilon(1e-9));
    for (double t : {0.0, 0.5, 0.99}) {
        double s = 1.0 - t;
        for (double y : {0.5, 0.95, 1.0, 1.4}) {
            CHECK(m.kernel_G(t, y)
                  == Approx(bs_call_price(y, 1.0, 1.0, s)).epsilon(1e-9).margin(1e-11));
            CHECK(m.kernel_phi(t, y)
                  == Approx(bs_call_delta(y, 1.0, 1.0, s)).epsilon(1e-8).margin(1e-11));
        }
    }

    MarkovKernelModel mb(ModelCase::bachelier, 0.7, 0.2, TestFunction::call(0.3), 1.0);
    for (double t : {0.0, 0.6})
        for (double y : {-0.5, 0.2, 0.8})
            CHECK(mb.kernel_phi(t, y)
                  == Approx(bachelier_call_delta(y, 0.3, 0.7, 1.0 - t)).epsilon(1e-8));
}

TEST_CASE("kernels satisfy the backward equation", "[markov_kernel]") {
    // dG/dt + H/2 = 0, H = sigma^2 d2G/dy2, central difference in t
    for (ModelCase mc : {ModelCase::black_scholes, ModelCase::bachelier}) {
        MarkovKernelModel m(mc, 0.8, 1.0, TestFunction::call(1.1), 1.0);
        for (double t : {0.2, 0.5, 0.8}) {
            double ht = 1e-5 * (1.0 - t);
            auto grid = m.state_grid(t, 7, 0.02);
            double h_scale = 0.0;
            for (double y : grid) h_scale = std::max(h_scale, std::fabs(m.kernel_H(t, y)));
            for (double y : grid) {
                double dGdt = (m.kernel_G(t + ht, y) - m.kernel_G(t - ht, y)) / (2.0 * ht);
                double H = m.kernel_H(t, y);
                REQUIRE(std::fabs(dGdt + 0.5 * H) < 1e-5 * std::max(h_scale, 1.0));
            }
        }
    }
}

TEST_CASE("holder payoffs obey the gradient bound with one constant", "[markov_kernel]") {
    // |phi(t,y)| <= c |g|_theta sigma(y)^{theta-1} (T-t)^{(theta-1)/2}
    const double theta = 0.5;
    TestFunction g = TestFunction::h_theta_a(theta, 0.0, 2.0, std::exp(-0.5));
    MarkovKernelModel m = bs_model(g);
    auto fitted = [&](std::size_t nt, std::size_t ny) {
        double c = 0.0;
        for (double t : linspace(0.05, 0.98, nt))
            for (double y : m.state_grid(t, ny, 0.01)) {
                double bound = std::pow(m.sigma(y), theta - 1.0)
                             * std::pow(1.0 - t, 0.5 * (theta - 1.0));
                c = std::max(c, std::fabs(m.kernel_phi(t, y)) / bound);
            }
        return c;
    };
    double c_coarse = fitted(8, 9);
    double c_fine = fitted(16, 17);
    CHECK(c_fine < 10.0);
    CHECK(c_fine <= c_coarse * 1.5 + 0.2); // one constant works across grids
}

TEST_CASE("construction rejects inadmissible payoffs and bad queries", "[markov_kernel]") {
    CHECK_THROWS_AS(bs_model(TestFunction::custom([](double y) { return y * y; }, {}, false)),
                    std::invalid_argument); // super-affine in the exponential case
    CHECK_THROWS_AS(MarkovKernelModel(ModelCase::bachelier, 1.0, 0.0,
                                      TestFunction::custom(
                                          [](double y) { return std::exp(std::fabs(y)); }, {},
                                          false),
                                      1.0),
                    std::invalid_argument); // faster than polynomial
    MarkovKernelModel m = bs_model(TestFunction::call(1.0));
    CHECK_THROWS_AS(m.kernel_phi(1.0, 1.0), std::domain_error); // t >= T
    CHECK_THROWS_AS(m.kernel_phi(0.5, -1.0), std::domain_error); // state space (0,inf)
    CHECK_NOTHROW(bs_model(TestFunction::call(1.0))); // affine growth is admitted
}

TEST_CASE("phi tables reproduce the kernel along levels", "[markov_kernel]") {
    MarkovKernelModel m = bs_model(TestFunction::powered_call(0.5, 1.0));
    std::vector<double> levels = {0.1, 0.5, 0.9, 0.999};
    PhiTable table(m, levels);
    for (std::size_t l = 0; l < levels.size(); ++l) {
        double t = levels[l];
        for (double y : m.state_grid(std::max(t, 1e-3), 21, 1e-3)) {
            double x = m.state_to_x(y);
            double exact = m.phix(t, x);
            double interp = table.phi_at_level(l, x);
            REQUIRE(std::fabs(interp - exact) < 2e-6 * (1.0 + std::fabs(exact)));
        }
    }
}

TEST_CASE("quadrature kernels reproduce the closed forms", "[markov_kernel]") {
    for (ModelCase mc : {ModelCase::black_scholes, ModelCase::bachelier}) {
        MarkovKernelModel m(mc, 0.9, 1.0, TestFunction::call(1.05), 1.0);
        MarkovKernelModel mb(mc, 0.9, 1.0, TestFunction::binary(1.05), 1.0);
        for (double t : {0.1, 0.6, 0.97}) {
            for (double y : m.state_grid(std::max(t, 0.05), 9, 0.01)) {
                double x = m.state_to_x(y);
                for (int d : {0, 1, 2}) {
                    double cf = d == 0 ? m.F(t, x) : (d == 1 ? m.Fx(t, x) : m.Fxx(t, x));
                    double qd = m.F_quadrature(t, x, d);
                    REQUIRE(std::fabs(qd - cf) <= 1e-9 * (1.0 + std::fabs(cf)));
                    double cfb = d == 0 ? mb.F(t, x) : (d == 1 ? mb.Fx(t, x) : mb.Fxx(t, x));
                    double qb = mb.F_quadrature(t, x, d);
                    REQUIRE(std::fabs(qb - cfb) <= 1e-9 * (1.0 + std::fabs(cfb)));
                }
            }
        }
    }
}

TEST_CASE("gauss-hermite rule integrates gaussian moments", "[markov_kernel]") {
    for (std::size_t n : {21ul, 64ul, 201ul}) {
        QuadNodes q = gauss_hermite(n);
        double m0 = 0, m2 = 0, m4 = 0;
        for (std::size_t i = 0; i < n; ++i) {
            m0 += q.w[i];
            m2 += q.w[i] * q.x[i] * q.x[i];
            m4 += q.w[i] * std::pow(q.x[i], 4);
        }
        double sp = std::sqrt(3.141592653589793);
        CHECK(m0 == Approx(sp).epsilon(1e-12));
        CHECK(m2 == Approx(0.5 * sp).epsilon(1e-12));
        CHECK(m4 == Approx(0.75 * sp).epsilon(1e-12));
    }
}
