#include <catch2/catch.hpp>

#include <cmath>
#include <limits>

#include "fracpath/bmo.hpp"
#include "fracpath/hedging.hpp"
#include "fracpath/oscillation.hpp"
#include "fracpath/process.hpp"

using namespace fracpath;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

MarkovKernelModel brownian_model() {
    return MarkovKernelModel(ModelCase::bachelier, 1.0, 0.0, TestFunction::linear(), 1.0);
}
} // namespace

TEST_CASE("bmo estimator basics on exact kernels", "[bmo_oscillation]") {
    MarkovKernelModel m = brownian_model();
    MarkovFamily zero{&m, [](double, double) { return 0.0; }};
    MarkovFamily brown{&m, [](double, double x) { return x; }};
    auto phi1 = [](double, double) { return 1.0; };
    auto a_grid = linspace(0.0, 0.9, 7);
    auto z_grid = linspace(-2.0, 2.0, 5);
    auto t_grid = linspace(0.1, 1.0, 10);

    CHECK(estimate_bmo(zero, phi1, 2.0, BmoVariant::bmo, a_grid, z_grid, t_grid).value == 0.0);

    // sup_a E^{F_a}(W_T - W_a)^2 = T = 1
    auto est = estimate_bmo(brown, phi1, 2.0, BmoVariant::bmo, a_grid, z_grid, t_grid);
    CHECK(est.value == Approx(1.0).epsilon(1e-6));

    // deterministic-time reduction: both variants agree on continuous models
    auto est_cap = estimate_bmo(brown, phi1, 2.0, BmoVariant::BMO, a_grid, z_grid, t_grid);
    CHECK(est.value == est_cap.value);

    // grid refinement never decreases the inner approximation
    auto est_fine = estimate_bmo(brown, phi1, 2.0, BmoVariant::bmo, linspace(0.0, 0.95, 13),
                                 z_grid, linspace(0.05, 1.0, 20));
    CHECK(est_fine.value >= est.value - 1e-12);

    CHECK_THROWS_AS(estimate_bmo(brown, phi1, -1.0, BmoVariant::bmo, a_grid, z_grid, t_grid),
                    std::invalid_argument);
    CHECK_THROWS_AS(estimate_bmo(brown, phi1, 2.0, BmoVariant::bmo, {}, z_grid, t_grid),
                    std::invalid_argument);
}

TEST_CASE("smp estimators: constants, geometric weights, ordering", "[bmo_oscillation]") {
    auto a_grid = linspace(0.0, 0.9, 4);
    // Phi == 1
    CHECK(estimate_smp_geometric(0.0, 2.0, 1.0, 1.0, a_grid).value == Approx(1.0).margin(1e-12));
    // nonincreasing deterministic weight: running sup sits at a
    CHECK(estimate_smp_from_samples({1.0, 1.0, 1.0}, 2.0).value == Approx(1.0).margin(1e-12));

    // Phi = Y geometric Brownian: closed reflection form vs pathwise MC
    double closed = estimate_smp_geometric(1.0, 1.0, 1.0, 1.0, a_grid).value;
    RunningStat mc;
    const std::size_t steps = 4096;
    for (std::uint64_t r = 0; r < 4000; ++r) {
        RngStream rng(41, r);
        double w = 0.0, peak = 1.0;
        for (std::size_t j = 1; j <= steps; ++j) {
            w += std::sqrt(1.0 / steps) * rng.gaussian();
            peak = std::max(peak, std::exp(w - 0.5 * j / static_cast<double>(steps)));
        }
        mc.add(peak);
    }
    // discrete sampling understates the running sup slightly
    CHECK(closed >= mc.mean() - 3.0 * mc.stderr_mean());
    CHECK(closed <= mc.mean() + 3.0 * mc.stderr_mean() + 0.02);

    // SM_p ordering in p
    double s1 = estimate_smp_geometric(1.0, 1.0, 1.0, 1.0, a_grid).value;
    double s2 = estimate_smp_geometric(1.0, 2.0, 1.0, 1.0, a_grid).value;
    double s4 = estimate_smp_geometric(1.0, 4.0, 1.0, 1.0, a_grid).value;
    CHECK(s1 <= s2 + 1e-12);
    CHECK(s2 <= s4 + 1e-12);
}

TEST_CASE("besov-type norm of sampled sup-curves", "[bmo_oscillation]") {
    auto t = linspace(0.0, 1.0 - 1e-6, 400);
    std::vector<double> zero(t.size(), 0.0), pw(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) pw[i] = std::pow(1.0 - t[i], -0.25);
    CHECK(estimate_b_inf_q_alpha(t, zero, 1.0, 0.25, 2.0).value == 0.0);
    CHECK(estimate_b_inf_q_alpha(t, pw, 1.0, 0.25, kInf).value == Approx(1.0).margin(1e-12));

    // || . ||_{B_inf,inf^alpha} <= (alpha q)^{1/q} || . ||_{B_inf,q^alpha}
    for (double alpha : {0.25, 0.4}) {
        for (double q : {1.0, 2.0}) {
            std::vector<double> curve(t.size());
            for (std::size_t i = 0; i < t.size(); ++i)
                curve[i] = std::pow(1.0 - t[i], -alpha) / (2.0 - std::log1p(1.0 - t[i]));
            double sup_norm = estimate_b_inf_q_alpha(t, curve, 1.0, alpha, kInf).value;
            double q_norm = estimate_b_inf_q_alpha(t, curve, 1.0, alpha, q).value;
            CHECK(sup_norm <= std::pow(alpha * q, 1.0 / q) * q_norm * 1.01);
        }
    }
    // non-monotone input is flagged, still computed
    std::vector<double> wob(t.size(), 1.0);
    wob[5] = 0.5;
    CHECK_FALSE(estimate_b_inf_q_alpha(t, wob, 1.0, 0.25, 2.0).monotone_input);
}

TEST_CASE("gaussian moment equivalence ratio", "[bmo_oscillation]") {
    MarkovKernelModel m = brownian_model();
    MarkovFamily brown{&m, [](double, double x) { return x; }};
    MarkovFamily zero{&m, [](double, double) { return 0.0; }};
    double r = moment_equivalence_exact(brown, linspace(0.0, 0.8, 5), linspace(-1.5, 1.5, 5), 1.0);
    CHECK(r == Approx(std::pow(3.0, 0.25)).epsilon(1e-6)); // gaussian kurtosis^{1/4}
    CHECK(moment_equivalence_exact(zero, {0.0}, {0.0}, 1.0) == 1.0);
    CHECK(moment_equivalence_from_samples({}, 4) == 1.0);
}

TEST_CASE("oscillation curves on explicit fields", "[bmo_oscillation]") {
    auto grid = [](double) { return linspace(-2.0, 2.0, 41); };
    OscillationField constant([](double, double) { return 5.0; }, grid);
    auto c0 = constant.curve(linspace(0.2, 0.9, 8), linspace(0.0, 0.85, 18), 0.0);
    for (double v : c0.under) CHECK(v == 0.0);

    // time-independent but state-dependent: the oscillation does not vanish
    OscillationField statefn([](double, double x) { return x; }, grid);
    auto c1 = statefn.curve({0.5}, linspace(0.0, 0.45, 10), 0.0);
    CHECK(c1.under[0] == Approx(4.0).margin(1e-12)); // sup over product of |x - x'|

    // under <= over pointwise
    for (std::size_t i = 0; i < c0.t_grid.size(); ++i)
        CHECK(c0.under[i] <= c0.over[i] + 1e-12);
}

TEST_CASE("exact power law regression", "[bmo_oscillation]") {
    OscillationCurve curve;
    for (double ttm : logspace(1e-4, 0.5, 40)) {
        curve.t_grid.push_back(1.0 - ttm);
        curve.under.push_back(std::pow(ttm, -0.25));
        curve.over.push_back(std::pow(ttm, -0.25));
        curve.dist_to_start.push_back(0.0);
    }
    OlsFit fit = oscillation_rate_regression(curve, 1.0);
    CHECK(fit.slope == Approx(-0.25).margin(1e-9));

    OscillationCurve bad = curve;
    bad.under[1] = 0.0; // inside the last decade of time-to-maturity
    CHECK_THROWS_AS(oscillation_rate_regression(bad, 1.0), std::domain_error);
}

TEST_CASE("delta field oscillation: certificate, martingale relation, rate",
          "[bmo_oscillation][slow]") {
    // binary-type payoff at theta = 1/2 drives a (T-t)^{-1/4} oscillation
    const double theta = 0.5;
    TestFunction g = TestFunction::h_theta_a(theta, 0.0, 2.0, std::exp(-0.5));
    MarkovKernelModel m(ModelCase::black_scholes, 1.0, 1.0, g, 1.0);
    auto support = [&](double t) {
        return level_node_layout(m, t, 33, 25);
    };
    OscillationField zfield([&](double t, double x) { return m.Zx(t, x); }, support);
    std::vector<double> t_grid, s_grid;
    for (double ttm : logspace(1e-4, 0.9, 22)) t_grid.push_back(1.0 - ttm);
    std::sort(t_grid.begin(), t_grid.end());
    for (double ttm : logspace(5e-5, 0.95, 40)) s_grid.push_back(1.0 - ttm);
    s_grid.push_back(0.0);
    std::sort(s_grid.begin(), s_grid.end());
    auto curve = zfield.curve(t_grid, s_grid, m.state_to_x(1.0));

    OlsFit fit = oscillation_rate_regression(curve, 1.0);
    INFO("oscillation slope " << fit.slope);
    CHECK(fit.slope == Approx(-0.25).margin(0.05));
    CHECK(maximal_oscillation_certificate(curve));
    // martingale fields: over-oscillation <= 2 under-oscillation
    for (std::size_t i = 0; i < curve.t_grid.size(); ++i)
        CHECK(curve.over[i] <= 2.0 * curve.under[i] * 1.02 + 1e-12);

    // Lipschitz payoff: bounded gradient, flat oscillation decay
    MarkovKernelModel mc2(ModelCase::black_scholes, 1.0, 1.0, TestFunction::call(1.0), 1.0);
    OscillationField cfield([&](double t, double x) { return mc2.Zx(t, x); },
                            [&](double t) { return level_node_layout(mc2, t, 33, 25); });
    auto ccurve = cfield.curve(t_grid, s_grid, mc2.state_to_x(1.0));
    OlsFit cfit = oscillation_rate_regression(ccurve, 1.0);
    CHECK(cfit.slope >= -0.05);
    CHECK(maximal_oscillation_certificate(ccurve));
}
