#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fracpath/process.hpp"
#include "fracpath/quadrature.hpp"
#include "fracpath/rng.hpp"
#include "fracpath/sampled_path.hpp"
#include "fracpath/stats.hpp"
#include "fracpath/time_net.hpp"

namespace fracpath {

// int_0^a | phi_u - sum_i phi_{t_{i-1}} 1_{(t_{i-1},t_i]}(u) |^2 sigma_u^2 du,
// exact over the joint constancy intervals of phi, sigma and the net
inline double square_function(const SampledPath& phi, const TimeNet& net,
                              const SampledPath* sigma, double a) {
    if (a > net.horizon() || a < 0.0)
        throw std::out_of_range("square_function: a must lie in [0,T]");
    if (a == 0.0) return 0.0;
    const auto& knots = net.knots();
    std::vector<double> cuts = merge_knots(phi.times(), knots);
    if (sigma) cuts = merge_knots(cuts, sigma->times());
    cuts.push_back(a);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    double total = 0.0;
    std::size_t seg = 1; // net interval index: u in (knots[seg-1], knots[seg]]
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
        double lo = cuts[c], hi = std::min(cuts[c + 1], a);
        if (hi <= lo) break;
        while (seg + 1 < knots.size() && knots[seg] <= lo) ++seg;
        double pred = phi.evaluate(knots[seg - 1]);
        double d = phi.evaluate(lo) - pred;
        double s2 = sigma ? sigma->evaluate(lo) * sigma->evaluate(lo) : 1.0;
        total += d * d * s2 * (hi - lo);
    }
    return total;
}

inline double square_function(const SampledPath& phi, const TimeNet& net, double a) {
    return square_function(phi, net, nullptr, a);
}

// closed-form E[(2 theta n / T) [W; tau_n^theta]_b] for Brownian W:
// (2 theta n / T) sum_i (min(t_i, b) - t_{i-1})^2 / 2
inline double scaled_sq_expectation_oracle(double theta, std::size_t n, double b, double T) {
    if (!(b < T)) throw std::out_of_range("scaled_sq_expectation_oracle: b must be below T");
    TimeNet net = adapted_net(T, theta, n);
    const auto& t = net.knots();
    double acc = 0.0;
    for (std::size_t i = 1; i < t.size(); ++i) {
        if (t[i - 1] >= b) break;
        double len = std::min(t[i], b) - t[i - 1];
        acc += 0.5 * len * len;
    }
    return acc * 2.0 * theta * static_cast<double>(n) / T;
}

// [I^{(1-theta)/2} W]_b = int_0^b ((T-u)/T)^{1-theta} du, deterministic for Brownian W
inline double scaled_sq_target(double theta, double b, double T) {
    double p = 2.0 - theta;
    return std::pow(T, theta - 1.0) * (std::pow(T, p) - std::pow(T - b, p)) / p;
}

struct ScalingLimitRow {
    std::size_t n = 0;
    double theta = 0.0;
    double b = 0.0;
    double l1_distance = 0.0;
    double stderr_l1 = 0.0;
    double target = 0.0;
};

struct ScalingLimitReport {
    std::vector<ScalingLimitRow> rows;
    bool monotone = true;          // L1 distance decreases along n_list
    bool terminal_pass = true;     // last row under max(0.02 target, 3 stderr)
};

// Monte Carlo estimate of E | (2 theta n / T) [W; tau_n^theta]_b - target |.
// Each net interval is split into `subcells` cells; the square function is
// accumulated as the bridge-exact conditional expectation given the sampled
// increments, so the estimator mean carries no mesh bias.
inline ScalingLimitReport scaling_limit_experiment(double theta, double b,
                                                   const std::vector<std::size_t>& n_list,
                                                   std::size_t replicas, std::uint64_t seed,
                                                   double T = 1.0, std::size_t subcells = 16) {
    if (!(b > 0.0 && b < T))
        throw std::out_of_range("scaling_limit_experiment: b must lie in (0,T)");
    ScalingLimitReport rep;
    double target = scaled_sq_target(theta, b, T);
    for (std::size_t n : n_list) {
        TimeNet net = adapted_net(T, theta, n);
        const auto& k = net.knots();
        // cell boundaries: per net interval clipped at b
        std::vector<double> cells{0.0};
        std::vector<std::size_t> owner; // net interval of each cell
        for (std::size_t i = 1; i < k.size() && k[i - 1] < b; ++i) {
            double hi = std::min(k[i], b);
            for (std::size_t c = 1; c <= subcells; ++c) {
                double u = k[i - 1] + (hi - k[i - 1]) * static_cast<double>(c)
                                        / static_cast<double>(subcells);
                cells.push_back(u);
                owner.push_back(i);
            }
        }
        RunningStat dist;
        const double scale = 2.0 * theta * static_cast<double>(n) / T;
        for (std::uint64_t r = 0; r < replicas; ++r) {
            RngStream rng(seed, r);
            double acc = 0.0;
            double w = 0.0, w_ref = 0.0;
            std::size_t cur = 0;
            for (std::size_t c = 1; c < cells.size(); ++c) {
                if (owner[c - 1] != cur) { cur = owner[c - 1]; w_ref = w; }
                double dt = cells[c] - cells[c - 1];
                double w_next = w + std::sqrt(dt) * rng.gaussian();
                double A = w - w_ref, B = w_next - w_ref;
                acc += dt / 3.0 * (A * A + A * B + B * B) + dt * dt / 6.0;
                w = w_next;
            }
            dist.add(std::fabs(scale * acc - target));
        }
        rep.rows.push_back({n, theta, b, dist.mean(), dist.stderr_mean(), target});
    }
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].l1_distance > rep.rows[i - 1].l1_distance) rep.monotone = false;
    const auto& last = rep.rows.back();
    rep.terminal_pass =
        last.l1_distance <= std::max(0.02 * std::fabs(target), 3.0 * last.stderr_l1);
    return rep;
}

// randomized-net variant on the compensated compound Poisson martingale:
// E | (2 theta n / T) int_0^1 [L; tau_n^{theta,r}]_b dr - [I^{(1-theta)/2} L]_{b-} |
// with a 16-point Gauss-Legendre rule in r and everything exact per path
inline ScalingLimitReport scaling_limit_randomized_jumps(double theta, double b,
                                                         const std::vector<std::size_t>& n_list,
                                                         std::size_t replicas,
                                                         std::uint64_t seed, double T = 1.0) {
    ProcessSpec spec = ProcessSpec::compound_poisson(T, {{+1.0, 1.0}, {-1.0, 1.0}});
    QuadNodes rq = gauss_legendre_on(16, 0.0, 1.0);
    ScalingLimitReport rep;
    double alpha2 = 1.0 - theta; // 2 * (1-theta)/2
    for (std::size_t n : n_list) {
        std::vector<TimeNet> nets;
        nets.reserve(rq.x.size());
        for (double r : rq.x) nets.push_back(randomized_net(T, theta, n, r));
        RunningStat dist;
        const double scale = 2.0 * theta * static_cast<double>(n) / T;
        for (std::uint64_t rep_i = 0; rep_i < replicas; ++rep_i) {
            RngStream rng(seed, rep_i);
            SampledPath L = simulate_path(spec, {0.0}, rng);
            double target = 0.0;
            for (double s : L.jump_times())
                if (s < b) {
                    double j = L.jump_at(s);
                    target += std::pow((T - s) / T, alpha2) * j * j;
                }
            double avg = 0.0;
            for (std::size_t q = 0; q < nets.size(); ++q)
                avg += rq.w[q] * square_function(L, nets[q], b);
            dist.add(std::fabs(scale * avg - target));
        }
        rep.rows.push_back({n, theta, b, dist.mean(), dist.stderr_mean(), 0.0});
    }
    for (std::size_t i = 1; i < rep.rows.size(); ++i)
        if (rep.rows[i].l1_distance > rep.rows[i - 1].l1_distance) rep.monotone = false;
    rep.terminal_pass = rep.monotone;
    return rep;
}

} // namespace fracpath
