#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracpath/sampled_path.hpp"
#include "fracpath/stats.hpp"

namespace fracpath {

namespace detail {
// (base)^e via explicit log-space evaluation once the exponent gets large,
// so small-theta runs cannot overflow intermediate products
inline double pow_signed_exp(double base, double e) {
    if (base <= 0.0) {
        if (base == 0.0 && e > 0.0) return 0.0;
        throw std::domain_error("pow_signed_exp: nonpositive base");
    }
    double le = e * std::log(base);
    if (std::fabs(le) > 30.0) return std::exp(le);
    return std::pow(base, e);
}
} // namespace detail

// The order-alpha transform of a step path is again a step path with the same
// jump times: on the segment [a_j, b_j) its value is
//   T^{-alpha} [ sum_{i<j} v_i ((T-a_i)^alpha - (T-b_i)^alpha) + v_j (T-a_j)^alpha ].
// All downstream identities (group law, inversion, jump identity) are exact
// sums over constancy intervals, no quadrature anywhere.
inline SampledPath rl_transform(const SampledPath& path, double alpha) {
    if (alpha == 0.0) return path;
    const double T = path.horizon();
    const auto& t = path.times();
    const auto& v = path.values();
    const std::size_t n = t.size();
    const double Ta = detail::pow_signed_exp(T, alpha);
    std::vector<double> out(n);
    double acc = 0.0; // running sum of completed-interval contributions
    for (std::size_t j = 0; j < n; ++j) {
        if (t[j] >= T) { // only possible for the last knot; t = T is outside the domain
            out[j] = j > 0 ? out[j - 1] : v[j];
            continue;
        }
        double ta = detail::pow_signed_exp(T - t[j], alpha);
        out[j] = (acc + v[j] * ta) / Ta;
        double b = (j + 1 < n) ? t[j + 1] : T;
        if (b < T) acc += v[j] * (ta - detail::pow_signed_exp(T - b, alpha));
    }
    return SampledPath(T, t, std::move(out));
}

// transform values at the requested times (0 is always included so the result
// is a valid path); alpha <= 0 refuses evaluation within 1e-9 of T
inline SampledPath rl_apply(const SampledPath& path, double alpha,
                            const std::vector<double>& eval_times) {
    const double T = path.horizon();
    for (double u : eval_times) {
        if (u < 0.0 || u >= T)
            throw std::out_of_range("rl_apply: eval times must lie in [0,T)");
        if (alpha <= 0.0 && u > T - 1e-9)
            throw std::domain_error("rl_apply: negative order too close to the horizon");
    }
    SampledPath tr = rl_transform(path, alpha);
    std::vector<double> times{0.0}, values{tr.evaluate(0.0)};
    for (double u : eval_times)
        if (u > times.back()) {
            times.push_back(u);
            values.push_back(tr.evaluate(u));
        }
    return SampledPath(T, std::move(times), std::move(values));
}

enum class ComposeMode { exact, dense };

// max_t | I^alpha(I^beta K)_t - I^{alpha+beta}_t K | over the eval times.
// exact: the inner transform is the exact step path. dense: the inner
// transform is re-sampled on a refinement grid (>= `dense_points` points merged
// with the jump times) before the outer transform is applied.
inline double rl_compose_check(const SampledPath& path, double alpha, double beta,
                               const std::vector<double>& eval_times,
                               ComposeMode mode = ComposeMode::exact,
                               std::size_t dense_points = 4096) {
    if (alpha + beta <= -1.0)
        throw std::invalid_argument("rl_compose_check: requires alpha + beta > -1");
    const double T = path.horizon();
    SampledPath inner = rl_transform(path, beta);
    if (mode == ComposeMode::dense) {
        std::vector<double> grid(dense_points);
        for (std::size_t i = 0; i < dense_points; ++i)
            grid[i] = T * static_cast<double>(i) / static_cast<double>(dense_points);
        std::vector<double> times = merge_knots(grid, path.times());
        std::vector<double> vals(times.size());
        for (std::size_t i = 0; i < times.size(); ++i) vals[i] = inner.evaluate(times[i]);
        inner = SampledPath(T, std::move(times), std::move(vals));
    }
    SampledPath lhs = rl_transform(inner, alpha);
    SampledPath rhs = rl_transform(path, alpha + beta);
    double dev = 0.0;
    for (double u : eval_times)
        dev = std::max(dev, std::fabs(lhs.evaluate(u) - rhs.evaluate(u)));
    return dev;
}

// max over interior jump times of | delta I^alpha K - ((T-t)/T)^alpha delta K |
inline double rl_jump_identity_check(const SampledPath& path, double alpha) {
    std::vector<double> jumps = path.jump_times();
    if (jumps.empty())
        throw std::invalid_argument("rl_jump_identity_check: path has no interior jump");
    const double T = path.horizon();
    SampledPath tr = rl_transform(path, alpha);
    double dev = 0.0;
    for (double u : jumps) {
        double expected = detail::pow_signed_exp((T - u) / T, alpha) * path.jump_at(u);
        dev = std::max(dev, std::fabs(tr.jump_at(u) - expected));
    }
    return dev;
}

// K_t - K_s recovered from the transformed record L = I^alpha K:
//   (T/(T-t))^alpha (L_t - L_s) - alpha T^alpha int_s^t (T-u)^{-alpha-1} (L_u - L_s) du
// with the integral summed exactly over the record's constancy intervals
inline double rl_inversion_reconstruct(const SampledPath& transformed, double alpha,
                                       double s, double t) {
    if (!(alpha > 0.0)) throw std::invalid_argument("rl_inversion_reconstruct: alpha must be > 0");
    const double T = transformed.horizon();
    if (!(0.0 <= s && s < t && t < T))
        throw std::out_of_range("rl_inversion_reconstruct: need 0 <= s < t < T");
    const double Ls = transformed.evaluate(s);
    const double Lt = transformed.evaluate(t);
    const auto& times = transformed.times();
    const auto& vals = transformed.values();
    double integral = 0.0; // equals (1/alpha) * int_s^t (T-u)^{-alpha-1} (L_u - L_s) du
    for (std::size_t j = 0; j < times.size(); ++j) {
        double a = std::max(times[j], s);
        double b = std::min(j + 1 < times.size() ? times[j + 1] : T, t);
        if (b <= a) continue;
        double w = detail::pow_signed_exp(T - b, -alpha) - detail::pow_signed_exp(T - a, -alpha);
        integral += (vals[j] - Ls) * w / alpha;
    }
    double Ta = detail::pow_signed_exp(T, alpha);
    return detail::pow_signed_exp(T / (T - t), alpha) * (Lt - Ls) - alpha * Ta * integral;
}

// two-sided control used alongside the reconstruction:
// |K_t - K_s| <= 2 (T/(T-t))^alpha sup_{u in [s,t]} |L_u - L_s|
inline double rl_inversion_bound(const SampledPath& transformed, double alpha,
                                 double s, double t) {
    const double T = transformed.horizon();
    const double Ls = transformed.evaluate(s);
    double sup = 0.0;
    sup = std::max(sup, std::fabs(transformed.evaluate(t) - Ls));
    for (double u : transformed.times())
        if (u >= s && u <= t)
            sup = std::max(sup, std::fabs(transformed.evaluate(u) - Ls));
    return 2.0 * detail::pow_signed_exp(T / (T - t), alpha) * sup;
}

} // namespace fracpath
