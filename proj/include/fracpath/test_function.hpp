#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fracpath/quadrature.hpp"

namespace fracpath {

namespace detail {

// h profile: x -> theta * int_0^{1 ^ x} y^{theta-1} (A/(A-log y))^a dy for x >= 0,
// 0 for x < 0. In the substituted variable u = y^theta the integrand becomes
// the bounded density (A/(A - log(u)/theta))^a, so the cumulative table below
// is Lipschitz in u and cheap to refine at evaluation time.
class HProfile {
public:
    HProfile(double theta, double a, double A) : theta_(theta), a_(a), A_(A) {
        if (!(theta > 0.0 && theta < 1.0))
            throw std::invalid_argument("h_theta_a: theta must lie in (0,1)");
        if (!(A > 0.0) || !(a >= 0.0) || !(a < (1.0 - theta) * A))
            throw std::invalid_argument("h_theta_a: requires 0 <= a < (1-theta)A");
        if (a_ > 0.0) {
            u_grid_ = logspace(1e-12, 1.0, 8193);
            cum_.assign(u_grid_.size(), 0.0);
            dens_.assign(u_grid_.size(), 0.0);
            for (std::size_t i = 0; i < u_grid_.size(); ++i) dens_[i] = density_u(u_grid_[i]);
            QuadNodes gl = gauss_legendre(12);
            for (std::size_t i = 1; i < u_grid_.size(); ++i) {
                double lo = u_grid_[i - 1], hi = u_grid_[i], panel = 0.0;
                for (std::size_t k = 0; k < gl.x.size(); ++k) {
                    double u = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[k];
                    panel += 0.5 * (hi - lo) * gl.w[k] * density_u(u);
                }
                cum_[i] = cum_[i - 1] + panel;
            }
        }
    }

    // integrand in u coordinates; this is also the clipped "derivative density"
    // the K-functional split uses (h'(x) dx = density_u(u) du with u = x^theta)
    double density_u(double u) const {
        return std::pow(A_ / (A_ - std::log(u) / theta_), a_);
    }

    double value(double x) const {
        if (x <= 0.0) return 0.0;
        double u = std::pow(std::min(x, 1.0), theta_);
        if (a_ == 0.0) return u; // h_{theta,0}(x) = (x^theta) ^ 1
        return cum_at(u);
    }

    double plateau() const { return a_ == 0.0 ? 1.0 : cum_.back(); }
    double theta() const { return theta_; }
    double a() const { return a_; }
    double A() const { return A_; }

    // exact clip-at-level split: h = h1 + hb with |h1|_Lip <= lambda (in x) and
    // |hb|_inf returned; lambda ranges over the density K(x) = theta x^{theta-1} (...)^a
    std::pair<double, double> clip_split(double lambda) const {
        // K is decreasing on (0,1]; find y_l with K(y_l) = lambda by bisection
        double kx1 = density_x(1.0);
        if (lambda <= kx1) return {value(1.0) - lambda * 1.0, lambda};
        double lo = 1e-300, hi = 1.0;
        for (int it = 0; it < 200; ++it) {
            double mid = std::sqrt(lo * hi);
            (density_x(mid) > lambda ? lo : hi) = mid;
        }
        double yl = std::sqrt(lo * hi);
        return {value(yl) - lambda * yl, lambda};
    }

    double density_x(double x) const {
        return theta_ * std::pow(x, theta_ - 1.0) * density_u(std::pow(x, theta_));
    }

private:
    double cum_at(double u) const {
        if (u <= u_grid_.front()) return u * density_u(u_grid_.front());
        auto it = std::lower_bound(u_grid_.begin(), u_grid_.end(), u);
        std::size_t i = static_cast<std::size_t>(it - u_grid_.begin());
        if (i == 0) return cum_[0];
        // trapezoid on the cached density; the nodes are dense enough in log u
        // that this stays below 1e-10 absolute
        double lo = u_grid_[i - 1];
        double w = (u - lo) / (u_grid_[i] - lo);
        double d_hi = (1.0 - w) * dens_[i - 1] + w * dens_[i];
        return cum_[i - 1] + 0.5 * (u - lo) * (dens_[i - 1] + d_hi);
    }

    double theta_, a_, A_;
    std::vector<double> u_grid_;
    std::vector<double> cum_;
    std::vector<double> dens_;
};

} // namespace detail

enum class TestFunctionKind { h_theta_a, powered_call, binary, call, linear, custom };

// Payoff / terminal-condition profiles shared by the kernel, hedging and
// interpolation code. kinks() lists the points where the profile is not
// smooth so Gaussian quadratures can split there.
class TestFunction {
public:
    static TestFunction h_theta_a(double theta, double a, double A, double shift = 0.0) {
        TestFunction f;
        f.kind_ = TestFunctionKind::h_theta_a;
        auto prof = std::make_shared<detail::HProfile>(theta, a, A);
        f.eval_ = [prof, shift](double x) { return prof->value(x - shift); };
        f.kinks_ = {shift, shift + 1.0};
        f.bounded_ = true;
        f.profile_ = prof;
        f.shift_ = shift;
        f.holder_ = theta;
        return f;
    }
    static TestFunction powered_call(double gamma, double strike) {
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw std::invalid_argument("powered_call: gamma must lie in (0,1]");
        TestFunction f;
        f.kind_ = TestFunctionKind::powered_call;
        f.eval_ = [gamma, strike](double x) {
            double d = x - strike;
            return d > 0.0 ? std::pow(d, gamma) : 0.0;
        };
        f.kinks_ = {strike};
        f.bounded_ = false;
        f.strike_ = strike;
        f.gamma_ = gamma;
        f.holder_ = gamma;
        return f;
    }
    static TestFunction binary(double strike) {
        TestFunction f;
        f.kind_ = TestFunctionKind::binary;
        f.eval_ = [strike](double x) { return x >= strike ? 1.0 : 0.0; };
        f.kinks_ = {strike};
        f.jumps_ = {{strike, 1.0}};
        f.bounded_ = true;
        f.strike_ = strike;
        f.holder_ = 0.0;
        return f;
    }
    static TestFunction call(double strike) {
        TestFunction f;
        f.kind_ = TestFunctionKind::call;
        f.eval_ = [strike](double x) { return x > strike ? x - strike : 0.0; };
        f.kinks_ = {strike};
        f.bounded_ = false;
        f.strike_ = strike;
        return f;
    }
    static TestFunction linear() {
        TestFunction f;
        f.kind_ = TestFunctionKind::linear;
        f.eval_ = [](double x) { return x; };
        f.bounded_ = false;
        return f;
    }
    static TestFunction custom(std::function<double(double)> fn,
                               std::vector<double> kinks = {}, bool bounded = true,
                               double holder_exponent = 1.0,
                               std::vector<std::pair<double, double>> jumps = {}) {
        TestFunction f;
        f.kind_ = TestFunctionKind::custom;
        f.eval_ = std::move(fn);
        f.kinks_ = std::move(kinks);
        f.bounded_ = bounded;
        f.holder_ = holder_exponent;
        f.jumps_ = std::move(jumps);
        return f;
    }

    double operator()(double x) const { return eval_(x); }
    TestFunctionKind kind() const { return kind_; }
    const std::vector<double>& kinks() const { return kinks_; }
    // discontinuities as (location, jump size); empty for continuous profiles
    const std::vector<std::pair<double, double>>& jumps() const { return jumps_; }
    bool bounded() const { return bounded_; }
    double strike() const { return strike_; }
    double gamma() const { return gamma_; }
    // Holder regularity of the profile (1 for Lipschitz shapes, 0 for jumps);
    // drives the maturity-end substitution exponents in the oracles
    double holder_exponent() const { return holder_; }
    double shift() const { return shift_; }
    const detail::HProfile* profile() const { return profile_.get(); }

private:
    TestFunctionKind kind_ = TestFunctionKind::custom;
    std::function<double(double)> eval_;
    std::vector<double> kinks_;
    std::vector<std::pair<double, double>> jumps_;
    bool bounded_ = true;
    double strike_ = 0.0;
    double gamma_ = 1.0;
    double shift_ = 0.0;
    double holder_ = 1.0;
    std::shared_ptr<detail::HProfile> profile_;
};

} // namespace fracpath
