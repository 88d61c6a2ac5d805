#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fracpath/quadrature.hpp"
#include "fracpath/stats.hpp"
#include "fracpath/test_function.hpp"

namespace fracpath {

enum class ModelCase { bachelier, black_scholes };

// Constant-coefficient diffusion laboratory. Two cases share one x-coordinate:
//   bachelier      Y_t = y0 + sig W_t,                 x = y,      state space R
//   black_scholes  Y_t = y0 exp(sig W_t - sig^2 t/2),  x = log y,  state space (0,inf)
// G(t,y) = E g(Y_T | Y_t = y), phi = dG/dy, Z = sigma(y) phi, H = sigma^2 d2G/dy2.
// All kernels are Gaussian quadratures of the payoff with score weights; the
// quadrature splits at the payoff kinks so kinked profiles keep full accuracy.
class MarkovKernelModel {
public:
    MarkovKernelModel(ModelCase mc, double sigma_hat, double y0, TestFunction payoff,
                      double horizon)
        : case_(mc), sig_(sigma_hat), y0_(y0), payoff_(std::move(payoff)), T_(horizon) {
        if (!(sig_ > 0.0)) throw std::invalid_argument("MarkovKernelModel: sigma_hat must be > 0");
        if (!(T_ > 0.0)) throw std::invalid_argument("MarkovKernelModel: horizon must be > 0");
        if (case_ == ModelCase::black_scholes && !(y0_ > 0.0))
            throw std::invalid_argument("MarkovKernelModel: y0 must be > 0 in the exponential case");
        growth_probe();
        for (double k : payoff_.kinks()) {
            if (case_ == ModelCase::bachelier) fkinks_.push_back(k);
            else if (k > 0.0) fkinks_.push_back(std::log(k));
        }
    }

    ModelCase model_case() const { return case_; }
    double sigma_hat() const { return sig_; }
    double y0() const { return y0_; }
    double horizon() const { return T_; }
    const TestFunction& payoff() const { return payoff_; }
    const std::vector<double>& x_kinks() const { return fkinks_; }

    double sigma(double y) const {
        check_state(y);
        return case_ == ModelCase::bachelier ? sig_ : sig_ * y;
    }

    double state_to_x(double y) const {
        check_state(y);
        return case_ == ModelCase::bachelier ? y : std::log(y);
    }
    double x_to_state(double x) const {
        return case_ == ModelCase::bachelier ? x : std::exp(x);
    }

    // marginal law of X_t = state_to_x(Y_t)
    double x_mean(double t) const {
        double x0 = state_to_x(y0_);
        return case_ == ModelCase::bachelier ? x0 : x0 - 0.5 * sig_ * sig_ * t;
    }
    double x_std(double t) const { return sig_ * std::sqrt(t); }

    // payoff as a function of x
    double f_of_x(double x) const { return payoff_(x_to_state(x)); }

    // F(t,x) = E f(x + drift (T-t) + sig sqrt(T-t) Z)
    double F(double t, double x) const {
        if (double v; closed_form(t, x, 0, v)) return v;
        return moment_kernel(t, x, 0);
    }
    double Fx(double t, double x) const {
        require_interior(t);
        if (double v; closed_form(t, x, 1, v)) return v;
        double s = T_ - t;
        return moment_kernel(t, x, 1) / (sig_ * std::sqrt(s));
    }
    double Fxx(double t, double x) const {
        require_interior(t);
        if (double v; closed_form(t, x, 2, v)) return v;
        double s = T_ - t;
        return moment_kernel(t, x, 2) / (sig_ * sig_ * s);
    }

    bool has_closed_form() const {
        auto k = payoff_.kind();
        return k == TestFunctionKind::call || k == TestFunctionKind::binary ||
               k == TestFunctionKind::linear;
    }

    // quadrature-only evaluation path (cross-checked against the closed forms)
    double F_quadrature(double t, double x, int deriv) const {
        double s = T_ - t;
        if (deriv == 0) return moment_kernel(t, x, 0);
        if (deriv == 1) return moment_kernel(t, x, 1) / (sig_ * std::sqrt(s));
        return moment_kernel(t, x, 2) / (sig_ * sig_ * s);
    }

    double kernel_G(double t, double y) const {
        if (t >= T_) { check_state(y); return payoff_(y); }
        return F(t, state_to_x(y));
    }
    double kernel_phi(double t, double y) const {
        check_state(y);
        double fx = Fx(t, state_to_x(y));
        return case_ == ModelCase::bachelier ? fx : fx / y;
    }
    double kernel_H(double t, double y) const {
        check_state(y);
        double x = state_to_x(y);
        double fxx = Fxx(t, x);
        if (case_ == ModelCase::bachelier) return sig_ * sig_ * fxx;
        return sig_ * sig_ * (fxx - Fx(t, x));
    }
    // Z(t,y) = sigma(y) phi(t,y) = sig * Fx in both cases
    double kernel_Z(double t, double y) const { return sig_ * Fx(t, state_to_x(y)); }

    // x-coordinate variants used by the conditional oracles
    double Zx(double t, double x) const { return sig_ * Fx(t, x); }
    double Hx(double t, double x) const {
        double fxx = Fxx(t, x);
        if (case_ == ModelCase::bachelier) return sig_ * sig_ * fxx;
        return sig_ * sig_ * (fxx - Fx(t, x));
    }
    double phix(double t, double x) const {
        double fx = Fx(t, x);
        return case_ == ModelCase::bachelier ? fx : fx / x_to_state(x);
    }

    // quantile-spanning state grid of Y_t (affine in x; geometric in y for the
    // exponential case)
    std::vector<double> state_grid(double t, std::size_t n, double tail_mass = 1e-4) const {
        double z = inverse_normal_cdf(1.0 - tail_mass);
        double lo = x_mean(t) - z * x_std(t), hi = x_mean(t) + z * x_std(t);
        if (t == 0.0) { lo = state_to_x(y0_); hi = lo + 1e-12; }
        std::vector<double> xs = linspace(lo, hi, n), ys(n);
        for (std::size_t i = 0; i < n; ++i) ys[i] = x_to_state(xs[i]);
        return ys;
    }

    static double inverse_normal_cdf(double p) {
        // Newton on the cdf from a rough logistic start; plenty for grid spans
        double x = 0.0;
        for (int it = 0; it < 80; ++it) {
            double err = normal_cdf(x) - p;
            double step = err / std::max(normal_pdf(x), 1e-300);
            x -= std::clamp(step, -1.0, 1.0);
            if (std::fabs(err) < 1e-14) break;
        }
        return x;
    }

private:
    void check_state(double y) const {
        if (case_ == ModelCase::black_scholes && !(y > 0.0))
            throw std::domain_error("MarkovKernelModel: state must be positive");
    }
    void require_interior(double t) const {
        if (!(t < T_))
            throw std::domain_error("MarkovKernelModel: derivative kernels need t < T");
    }

    double moment_kernel(double t, double x, int moment) const {
        double s = T_ - t;
        double mu = x + (case_ == ModelCase::black_scholes ? -0.5 * sig_ * sig_ * s : 0.0);
        auto f = [this](double xi) { return f_of_x(xi); };
        return gaussian_expectation(f, mu, sig_ * std::sqrt(s), moment, fkinks_);
    }

    // exact kernels for the three classic profiles
    bool closed_form(double t, double x, int deriv, double& out) const {
        auto kind = payoff_.kind();
        if (kind != TestFunctionKind::call && kind != TestFunctionKind::binary &&
            kind != TestFunctionKind::linear)
            return false;
        double s = T_ - t, rs = sig_ * std::sqrt(std::max(s, 0.0));
        if (case_ == ModelCase::bachelier) {
            if (kind == TestFunctionKind::linear) {
                out = deriv == 0 ? x : (deriv == 1 ? 1.0 : 0.0);
                return true;
            }
            double K = payoff_.strike();
            if (s <= 0.0) return false;
            double d = (x - K) / rs;
            if (kind == TestFunctionKind::call)
                out = deriv == 0 ? (x - K) * normal_cdf(d) + rs * normal_pdf(d)
                    : (deriv == 1 ? normal_cdf(d) : normal_pdf(d) / rs);
            else
                out = deriv == 0 ? normal_cdf(d)
                    : (deriv == 1 ? normal_pdf(d) / rs : -d * normal_pdf(d) / (rs * rs));
            return true;
        }
        double y = std::exp(x);
        if (kind == TestFunctionKind::linear) {
            out = y; // E Y = y for all derivatives orders 0 and 1, y for 2 as well
            if (deriv >= 1) out = y;
            return true;
        }
        double K = payoff_.strike();
        if (!(K > 0.0) || s <= 0.0) return false;
        double d1 = (x - std::log(K) + 0.5 * rs * rs) / rs;
        double d2 = d1 - rs;
        if (kind == TestFunctionKind::call) {
            if (deriv == 0) out = y * normal_cdf(d1) - K * normal_cdf(d2);
            else if (deriv == 1) out = y * normal_cdf(d1);
            else out = y * normal_cdf(d1) + y * normal_pdf(d1) / rs;
        } else {
            if (deriv == 0) out = normal_cdf(d2);
            else if (deriv == 1) out = normal_pdf(d2) / rs;
            else out = -normal_pdf(d2) * d2 / (rs * rs);
        }
        return true;
    }

    // fail fast when the payoff grows beyond the admissible class:
    // polynomial in the additive case, affine-dominated in the exponential case
    void growth_probe() const {
        if (case_ == ModelCase::bachelier) {
            std::vector<double> ly, lg;
            for (double ay : logspace(10.0, 1e6, 11))
                for (double y : {ay, -ay}) {
                    double g = std::fabs(payoff_(y));
                    if (!std::isfinite(g))
                        throw std::invalid_argument("payoff growth probe: non-finite value");
                    ly.push_back(std::log(std::fabs(y)));
                    lg.push_back(std::log1p(g));
                }
            if (ols(ly, lg).slope > 8.0)
                throw std::invalid_argument("payoff growth probe: faster than polynomial degree 8");
        } else {
            std::vector<double> ly, lr;
            for (double y : logspace(1e2, 1e8, 13)) {
                double g = std::fabs(payoff_(y));
                if (!std::isfinite(g))
                    throw std::invalid_argument("payoff growth probe: non-finite value");
                ly.push_back(std::log(y));
                lr.push_back(std::log1p(g / (1.0 + y)));
            }
            if (ols(ly, lr).slope > 0.05)
                throw std::invalid_argument("payoff growth probe: grows faster than affine");
            for (double y : logspace(1e-8, 1e-2, 7))
                if (!std::isfinite(payoff_(y)))
                    throw std::invalid_argument("payoff growth probe: non-finite near zero");
        }
    }

    ModelCase case_;
    double sig_, y0_;
    TestFunction payoff_;
    double T_;
    std::vector<double> fkinks_;
};

// closed-form references (test oracles and fast paths)
inline double bs_call_price(double y, double strike, double sig, double s) {
    if (s <= 0.0) return std::max(0.0, y - strike);
    double d1 = (std::log(y / strike) + 0.5 * sig * sig * s) / (sig * std::sqrt(s));
    double d2 = d1 - sig * std::sqrt(s);
    return y * normal_cdf(d1) - strike * normal_cdf(d2);
}
inline double bs_call_delta(double y, double strike, double sig, double s) {
    if (s <= 0.0) return y > strike ? 1.0 : 0.0;
    double d1 = (std::log(y / strike) + 0.5 * sig * sig * s) / (sig * std::sqrt(s));
    return normal_cdf(d1);
}
inline double bachelier_call_delta(double y, double strike, double sig, double s) {
    if (s <= 0.0) return y > strike ? 1.0 : 0.0;
    return normal_cdf((y - strike) / (sig * std::sqrt(s)));
}

// One-level cubic interpolation over sorted nodes; queries outside the span go
// to the fallback functor.
class CubicTable {
public:
    CubicTable() = default;
    CubicTable(std::vector<double> xs, std::vector<double> vs)
        : xs_(std::move(xs)), vs_(std::move(vs)) {}

    template <class Fallback>
    double eval(double x, const Fallback& fb) const {
        if (xs_.size() < 4 || x <= xs_.front() || x >= xs_.back()) return fb(x);
        return interp(x);
    }

    // edge-clamped evaluation: queries beyond the span return the edge value;
    // the oracles only reach there with Gaussian weights far below rounding
    double eval_clamped(double x) const {
        if (xs_.empty()) return 0.0;
        if (x <= xs_.front()) return vs_.front();
        if (x >= xs_.back()) return vs_.back();
        if (xs_.size() < 4) {
            auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
            std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
            double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
            return (1.0 - w) * vs_[i] + w * vs_[i + 1];
        }
        return interp(x);
    }

private:
    double interp(double x) const {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        std::size_t i = static_cast<std::size_t>(it - xs_.begin()) - 1;
        if (i == 0 || i + 2 >= xs_.size()) { // linear at the edges
            double w = (x - xs_[i]) / (xs_[i + 1] - xs_[i]);
            return (1.0 - w) * vs_[i] + w * vs_[i + 1];
        }
        // cubic through the 4 surrounding nodes (Neville on the stencil)
        double px[4] = {xs_[i - 1], xs_[i], xs_[i + 1], xs_[i + 2]};
        double pv[4] = {vs_[i - 1], vs_[i], vs_[i + 1], vs_[i + 2]};
        for (int m = 1; m < 4; ++m)
            for (int j = 0; j < 4 - m; ++j)
                pv[j] = ((x - px[j + m]) * pv[j] + (px[j] - x) * pv[j + 1]) / (px[j] - px[j + m]);
        return pv[0];
    }

    std::vector<double> xs_;
    std::vector<double> vs_;
};

// node layout shared by the per-level field tables: a coarse backbone plus
// clusters around every payoff kink at the maturity scale, with geometric tails
inline std::vector<double> level_node_layout(const MarkovKernelModel& model, double t,
                                             std::size_t coarse_nodes,
                                             std::size_t kink_nodes,
                                             double span_sigmas = 7.5,
                                             double tail_ratio = 1.09) {
    double T = model.horizon();
    double span = span_sigmas * model.x_std(T) + 1e-8;
    double clo = model.x_mean(T) - span, chi = model.x_mean(T) + span;
    std::vector<double> xs = linspace(clo, chi, coarse_nodes);
    double scale = model.x_std(1.0) * std::sqrt(T - t);
    double xi_max = (chi - clo) / scale;
    for (double k : model.x_kinks()) {
        std::vector<double> xis = linspace(-6.0, 6.0, kink_nodes);
        for (double xi = 6.0 * tail_ratio; xi < xi_max; xi *= tail_ratio) {
            xis.push_back(xi);
            xis.push_back(-xi);
        }
        for (double xi : xis) {
            double x = k + scale * xi;
            if (x > clo && x < chi) xs.push_back(x);
        }
    }
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

// Per-level interpolation tables for a smooth field (t, x) -> field(t, x), so
// pathwise Monte Carlo and the conditional oracles do not pay a quadrature per
// evaluation. Evaluation outside the tabulated span falls back to the field.
class FieldTable {
public:
    FieldTable(const MarkovKernelModel& model, std::vector<double> t_levels,
               std::function<double(double, double)> field,
               std::size_t coarse_nodes = 193, std::size_t kink_nodes = 161)
        : model_(&model), t_(std::move(t_levels)), field_(std::move(field)) {
        levels_.resize(t_.size());
        for (std::size_t l = 0; l < t_.size(); ++l) {
            if (!(t_[l] < model_->horizon()))
                throw std::invalid_argument("FieldTable: levels must be below T");
            std::vector<double> xs = level_node_layout(*model_, t_[l], coarse_nodes, kink_nodes);
            std::vector<double> vs(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) vs[i] = field_(t_[l], xs[i]);
            levels_[l] = CubicTable(std::move(xs), std::move(vs));
        }
    }

    std::size_t level_count() const { return t_.size(); }
    double level_time(std::size_t l) const { return t_[l]; }

    double at_level(std::size_t l, double x) const {
        return levels_[l].eval(x, [&](double xx) { return field_(t_[l], xx); });
    }

private:
    const MarkovKernelModel* model_;
    std::vector<double> t_;
    std::function<double(double, double)> field_;
    std::vector<CubicTable> levels_;
};

// phi tables for the Monte Carlo legs
class PhiTable {
public:
    PhiTable(const MarkovKernelModel& model, std::vector<double> t_levels,
             std::size_t coarse_nodes = 193, std::size_t kink_nodes = 161)
        : table_(model, std::move(t_levels),
                 [&model](double t, double x) { return model.phix(t, x); }, coarse_nodes,
                 kink_nodes) {}

    std::size_t level_count() const { return table_.level_count(); }
    double level_time(std::size_t l) const { return table_.level_time(l); }
    double phi_at_level(std::size_t l, double x) const { return table_.at_level(l, x); }

private:
    FieldTable table_;
};

} // namespace fracpath
