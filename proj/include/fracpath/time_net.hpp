#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

namespace fracpath {

// Deterministic partition 0 = t_0 < ... < t_n = T. Internally the net is
// carried as time-to-maturity values ttm_i = T - t_i (strictly decreasing,
// ttm_n = 0): near T those are exact where the knots themselves would round
// into T, which is what keeps the mesh functionals and the quantization
// identity honest for small theta and large n.
class TimeNet {
public:
    TimeNet(double horizon, const std::vector<double>& knots)
        : horizon_(horizon) {
        if (horizon_ <= 0) throw std::invalid_argument("TimeNet: horizon must be positive");
        if (knots.size() < 2 || knots.front() != 0.0 || knots.back() != horizon_)
            throw std::invalid_argument("TimeNet: knots must run from 0 to T");
        for (std::size_t i = 1; i < knots.size(); ++i)
            if (!(knots[i] > knots[i - 1]))
                throw std::invalid_argument("TimeNet: knots must be strictly increasing");
        ttm_.resize(knots.size());
        for (std::size_t i = 0; i < knots.size(); ++i) ttm_[i] = horizon_ - knots[i];
        ttm_.back() = 0.0;
        rebuild_knots();
    }

    static TimeNet from_ttm(double horizon, std::vector<double> ttm) {
        TimeNet net;
        net.horizon_ = horizon;
        net.ttm_ = std::move(ttm);
        if (net.ttm_.size() < 2 || net.ttm_.front() != horizon || net.ttm_.back() != 0.0)
            throw std::invalid_argument("TimeNet: ttm must run from T down to 0");
        for (std::size_t i = 1; i < net.ttm_.size(); ++i)
            if (!(net.ttm_[i] < net.ttm_[i - 1]))
                throw std::invalid_argument("TimeNet: ttm must be strictly decreasing");
        net.rebuild_knots();
        return net;
    }

    double horizon() const { return horizon_; }
    const std::vector<double>& knots() const { return knots_; }
    const std::vector<double>& ttm() const { return ttm_; }
    std::size_t intervals() const { return ttm_.size() - 1; }

private:
    TimeNet() = default;
    void rebuild_knots() {
        knots_.resize(ttm_.size());
        for (std::size_t i = 0; i < ttm_.size(); ++i) knots_[i] = horizon_ - ttm_[i];
        knots_.front() = 0.0;
    }

    double horizon_ = 0.0;
    std::vector<double> knots_;
    std::vector<double> ttm_;
};

// max_i (t_i - t_{i-1}) / (T - t_{i-1})^{1-theta}, evaluated in time-to-maturity
inline double mesh_theta(const TimeNet& net, double theta) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("mesh_theta: theta must lie in (0,1]");
    const auto& s = net.ttm();
    double m = 0.0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        double v = (s[i - 1] - s[i]) * std::exp((theta - 1.0) * std::log(s[i - 1]));
        if (v > m) m = v;
    }
    return m;
}

// (theta / T^theta) * int over interval i of (T-u)^{theta-1} du
inline double quantization_cell(const TimeNet& net, double theta, std::size_t i) {
    const auto& s = net.ttm();
    if (i == 0 || i >= s.size()) throw std::out_of_range("quantization_cell: bad interval");
    double Tt = std::pow(net.horizon(), theta);
    double hi = std::pow(s[i - 1], theta);
    double lo = s[i] > 0.0 ? std::pow(s[i], theta) : 0.0;
    return (hi - lo) / Tt;
}

// t_i = T - T (1 - i/n)^{1/theta}, carried exactly in time-to-maturity
inline TimeNet adapted_net(double T, double theta, std::size_t n) {
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("adapted_net: theta must lie in (0,1]");
    if (n == 0) throw std::invalid_argument("adapted_net: n must be positive");
    std::vector<double> s(n + 1);
    s[0] = T;
    for (std::size_t i = 1; i < n; ++i) {
        double frac = 1.0 - static_cast<double>(i) / static_cast<double>(n);
        s[i] = T * std::exp(std::log(frac) / theta);
    }
    s[n] = 0.0;
    return TimeNet::from_ttm(T, std::move(s));
}

// {0, r t_1, t_1 + r (t_2 - t_1), ..., t_{n-1} + r (T - t_{n-1}), T}
// built over tau_n^theta, exact duplicates coalesced (the r = 0 case)
inline TimeNet randomized_net(double T, double theta, std::size_t n, double r) {
    if (!(r >= 0.0 && r < 1.0))
        throw std::invalid_argument("randomized_net: r must lie in [0,1)");
    TimeNet base = adapted_net(T, theta, n);
    const auto& s = base.ttm();
    std::vector<double> out;
    out.reserve(n + 2);
    out.push_back(T);
    for (std::size_t i = 1; i <= n; ++i) {
        double shifted = (1.0 - r) * s[i - 1] + r * s[i];
        if (shifted != out.back()) out.push_back(shifted);
    }
    if (out.back() != 0.0) out.push_back(0.0);
    return TimeNet::from_ttm(T, std::move(out));
}

// (t_{k-1}, t_k) with a in [t_{k-1}, t_k)
inline std::pair<double, double> bracketing_knots(const TimeNet& net, double a) {
    if (!(a >= 0.0 && a < net.horizon()))
        throw std::out_of_range("bracketing_knots: a must lie in [0,T)");
    const auto& t = net.knots();
    std::size_t k = 1;
    while (k < t.size() && t[k] <= a) ++k;
    return {t[k - 1], t[k]};
}

} // namespace fracpath
