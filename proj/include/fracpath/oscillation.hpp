#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fracpath/stats.hpp"

namespace fracpath {

struct OscillationCurve {
    std::vector<double> t_grid;
    std::vector<double> under; // inf_s || H_t - H_s ||_inf
    std::vector<double> over;  // inf_s sup_{u in [s,t]} || H_t - H_u ||_inf
    std::vector<double> dist_to_start; // || H_t - H(0, x0) ||_inf
};

// Oscillation of a state-function family H(t, .) over product supports:
// || H(t, Y_t) - H(s, Y_s) ||_inf collapses to
//   max( sup H_t - inf H_s , sup H_s - inf H_t )
// once the support of (Y_s, Y_t) is the full product, so only per-level
// extrema over the support grids are needed.
class OscillationField {
public:
    OscillationField(std::function<double(double, double)> field,
                     std::function<std::vector<double>(double)> support_grid)
        : field_(std::move(field)), support_(std::move(support_grid)) {}

    OscillationCurve curve(const std::vector<double>& t_grid,
                           const std::vector<double>& s_subgrid, double x0) const {
        if (t_grid.empty()) throw std::invalid_argument("oscillation_curve: empty t grid");
        OscillationCurve out;
        out.t_grid = t_grid;
        double h00 = field_(0.0, x0);
        struct MinMax { double lo, hi; };
        auto extrema = [&](double t) {
            auto grid = support_(t);
            if (grid.empty()) throw std::invalid_argument("oscillation_curve: empty support");
            MinMax mm{field_(t, grid[0]), field_(t, grid[0])};
            for (double x : grid) {
                double v = field_(t, x);
                mm.lo = std::min(mm.lo, v);
                mm.hi = std::max(mm.hi, v);
            }
            return mm;
        };
        std::vector<double> ss = s_subgrid;
        std::sort(ss.begin(), ss.end());
        std::vector<MinMax> sx(ss.size());
        for (std::size_t i = 0; i < ss.size(); ++i) sx[i] = extrema(ss[i]);
        for (double t : t_grid) {
            MinMax mt = extrema(t);
            double under = std::numeric_limits<double>::infinity();
            double over = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < ss.size(); ++i) {
                if (!(ss[i] < t)) break;
                double d = std::max(mt.hi - sx[i].lo, sx[i].hi - mt.lo);
                under = std::min(under, d);
                // running sup over u in [s_i, t] within the subgrid
                double run = d;
                for (std::size_t j = i; j < ss.size() && ss[j] < t; ++j)
                    run = std::max(run, std::max(mt.hi - sx[j].lo, sx[j].hi - mt.lo));
                over = std::min(over, run);
            }
            if (!std::isfinite(under)) { under = 0.0; over = 0.0; }
            out.under.push_back(under);
            out.over.push_back(over);
            out.dist_to_start.push_back(std::max(std::fabs(mt.hi - h00),
                                                 std::fabs(mt.lo - h00)));
        }
        return out;
    }

private:
    std::function<double(double, double)> field_;
    std::function<std::vector<double>(double)> support_;
};

// OLS of log under-oscillation against log(T - t) over the last decade of
// time-to-maturity present in the curve
inline OlsFit oscillation_rate_regression(const OscillationCurve& curve, double T) {
    double ttm_min = std::numeric_limits<double>::infinity();
    for (double t : curve.t_grid) ttm_min = std::min(ttm_min, T - t);
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < curve.t_grid.size(); ++i) {
        double ttm = T - curve.t_grid[i];
        if (ttm > 10.0 * ttm_min * 1.0000001) continue;
        if (!(curve.under[i] > 0.0))
            throw std::domain_error("oscillation_rate_regression: nonpositive curve value");
        lx.push_back(std::log(ttm));
        ly.push_back(std::log(curve.under[i]));
    }
    if (lx.size() < 3)
        throw std::invalid_argument("oscillation_rate_regression: window too small");
    return ols(lx, ly);
}

// maximal-oscillation certificate at every curve point:
// under-oscillation >= (1/2) || H_t - H(0, x0) ||_inf
inline bool maximal_oscillation_certificate(const OscillationCurve& curve,
                                            double slack = 1.02) {
    for (std::size_t i = 0; i < curve.t_grid.size(); ++i)
        if (curve.under[i] * 2.0 * slack < curve.dist_to_start[i]) return false;
    return true;
}

} // namespace fracpath
