#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "fracpath/stats.hpp"

namespace fracpath {

struct QuadNodes {
    std::vector<double> x;
    std::vector<double> w;
};

// Gauss-Legendre on [-1,1], Newton on the three-term recurrence
inline QuadNodes gauss_legendre(std::size_t n) {
    QuadNodes q;
    q.x.resize(n);
    q.w.resize(n);
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(3.141592653589793 * (static_cast<double>(i) + 0.75)
                            / (static_cast<double>(n) + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / static_cast<double>(k);
                p0 = p1; p1 = p2;
            }
            pp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / pp;
            x -= dx;
            if (std::fabs(dx) < 1e-15) break;
        }
        q.x[i] = -x;
        q.x[n - 1 - i] = x;
        double w = 2.0 / ((1.0 - x * x) * pp * pp);
        q.w[i] = w;
        q.w[n - 1 - i] = w;
    }
    return q;
}

inline QuadNodes gauss_legendre_on(std::size_t n, double a, double b) {
    QuadNodes q = gauss_legendre(n);
    for (std::size_t i = 0; i < n; ++i) {
        q.x[i] = 0.5 * (a + b) + 0.5 * (b - a) * q.x[i];
        q.w[i] *= 0.5 * (b - a);
    }
    return q;
}

// Gauss-Hermite for weight exp(-x^2). The recurrence runs on the weighted
// functions phi_k = htilde_k * exp(-x^2/2), which stay O(1), and the positive
// roots are bracketed by a scan whose step is below the local root spacing
// pi / sqrt(2n+1-x^2), then polished by bisection plus one Newton step.
inline QuadNodes gauss_hermite(std::size_t n) {
    QuadNodes q;
    q.x.resize(n);
    q.w.resize(n);
    auto eval = [n](double x, double& phi_n, double& phi_nm1) {
        double p0 = 0.7511255444649425 * std::exp(-0.5 * x * x); // pi^{-1/4} e^{-x^2/2}
        double pm = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            double p1 = x * std::sqrt(2.0 / (k + 1.0)) * p0
                      - std::sqrt(static_cast<double>(k) / (k + 1.0)) * pm;
            pm = p0; p0 = p1;
        }
        phi_n = p0;
        phi_nm1 = pm;
    };
    auto phi = [&](double x) {
        double a = 0, b = 0;
        eval(x, a, b);
        return a;
    };
    const double edge = std::sqrt(2.0 * n + 1.0);
    std::vector<double> roots;
    double x0 = (n % 2 == 1) ? 0.0 : 1e-12; // odd n has a root exactly at 0
    if (n % 2 == 1) roots.push_back(0.0);
    double x = x0 + 1e-12;
    double fx = phi(x);
    while (x < edge + 1.0 && roots.size() < (n + 1) / 2) {
        double gap = 2.0 * n + 1.0 - x * x;
        double step = gap > 1.0 ? 0.4 * 3.141592653589793 / std::sqrt(gap) : 0.25;
        double xn = x + step;
        double fn = phi(xn);
        if ((fx < 0.0) != (fn < 0.0)) {
            double lo = x, hi = xn, flo = fx;
            for (int it = 0; it < 90; ++it) {
                double mid = 0.5 * (lo + hi);
                double fm = phi(mid);
                if ((flo < 0.0) == (fm < 0.0)) { lo = mid; flo = fm; }
                else hi = mid;
            }
            double r = 0.5 * (lo + hi), pn = 0, pnm1 = 0;
            eval(r, pn, pnm1);
            r -= pn / (std::sqrt(2.0 * n) * pnm1); // one Newton polish
            roots.push_back(r);
        }
        x = xn;
        fx = fn;
    }
    if (roots.size() != (n + 1) / 2)
        throw std::runtime_error("gauss_hermite: root scan failed");
    for (std::size_t i = 0; i < roots.size(); ++i) { // ascending from the center
        double r = roots[i];
        double pn = 0, pnm1 = 0;
        eval(r, pn, pnm1);
        // w = 1/(n htilde_{n-1}^2) = exp(-x^2)/(n phi_{n-1}^2)
        double w = std::exp(-r * r) / (static_cast<double>(n) * pnm1 * pnm1);
        std::size_t hi = n / 2 + i;
        q.x[hi] = r;
        q.w[hi] = w;
        q.x[n - 1 - hi] = -r;
        q.w[n - 1 - hi] = w;
    }
    return q;
}

// adaptive Simpson with bounded depth
namespace detail {
inline double simpson_step(const std::function<double(double)>& f,
                           double a, double fa, double b, double fb,
                           double m, double fm, double whole,
                           double tol, int depth) {
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left  = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if (depth <= 0 || std::fabs(left + right - whole) <= 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
         + simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}
} // namespace detail

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-10, int max_depth = 48) {
    if (a == b) return 0.0;
    double m = 0.5 * (a + b);
    double fa = f(a), fb = f(b), fm = f(m);
    double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return detail::simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

// integral with interior breakpoints forced (kinks, atoms of the integrand)
inline double integrate_split(const std::function<double(double)>& f, double a, double b,
                              std::vector<double> breaks, double tol = 1e-10) {
    breaks.push_back(a);
    breaks.push_back(b);
    std::sort(breaks.begin(), breaks.end());
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
        double lo = std::max(a, breaks[i]);
        double hi = std::min(b, breaks[i + 1]);
        if (hi > lo) total += integrate(f, lo, hi, tol);
    }
    return total;
}

namespace detail {
inline const QuadNodes& panel_rule() {
    static const QuadNodes rule = gauss_legendre(12);
    return rule;
}
} // namespace detail

// E[ f(mu + s Z) * poly(Z) ] for standard normal Z, where poly is selected by
// `moment` (0: 1, 1: Z, 2: Z^2-1). Kinks of f are mapped into Z-space and the
// rule is a composite Gauss-Legendre split there, panels never wider than one
// standard deviation. Templated so the payoff lambda inlines.
template <class F>
inline double gaussian_expectation(const F& f, double mu, double s, int moment = 0,
                                   const std::vector<double>& f_kinks = {},
                                   double z_span = 8.5) {
    if (s <= 0) {
        double v = f(mu);
        return moment == 0 ? v : 0.0;
    }
    std::vector<double> edges{-z_span, z_span};
    for (double k : f_kinks) {
        double z = (k - mu) / s;
        if (z > -z_span && z < z_span) edges.push_back(z);
    }
    std::sort(edges.begin(), edges.end());
    const QuadNodes& rule = detail::panel_rule();
    double total = 0.0;
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        double seg_lo = edges[e], seg_hi = edges[e + 1];
        int panels = std::max(1, static_cast<int>(std::ceil(seg_hi - seg_lo)));
        for (int p = 0; p < panels; ++p) {
            double lo = seg_lo + (seg_hi - seg_lo) * p / panels;
            double hi = seg_lo + (seg_hi - seg_lo) * (p + 1) / panels;
            double acc = 0.0;
            for (std::size_t k = 0; k < rule.x.size(); ++k) {
                double z = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.x[k];
                double w = normal_pdf(z);
                double poly = (moment == 0) ? 1.0 : (moment == 1 ? z : z * z - 1.0);
                acc += rule.w[k] * f(mu + s * z) * poly * w;
            }
            total += 0.5 * (hi - lo) * acc;
        }
    }
    return total;
}

// Visits Gauss-Legendre nodes of int q(x) N(x; mu, sd^2) dx as fn(x, weight).
// `centers` mark sharp features of q at scale `feature_scale` (x units); the
// panel layout refines geometrically into those windows, so integrands whose
// features are much narrower than sd are still resolved.
template <class Fn>
inline void for_each_gaussian_node(double mu, double sd, const std::vector<double>& centers,
                                   double feature_scale, Fn&& fn, double z_span = 8.5) {
    if (!(sd > 0.0)) {
        fn(mu, 1.0);
        return;
    }
    std::vector<double> edges;
    for (double z = -z_span; z < z_span + 0.5; z += 1.0) edges.push_back(z);
    edges.back() = z_span;
    double w_unit = feature_scale / sd;
    if (w_unit > 0.0 && w_unit < 0.45) {
        for (double c : centers) {
            double zc = (c - mu) / sd;
            if (zc < -z_span - 0.5 || zc > z_span + 0.5) continue;
            // drop coarse edges adjacent to the feature, add nested ones
            edges.erase(std::remove_if(edges.begin(), edges.end(),
                                       [&](double e) {
                                           return std::fabs(e - zc) < 0.999 &&
                                                  std::fabs(e) < z_span - 1e-12;
                                       }),
                        edges.end());
            edges.push_back(zc);
            for (double h = 2.0 * w_unit; h < 1.0; h *= 2.0) {
                edges.push_back(zc - h);
                edges.push_back(zc + h);
            }
            edges.push_back(zc - 1.0);
            edges.push_back(zc + 1.0);
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        edges.erase(std::remove_if(edges.begin(), edges.end(),
                                   [&](double e) { return e < -z_span || e > z_span; }),
                    edges.end());
    }
    const QuadNodes& rule = detail::panel_rule();
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        double lo = edges[e], hi = edges[e + 1];
        if (!(hi > lo)) continue;
        for (std::size_t k = 0; k < rule.x.size(); ++k) {
            double z = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.x[k];
            fn(mu + sd * z, 0.5 * (hi - lo) * rule.w[k] * normal_pdf(z));
        }
    }
}

} // namespace fracpath
