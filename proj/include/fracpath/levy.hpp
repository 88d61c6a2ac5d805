#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <stdexcept>
#include <vector>

#include "fracpath/process.hpp"
#include "fracpath/quadrature.hpp"
#include "fracpath/stats.hpp"
#include "fracpath/test_function.hpp"

namespace fracpath {

namespace detail {

inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const std::size_t n = a.size();
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        double ang = -2.0 * 3.141592653589793238463 / static_cast<double>(len);
        std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                std::complex<double> u = a[i + k], v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
}

} // namespace detail

// Asymptotic tail series of the symmetric stable density with
// E exp(iuX_s) = exp(-s|u|^beta):
//   p_s(x) = (1/pi) sum_{k>=1} (-1)^{k+1}/k! Gamma(beta k + 1) sin(pi beta k/2) s^k x^{-beta k - 1}
// (convergent for beta < 1, optimally truncated otherwise). Returns the value
// and a bound on the truncation error.
inline std::pair<double, double> stable_tail_pdf(double beta, double s, double x,
                                                 int max_terms = 60) {
    double acc = 0.0, prev = std::numeric_limits<double>::infinity();
    double err = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= max_terms; ++k) {
        double lt = std::lgamma(beta * k + 1.0) - std::lgamma(k + 1.0)
                  + k * std::log(s) - (beta * k + 1.0) * std::log(x);
        double term = std::exp(lt) * std::sin(1.5707963267948966 * beta * k)
                    / 3.141592653589793;
        double mag = std::fabs(term);
        if (mag > prev) { err = prev; break; } // asymptotic turn: stop at smallest
        acc += (k % 2 == 1 ? 1.0 : -1.0) * term;
        prev = mag;
        err = mag;
        if (mag < 1e-18 * std::fabs(acc) + 1e-300) break;
    }
    return {acc, err};
}

// term-wise tail integral int_x^inf p_s: same series with x^{-beta k}/(beta k)
inline std::pair<double, double> stable_tail_mass(double beta, double s, double x,
                                                  int max_terms = 60) {
    double acc = 0.0, prev = std::numeric_limits<double>::infinity();
    double err = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= max_terms; ++k) {
        double lt = std::lgamma(beta * k + 1.0) - std::lgamma(k + 1.0)
                  + k * std::log(s) - beta * k * std::log(x) - std::log(beta * k);
        double term = std::exp(lt) * std::sin(1.5707963267948966 * beta * k)
                    / 3.141592653589793;
        double mag = std::fabs(term);
        if (mag > prev) { err = prev; break; }
        acc += (k % 2 == 1 ? 1.0 : -1.0) * term;
        prev = mag;
        err = mag;
        if (mag < 1e-18 * std::fabs(acc) + 1e-300) break;
    }
    return {acc, err};
}

// Tabulated symmetric density on [0, x_max] with an algebraic tail beyond;
// cdf and quantiles precomputed. Negative kinds (brownian, cauchy) bypass the
// table with closed forms.
class LevyDensity {
public:
    // closed-form constructor
    LevyDensity(std::function<double(double)> pdf, std::function<double(double)> cdf)
        : pdf_(std::move(pdf)), cdf_(std::move(cdf)) {
        build_quantiles();
    }

    // FFT inversion of exp(-s u^beta), 2^20 points, frequency cutoff at
    // exp(-s u^beta) < 1e-16, clipped negative mass logged (kept below 1e-8),
    // algebraic tail matched at the edge of the trusted range
    LevyDensity(double beta, double s, std::size_t log2n = 20) {
        const std::size_t n = std::size_t(1) << log2n;
        // frequency span: past the 1e-16 cutoff of exp(-s u^beta), and at least
        // 256 grid cells per self-similar peak width s^{1/beta}
        double u_cut = std::pow(16.0 * std::log(10.0) / s, 1.0 / beta);
        double u_res = 2.0 * 3.141592653589793 * 256.0 * std::pow(s, -1.0 / beta);
        double u_max = std::max(u_cut, u_res);
        double du = u_max / static_cast<double>(n);
        double dx = 2.0 * 3.141592653589793238463 / (du * static_cast<double>(n));
        std::vector<std::complex<double>> buf(n);
        for (std::size_t j = 0; j < n; ++j)
            buf[j] = std::exp(-s * std::pow(du * static_cast<double>(j), beta));
        detail::fft_inplace(buf);
        std::size_t keep = n / 2;
        grid_dx_ = dx;
        tail_beta_ = beta;
        tail_s_ = s;
        values_.resize(keep);
        double x_wrap = 2.0 * static_cast<double>(keep) * dx; // periodization length
        // the u -> 0 cusp of exp(-s u^beta) defeats the trapezoid rule, so the
        // first cells are re-integrated exactly per x; rougher exponents need a
        // wider window, which in turn caps where the table can be trusted
        const std::size_t cusp_cells = beta < 1.0 ? 256 : 48;
        // geometric panels toward u = 0 keep the rule spectrally accurate on
        // the u^beta cusp
        QuadNodes cusp_gl;
        {
            QuadNodes base = gauss_legendre(16);
            double hi_edge = cusp_cells * du;
            for (int panel = 0; panel < 40; ++panel) {
                double lo_edge = hi_edge * 0.5;
                for (std::size_t q = 0; q < base.x.size(); ++q) {
                    cusp_gl.x.push_back(0.5 * (lo_edge + hi_edge)
                                        + 0.5 * (hi_edge - lo_edge) * base.x[q]);
                    cusp_gl.w.push_back(0.5 * (hi_edge - lo_edge) * base.w[q]);
                }
                hi_edge = lo_edge;
            }
            // remaining sliver [0, W 2^-40]: integrand is 1 + O(u^beta)
            cusp_gl.x.push_back(0.5 * hi_edge);
            cusp_gl.w.push_back(hi_edge);
        }
        std::vector<double> cusp_w(cusp_gl.x.size());
        for (std::size_t q = 0; q < cusp_gl.x.size(); ++q)
            cusp_w[q] = cusp_gl.w[q] * std::exp(-s * std::pow(cusp_gl.x[q], beta));
        std::vector<double> trap_c(cusp_cells + 1);
        for (std::size_t j = 0; j <= cusp_cells; ++j)
            trap_c[j] = std::exp(-s * std::pow(du * static_cast<double>(j), beta));
        double x_corr_cap = 1.0 / (static_cast<double>(cusp_cells) * du);
        for (std::size_t k = 0; k < keep; ++k) {
            double v = (buf[k].real() - 0.5) * du / 3.141592653589793238463;
            double x = static_cast<double>(k) * dx;
            if (x <= x_corr_cap) { // beyond this the table hands over to the series
                double exact = 0.0;
                for (std::size_t q = 0; q < cusp_gl.x.size(); ++q)
                    exact += cusp_w[q] * std::cos(cusp_gl.x[q] * x);
                double trap = 0.0;
                for (std::size_t j = 0; j <= cusp_cells; ++j) {
                    double w = (j == 0 || j == cusp_cells) ? 0.5 : 1.0;
                    trap += w * du * trap_c[j] * std::cos(du * static_cast<double>(j) * x);
                }
                v += (exact - trap) / 3.141592653589793238463;
            }
            // subtract the two dominant periodization aliases
            v -= stable_tail_pdf(beta, s, x_wrap - x).first;
            v -= stable_tail_pdf(beta, s, x_wrap + x).first;
            values_[k] = v;
        }
        // hand over to the series where its truncation error and the table
        // agree to high relative accuracy (and before the correction cap)
        trusted_ = x_corr_cap;
        for (std::size_t k = keep / 2048; k + 1 < keep; k += keep / 2048) {
            double x = static_cast<double>(k) * dx;
            if (x > x_corr_cap) break;
            auto [tv, te] = stable_tail_pdf(beta, s, x);
            if (tv > 0.0 && te < 1e-8 * tv &&
                std::fabs(tv - values_[k]) < 5e-4 * tv) {
                trusted_ = x;
                break;
            }
        }
        double clipped = 0.0;
        for (std::size_t k = 0; k < keep; ++k) {
            double x = static_cast<double>(k) * dx;
            if (values_[k] < 0.0) {
                if (x <= trusted_) clipped += -values_[k] * dx;
                values_[k] = 0.0;
            }
        }
        clipped_mass_ = 2.0 * clipped;
        if (clipped_mass_ > 1e-8)
            throw std::runtime_error("LevyDensity: clipped mass above tolerance");
        pdf_ = [this](double x) { return table_pdf(x); };
        build_cdf_from_table();
        build_quantiles();
    }

    double pdf(double x) const { return pdf_(x); }
    double cdf(double x) const { return cdf_(x); }
    double interval_prob(double a, double b) const { return cdf_(b) - cdf_(a); }
    double clipped_mass() const { return clipped_mass_; }
    // unnormalized inversion mass (the cdf itself is renormalized)
    double raw_total() const { return norm_ != 1.0 || !cum_.empty() ? norm_ : 1.0; }

    double quantile(double p) const {
        if (!(p > 0.0 && p < 1.0)) throw std::domain_error("LevyDensity: quantile range");
        auto it = std::lower_bound(qv_.begin(), qv_.end(), p);
        std::size_t i = std::min<std::size_t>(qv_.size() - 1,
                                              static_cast<std::size_t>(it - qv_.begin()));
        double lo = qx_[i > 0 ? i - 1 : 0], hi = qx_[i];
        for (int it2 = 0; it2 < 60; ++it2) {
            double mid = 0.5 * (lo + hi);
            (cdf_(mid) < p ? lo : hi) = mid;
        }
        return 0.5 * (lo + hi);
    }

    // fixed probability-space panels with precomputed quantile nodes; the
    // transition integrals reuse these and only re-bisect panels that a payoff
    // kink lands in
    struct VPanel {
        double v_lo, v_hi;
        std::vector<double> q_nodes; // quantiles at the panel GL nodes
    };
    const std::vector<VPanel>& v_panels() const {
        if (!vpanels_.empty()) return vpanels_;
        std::vector<double> edges{1e-11, 1.0 - 1e-11};
        for (double v : {0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 0.9, 0.95, 0.99, 0.999})
            edges.push_back(v);
        for (int k = 2; k < 11; ++k) {
            edges.push_back(std::pow(10.0, -k));
            edges.push_back(1.0 - std::pow(10.0, -k));
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        static const QuadNodes gl = gauss_legendre(12);
        for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
            VPanel p;
            p.v_lo = edges[e];
            p.v_hi = edges[e + 1];
            for (std::size_t q = 0; q < gl.x.size(); ++q) {
                double v = 0.5 * (p.v_lo + p.v_hi) + 0.5 * (p.v_hi - p.v_lo) * gl.x[q];
                p.q_nodes.push_back(quantile(v));
            }
            vpanels_.push_back(std::move(p));
        }
        return vpanels_;
    }

private:
    double table_pdf(double x) const {
        double ax = std::fabs(x);
        if (ax >= trusted_)
            return stable_tail_pdf(tail_beta_, tail_s_, ax).first / norm_;
        double pos = ax / grid_dx_;
        std::size_t i = static_cast<std::size_t>(pos);
        if (i + 2 >= values_.size())
            return stable_tail_pdf(tail_beta_, tail_s_, ax).first / norm_;
        double w = pos - static_cast<double>(i);
        if (i == 0) { // symmetric continuation through the origin
            double vm = values_[1], v0 = values_[0], v1 = values_[1], v2 = values_[2];
            double t = w;
            return (vm * (-t * (t - 1.0) * (t - 2.0) / 6.0)
                    + v0 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0)
                    + v1 * (-(t + 1.0) * t * (t - 2.0) / 2.0)
                    + v2 * ((t + 1.0) * t * (t - 1.0) / 6.0))
                 / norm_;
        }
        double vm = values_[i - 1], v0 = values_[i], v1 = values_[i + 1], v2 = values_[i + 2];
        double t = w;
        return (vm * (-t * (t - 1.0) * (t - 2.0) / 6.0)
                + v0 * ((t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0)
                + v1 * (-(t + 1.0) * t * (t - 2.0) / 2.0)
                + v2 * ((t + 1.0) * t * (t - 1.0) / 6.0))
             / norm_;
    }

    void build_cdf_from_table() {
        // cumulative Simpson on [0, trusted], series tail beyond
        std::size_t m = static_cast<std::size_t>(trusted_ / grid_dx_);
        if (m % 2 == 1) ++m;
        m = std::min(m, values_.size() - 1);
        trusted_ = static_cast<double>(m) * grid_dx_;
        cum_.assign(m + 1, 0.0);
        for (std::size_t i = 2; i <= m; i += 2)
            cum_[i] = cum_[i - 2]
                    + grid_dx_ / 3.0 * (values_[i - 2] + 4.0 * values_[i - 1] + values_[i]);
        for (std::size_t i = 1; i <= m; i += 2) // odd cells by local Simpson half-step
            cum_[i] = cum_[i - 1]
                    + grid_dx_ / 12.0
                          * (5.0 * values_[i - 1] + 8.0 * values_[i]
                             - (i + 1 <= m ? values_[i + 1] : values_[i]));
        tail_mass_ = stable_tail_mass(tail_beta_, tail_s_, trusted_).first;
        double half = cum_[m] + tail_mass_;
        norm_ = 2.0 * half;
        cdf_ = [this, m](double x) {
            double ax = std::fabs(x);
            double half_int;
            if (ax >= trusted_) {
                half_int = cum_[m] + tail_mass_
                         - stable_tail_mass(tail_beta_, tail_s_, ax).first;
            } else {
                double pos = ax / grid_dx_;
                std::size_t i = static_cast<std::size_t>(pos);
                double w = pos - static_cast<double>(i);
                double base = cum_[std::min(i, m)];
                double p0 = values_[i];
                double p1 = i + 1 < values_.size() ? values_[i + 1] : p0;
                half_int = base + grid_dx_ * w * (p0 + 0.5 * w * (p1 - p0));
            }
            double c = 0.5 + (x >= 0.0 ? half_int : -half_int) / norm_;
            return std::clamp(c, 0.0, 1.0);
        };
    }

    void build_quantiles() {
        // coarse bracket table for the quantile bisection
        qx_ = logspace(1e-10, 1e10, 201);
        std::vector<double> all;
        for (double x : qx_) all.push_back(-x);
        all.push_back(0.0);
        for (double x : qx_) all.push_back(x);
        std::sort(all.begin(), all.end());
        qx_ = all;
        qv_.resize(qx_.size());
        for (std::size_t i = 0; i < qx_.size(); ++i) qv_[i] = cdf_(qx_[i]);
    }

    std::function<double(double)> pdf_;
    std::function<double(double)> cdf_;
    double grid_dx_ = 0.0, trusted_ = 0.0;
    double tail_beta_ = 1.0, tail_s_ = 1.0, tail_mass_ = 0.0, norm_ = 1.0;
    double clipped_mass_ = 0.0;
    std::vector<double> values_, cum_, qx_, qv_;
    mutable std::vector<VPanel> vpanels_;
};

// exact law of a finite-activity jump process on a shared lattice
struct LatticeLaw {
    double h = 1.0;     // lattice pitch
    long m_min = 0;     // support offset
    std::vector<double> prob;

    double at(long m) const {
        long i = m - m_min;
        if (i < 0 || i >= static_cast<long>(prob.size())) return 0.0;
        return prob[static_cast<std::size_t>(i)];
    }
    double total() const {
        double t = 0.0;
        for (double p : prob) t += p;
        return t;
    }
    // P(X in [a, b))
    double interval_prob(double a, double b) const {
        double t = 0.0;
        for (std::size_t i = 0; i < prob.size(); ++i) {
            double x = h * static_cast<double>(m_min + static_cast<long>(i));
            if (x >= a && x < b) t += prob[i];
        }
        return t;
    }
};

enum class LevyKind { brownian, symmetric_stable, cauchy, compound_poisson };

// Levy process descriptor exposing densities (closed form, FFT inversion, or
// exact lattice law), transition expectations and the directional gradients.
class LevyModel {
public:
    static LevyModel brownian(double sigma, double T) {
        LevyModel m;
        m.kind_ = LevyKind::brownian;
        m.sigma_ = sigma;
        m.T_ = T;
        return m;
    }
    static LevyModel cauchy(double T) {
        LevyModel m;
        m.kind_ = LevyKind::cauchy;
        m.beta_ = 1.0;
        m.T_ = T;
        return m;
    }
    static LevyModel symmetric_stable(double beta, double T) {
        if (!(beta > 0.0 && beta < 2.0))
            throw std::invalid_argument("LevyModel: beta must lie in (0,2)");
        LevyModel m;
        m.kind_ = LevyKind::symmetric_stable;
        m.beta_ = beta;
        m.T_ = T;
        return m;
    }
    static LevyModel compound_poisson(std::vector<JumpAtom> atoms, double T) {
        LevyModel m;
        m.kind_ = LevyKind::compound_poisson;
        m.atoms_ = std::move(atoms);
        m.T_ = T;
        if (m.atoms_.empty()) throw std::invalid_argument("LevyModel: no atoms");
        double h = std::fabs(m.atoms_[0].size);
        auto fgcd = [](double a, double b) {
            while (b > 1e-9) { double r = std::fmod(a, b); if (r > b - 1e-9) r = 0.0; a = b; b = r; }
            return a;
        };
        for (const auto& a : m.atoms_) h = fgcd(std::max(h, std::fabs(a.size)),
                                                std::min(h, std::fabs(a.size)));
        m.pitch_ = h;
        for (const auto& a : m.atoms_)
            if (std::fabs(a.size / h - std::round(a.size / h)) > 1e-9)
                throw std::invalid_argument("LevyModel: atoms must share a lattice");
        return m;
    }

    LevyKind kind() const { return kind_; }
    double horizon() const { return T_; }
    double beta() const { return beta_; }
    double sigma() const { return sigma_; }
    const std::vector<JumpAtom>& atoms() const { return atoms_; }
    double lattice_pitch() const { return pitch_; }
    bool is_lattice() const { return kind_ == LevyKind::compound_poisson; }

    // continuous kinds: cached density of X_s
    const LevyDensity& density(double s) const {
        if (!(s > 0.0)) throw std::domain_error("LevyModel: density needs s > 0");
        auto it = cache_.find(s);
        if (it != cache_.end()) return *it->second;
        std::shared_ptr<LevyDensity> d;
        switch (kind_) {
        case LevyKind::brownian: {
            double sd = sigma_ * std::sqrt(s);
            d = std::make_shared<LevyDensity>(
                [sd](double x) { return normal_pdf(x / sd) / sd; },
                [sd](double x) { return normal_cdf(x / sd); });
            break;
        }
        case LevyKind::cauchy:
            d = std::make_shared<LevyDensity>(
                [s](double x) { return s / (3.141592653589793 * (s * s + x * x)); },
                [s](double x) { return 0.5 + std::atan(x / s) / 3.141592653589793; });
            break;
        case LevyKind::symmetric_stable:
            d = std::make_shared<LevyDensity>(beta_, s);
            break;
        case LevyKind::compound_poisson:
            throw std::logic_error("LevyModel: lattice law has no density");
        }
        cache_.emplace(s, d);
        return *d;
    }

    // exact lattice law by truncated Poisson-mixture convolution
    const LatticeLaw& lattice_law(double s) const {
        auto it = lcache_.find(s);
        if (it != lcache_.end()) return *it->second;
        auto law = std::make_shared<LatticeLaw>();
        law->h = pitch_;
        std::map<long, double> dist{{0, 1.0}};
        for (const auto& a : atoms_) {
            long step = static_cast<long>(std::llround(a.size / pitch_));
            double mean = a.rate * s;
            // Poisson weights truncated at relative mass 1e-12
            std::vector<double> pw{std::exp(-mean)};
            double acc = pw[0];
            for (std::size_t j = 1; acc < 1.0 - 1e-12 && j < 4000; ++j) {
                pw.push_back(pw.back() * mean / static_cast<double>(j));
                acc += pw.back();
            }
            std::map<long, double> next;
            for (const auto& [m, p] : dist)
                for (std::size_t j = 0; j < pw.size(); ++j)
                    next[m + step * static_cast<long>(j)] += p * pw[j];
            dist = std::move(next);
        }
        law->m_min = dist.begin()->first;
        long m_max = dist.rbegin()->first;
        law->prob.assign(static_cast<std::size_t>(m_max - law->m_min + 1), 0.0);
        for (const auto& [m, p] : dist)
            law->prob[static_cast<std::size_t>(m - law->m_min)] = p;
        lcache_.emplace(s, law);
        return *law;
    }

    // F(t, x) = E f(x + X_{T-t})
    double transition_F(const TestFunction& f, double t, double x) const {
        if (t > T_) throw std::out_of_range("transition_F: t beyond the horizon");
        double s = T_ - t;
        if (s == 0.0) return f(x);
        if (is_lattice()) {
            const LatticeLaw& law = lattice_law(s);
            double acc = 0.0;
            for (std::size_t i = 0; i < law.prob.size(); ++i) {
                double y = law.h * static_cast<double>(law.m_min + static_cast<long>(i));
                acc += law.prob[i] * f(x + y);
            }
            return acc;
        }
        const LevyDensity& d = density(s);
        // integrate in the probability variable so the heavy tails are exact;
        // cached quantile panels serve every (t, x), only panels hit by a
        // payoff kink are re-bisected
        std::vector<double> kv;
        for (double k : f.kinks()) {
            double v = d.cdf(k - x);
            if (v > 1e-11 && v < 1.0 - 1e-11) kv.push_back(v);
        }
        static const QuadNodes gl = gauss_legendre(12);
        double acc = 0.0;
        for (const auto& panel : d.v_panels()) {
            bool split_here = false;
            for (double v : kv)
                if (v > panel.v_lo && v < panel.v_hi) split_here = true;
            if (!split_here) {
                for (std::size_t q = 0; q < gl.x.size(); ++q) {
                    double w = 0.5 * (panel.v_hi - panel.v_lo) * gl.w[q];
                    acc += w * f(x + panel.q_nodes[q]);
                }
                continue;
            }
            std::vector<double> edges{panel.v_lo, panel.v_hi};
            for (double v : kv)
                if (v > panel.v_lo && v < panel.v_hi) edges.push_back(v);
            std::sort(edges.begin(), edges.end());
            for (std::size_t e = 0; e + 1 < edges.size(); ++e)
                for (std::size_t q = 0; q < gl.x.size(); ++q) {
                    double v = 0.5 * (edges[e] + edges[e + 1])
                             + 0.5 * (edges[e + 1] - edges[e]) * gl.x[q];
                    acc += 0.5 * (edges[e + 1] - edges[e]) * gl.w[q]
                         * f(x + d.quantile(v));
                }
        }
        // endpoint tails carry at most 1e-11 of bounded-profile mass
        acc += 1e-11 * (f(x + d.quantile(1e-12)) + f(x + d.quantile(1.0 - 1e-12)));
        return acc;
    }

    // F(t, x + z) - F(t, x) evaluated on paired nodes so that the small-z
    // quotients never lose precision to cancellation
    double transition_F_difference(const TestFunction& f, double t, double x,
                                   double z) const {
        if (t > T_) throw std::out_of_range("transition_F_difference: t beyond the horizon");
        double s = T_ - t;
        if (s == 0.0) return f(x + z) - f(x);
        // route discontinuities through the occupation window (pdf-safe for
        // small z); quadrature only sees the continuous remainder
        if (!f.jumps().empty()) {
            double jump_part = 0.0;
            for (auto& [loc, size] : f.jumps()) {
                double lo = z > 0.0 ? loc - x - z : loc - x;
                double hi = z > 0.0 ? loc - x : loc - x - z;
                double w;
                if (is_lattice()) {
                    w = lattice_law(s).interval_prob(lo, hi);
                } else if (std::fabs(z) < 1e-6) {
                    w = density(s).pdf(0.5 * (lo + hi)) * std::fabs(z);
                } else {
                    w = density(s).interval_prob(lo, hi);
                }
                jump_part += size * (z > 0.0 ? w : -w);
            }
            auto jlist = f.jumps();
            TestFunction cont = TestFunction::custom(
                [f, jlist](double y) {
                    double v = f(y);
                    for (auto& [loc, size] : jlist)
                        if (y >= loc) v -= size;
                    return v;
                },
                f.kinks(), f.bounded(), f.holder_exponent());
            return jump_part + transition_F_difference(cont, t, x, z);
        }
        if (is_lattice()) {
            const LatticeLaw& law = lattice_law(s);
            double acc = 0.0;
            for (std::size_t i = 0; i < law.prob.size(); ++i) {
                double y = law.h * static_cast<double>(law.m_min + static_cast<long>(i));
                acc += law.prob[i] * (f(x + z + y) - f(x + y));
            }
            return acc;
        }
        const LevyDensity& d = density(s);
        std::vector<double> kv;
        for (double k : f.kinks())
            for (double shift : {x, x + z}) {
                double v = d.cdf(k - shift);
                if (v > 1e-11 && v < 1.0 - 1e-11) kv.push_back(v);
            }
        static const QuadNodes gl = gauss_legendre(12);
        double acc = 0.0;
        for (const auto& panel : d.v_panels()) {
            bool split_here = false;
            for (double v : kv)
                if (v > panel.v_lo && v < panel.v_hi) split_here = true;
            if (!split_here) {
                for (std::size_t q = 0; q < gl.x.size(); ++q) {
                    double w = 0.5 * (panel.v_hi - panel.v_lo) * gl.w[q];
                    acc += w * (f(x + z + panel.q_nodes[q]) - f(x + panel.q_nodes[q]));
                }
                continue;
            }
            std::vector<double> edges{panel.v_lo, panel.v_hi};
            for (double v : kv)
                if (v > panel.v_lo && v < panel.v_hi) edges.push_back(v);
            std::sort(edges.begin(), edges.end());
            for (std::size_t e = 0; e + 1 < edges.size(); ++e)
                for (std::size_t q = 0; q < gl.x.size(); ++q) {
                    double v = 0.5 * (edges[e] + edges[e + 1])
                             + 0.5 * (edges[e + 1] - edges[e]) * gl.x[q];
                    double y = d.quantile(v);
                    acc += 0.5 * (edges[e + 1] - edges[e]) * gl.w[q]
                         * (f(x + z + y) - f(x + y));
                }
        }
        return acc;
    }

private:
    LevyKind kind_ = LevyKind::cauchy;
    double T_ = 1.0, beta_ = 1.0, sigma_ = 1.0, pitch_ = 1.0;
    std::vector<JumpAtom> atoms_;
    mutable std::map<double, std::shared_ptr<LevyDensity>> cache_;
    mutable std::map<double, std::shared_ptr<LatticeLaw>> lcache_;
};

// probability profile rho for the directional gradients
struct MeasureProfile {
    enum class Kind { dirac, power_density, atoms } kind = Kind::dirac;
    double z0 = 1.0;      // dirac
    double eps = 1.0;     // power density eps z^{eps-1} on (0,1]
    std::vector<std::pair<double, double>> atom_list; // (z, weight), weights sum to 1

    static MeasureProfile dirac(double z) {
        if (z == 0.0) throw std::invalid_argument("MeasureProfile: dirac at zero");
        MeasureProfile m;
        m.kind = Kind::dirac;
        m.z0 = z;
        return m;
    }
    static MeasureProfile power_density(double eps) {
        if (!(eps > 0.0 && eps <= 1.0))
            throw std::invalid_argument("MeasureProfile: eps must lie in (0,1]");
        MeasureProfile m;
        m.kind = Kind::power_density;
        m.eps = eps;
        return m;
    }
    static MeasureProfile atoms(std::vector<std::pair<double, double>> list) {
        double tot = 0.0;
        for (auto& [z, w] : list) {
            if (z == 0.0) throw std::invalid_argument("MeasureProfile: atom at zero");
            tot += w;
        }
        if (std::fabs(tot - 1.0) > 1e-12)
            throw std::invalid_argument("MeasureProfile: atom weights must sum to 1");
        MeasureProfile m;
        m.kind = Kind::atoms;
        m.atom_list = std::move(list);
        return m;
    }

    // rho([-d, d] \ {0})
    double ball_mass(double d) const {
        switch (kind) {
        case Kind::dirac: return std::fabs(z0) <= d ? 1.0 : 0.0;
        case Kind::power_density: return d >= 1.0 ? 1.0 : (d <= 0.0 ? 0.0 : std::pow(d, eps));
        case Kind::atoms: {
            double t = 0.0;
            for (auto& [z, w] : atom_list)
                if (std::fabs(z) <= d) t += w;
            return t;
        }
        }
        return 0.0;
    }
};

// D_rho F(t, x) = int (F(t, x+z) - F(t, x)) / z rho(dz); the numerator is
// evaluated in difference form so z far below machine.epsilon of F is safe
inline double d_rho_F(const LevyModel& model, const TestFunction& f,
                      const MeasureProfile& rho, double t, double x) {
    auto diff = [&](double z) { return model.transition_F_difference(f, t, x, z); };
    switch (rho.kind) {
    case MeasureProfile::Kind::dirac:
        return diff(rho.z0) / rho.z0;
    case MeasureProfile::Kind::atoms: {
        double acc = 0.0;
        for (auto& [z, w] : rho.atom_list) acc += w * diff(z) / z;
        return acc;
    }
    case MeasureProfile::Kind::power_density: {
        // substitute w = z^eps; composite halving panels in w
        double inv = 1.0 / rho.eps;
        static const QuadNodes gl = gauss_legendre(12);
        double acc = 0.0;
        double hi = 1.0;
        for (int panel = 0; panel < 44; ++panel) {
            double lo = hi * 0.5;
            for (std::size_t q = 0; q < gl.x.size(); ++q) {
                double w = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[q];
                double z = std::pow(w, inv);
                acc += 0.5 * (hi - lo) * gl.w[q] * diff(z) / z;
            }
            hi = lo;
        }
        // remaining sliver w < 2^-44: the quotient is flat there
        double w_rest = std::pow(0.5, 44);
        double z1 = std::pow(w_rest, inv);
        acc += w_rest * diff(z1) / z1;
        return acc;
    }
    }
    return 0.0;
}

// runtime integrability probe of int |F(t,x+z) - F(t,x)| / |z| rho(dz): the
// head [0, delta] must stop growing as delta shrinks
inline bool d_rho_F_integrable(const LevyModel& model, const TestFunction& f,
                               const MeasureProfile& rho, double t, double x) {
    if (rho.kind != MeasureProfile::Kind::power_density) return true; // finite sums
    double inv = 1.0 / rho.eps;
    double prev = -1.0;
    for (double delta : {1e-2, 1e-4, 1e-6}) {
        double head = integrate(
            [&](double w) {
                if (w <= 0.0) return 0.0;
                double z = std::pow(w, inv);
                return std::fabs(model.transition_F_difference(f, t, x, z)) / z;
            },
            0.0, delta, 1e-8, 20);
        if (prev >= 0.0 && head > 0.5 * prev && head > 1e-8) return false;
        prev = head;
    }
    return true;
}

// gamma_{t,rho}(v) = int P(X_{T-t} in v + [-z^+, z^-)) / |z| rho(dz)
inline double gamma_density(const LevyModel& model, const MeasureProfile& rho, double t,
                            double v) {
    double s = model.horizon() - t;
    auto window = [&](double z) {
        double lo = z > 0.0 ? v - z : v;
        double hi = z > 0.0 ? v : v - z;
        if (model.is_lattice()) return model.lattice_law(s).interval_prob(lo, hi);
        // below the cdf cancellation floor the window is pdf * |z|
        if (std::fabs(z) < 1e-6)
            return model.density(s).pdf(0.5 * (lo + hi)) * std::fabs(z);
        return model.density(s).interval_prob(lo, hi);
    };
    switch (rho.kind) {
    case MeasureProfile::Kind::dirac:
        return window(rho.z0) / std::fabs(rho.z0);
    case MeasureProfile::Kind::atoms: {
        double acc = 0.0;
        for (auto& [z, w] : rho.atom_list) acc += w * window(z) / std::fabs(z);
        return acc;
    }
    case MeasureProfile::Kind::power_density: {
        double inv = 1.0 / rho.eps;
        static const QuadNodes gl = gauss_legendre(12);
        double acc = 0.0;
        double hi = 1.0;
        for (int panel = 0; panel < 44; ++panel) { // halving panels down to w ~ 6e-14
            double lo = hi * 0.5;
            for (std::size_t q = 0; q < gl.x.size(); ++q) {
                double w = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[q];
                double z = std::pow(w, inv);
                acc += 0.5 * (hi - lo) * gl.w[q] * window(z) / z;
            }
            hi = lo;
        }
        return acc;
    }
    }
    return 0.0;
}

// int gamma dv: adaptive on the core, Gauss-Legendre per decade in log v on
// the algebraic tails, out to v_max
inline double gamma_mass(const LevyModel& model, const MeasureProfile& rho, double t,
                         double v_max = 1e8) {
    if (model.is_lattice()) {
        // each atom window sweeps every lattice cell once, so the v-integral
        // reduces exactly to the lattice-law normalization
        return model.lattice_law(model.horizon() - t).total();
    }
    auto g = [&](double v) { return gamma_density(model, rho, t, v); };
    static const QuadNodes gl = gauss_legendre(12);
    double acc = 0.0;
    for (int cell = 0; cell < 64; ++cell) {
        double lo = -2.0 + 4.0 * cell / 64.0, hi = -2.0 + 4.0 * (cell + 1) / 64.0;
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            double v = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[q];
            acc += 0.5 * (hi - lo) * gl.w[q] * g(v);
        }
    }
    for (double sgn : {1.0, -1.0}) {
        double lo = 2.0;
        while (lo < v_max) {
            double hi = std::min(lo * 10.0, v_max);
            double la = std::log(lo), lb = std::log(hi);
            for (std::size_t q = 0; q < gl.x.size(); ++q) {
                double lam = 0.5 * (la + lb) + 0.5 * (lb - la) * gl.x[q];
                double v = std::exp(lam);
                acc += 0.5 * (lb - la) * gl.w[q] * g(sgn * v) * v;
            }
            lo = hi;
        }
    }
    return acc;
}

struct TvRow {
    double z = 0.0, s = 0.0;
    double tv = 0.0;
    double envelope = 0.0; // min(2/|z|, ||dp/dx||_L1)
};

// || P_{z + X_s} - P_{X_s} ||_TV by adaptive quadrature of |p(x-z) - p(x)|,
// split at the sign flip x = z/2 of the symmetric unimodal difference
inline double tv_distance(const LevyModel& model, double z, double s) {
    if (z == 0.0) return 0.0;
    if (model.is_lattice()) {
        const LatticeLaw& law = model.lattice_law(s);
        long shift = static_cast<long>(std::llround(z / law.h));
        if (std::fabs(z - shift * law.h) > 1e-9) return 2.0 * law.total();
        double acc = 0.0;
        long lo = law.m_min - std::max<long>(shift, 0) - 1;
        long hi = law.m_min + static_cast<long>(law.prob.size()) + std::max<long>(-shift, 0) + 1;
        for (long m = lo; m <= hi; ++m) acc += std::fabs(law.at(m - shift) - law.at(m));
        return acc;
    }
    const LevyDensity& d = model.density(s);
    double span = std::fabs(z) + std::fabs(d.quantile(1e-10)) + d.quantile(1.0 - 1e-10);
    auto g = [&](double x) { return std::fabs(d.pdf(x - z) - d.pdf(x)); };
    return integrate_split(g, -span, span, {0.5 * z, 0.0, z}, 1e-11);
}

inline double gaussian_tv_closed_form(double z, double sigma, double s) {
    return 2.0 * (2.0 * normal_cdf(std::fabs(z) / (2.0 * sigma * std::sqrt(s))) - 1.0);
}

inline std::vector<TvRow> tv_profile(const LevyModel& model, const std::vector<double>& z_grid,
                                     const std::vector<double>& s_grid) {
    std::vector<TvRow> rows;
    for (double s : s_grid) {
        double dp_l1;
        if (model.is_lattice()) {
            dp_l1 = std::numeric_limits<double>::infinity();
        } else {
            dp_l1 = 2.0 * model.density(s).pdf(0.0); // symmetric unimodal
        }
        for (double z : z_grid) {
            TvRow r;
            r.z = z;
            r.s = s;
            r.tv = tv_distance(model, z, s);
            r.envelope = std::min(2.0 / std::fabs(z), dp_l1);
            rows.push_back(r);
        }
    }
    return rows;
}

struct ClassCertificate {
    double u_constant = 0.0;       // sup_d rho([-d,d])/d^eps
    double l_constant = 0.0;       // inf over the small-d window
    double cal_u_constant = 0.0;   // sup s^{1/beta} TV(z,s)/|z|
    double cal_l_constant = 0.0;   // inf P(s^{-1/beta} X_s in (a,b))/(b-a)
    bool u_finite = true, l_positive = true, cal_u_finite = true, cal_l_positive = true;
};

inline ClassCertificate certify_classes(const LevyModel& model, const MeasureProfile& rho,
                                        double beta_hyp, double eps_hyp,
                                        std::size_t d_points = 33, std::size_t z_points = 9,
                                        std::size_t s_points = 7, double window_r = 1.0) {
    ClassCertificate cert;
    for (double d : logspace(1e-8, 1.0, d_points)) {
        double m = rho.ball_mass(d);
        cert.u_constant = std::max(cert.u_constant, m / std::pow(d, eps_hyp));
    }
    cert.l_constant = std::numeric_limits<double>::infinity();
    for (double d : logspace(1e-8, 1e-2, 13))
        cert.l_constant = std::min(cert.l_constant, rho.ball_mass(d) / std::pow(d, eps_hyp));
    cert.u_finite = std::isfinite(cert.u_constant);
    cert.l_positive = cert.l_constant > 0.0;

    for (double s : logspace(1e-3 * model.horizon(), model.horizon(), s_points)) {
        for (double z : logspace(1e-3, 2.0, z_points)) {
            double tv = tv_distance(model, z, s);
            cert.cal_u_constant =
                std::max(cert.cal_u_constant, std::pow(s, 1.0 / beta_hyp) * tv / z);
        }
    }
    cert.cal_u_finite = std::isfinite(cert.cal_u_constant);

    cert.cal_l_constant = std::numeric_limits<double>::infinity();
    for (double s : logspace(1e-3 * model.horizon(), model.horizon(), s_points)) {
        double scale = std::pow(s, 1.0 / beta_hyp);
        auto cells = linspace(-window_r, window_r, 9);
        for (std::size_t i = 0; i + 1 < cells.size(); ++i) {
            double a = cells[i] * scale, b = cells[i + 1] * scale;
            double p = model.is_lattice() ? model.lattice_law(s).interval_prob(a, b)
                                          : model.density(s).interval_prob(a, b);
            cert.cal_l_constant =
                std::min(cert.cal_l_constant, p / (cells[i + 1] - cells[i]));
        }
    }
    cert.cal_l_positive = cert.cal_l_constant > 0.0;
    return cert;
}

// sup_x |D_rho F(t, x)| over a support-aware grid, per t, plus the regression
// of its log against log(T - t)
struct SingularityReport {
    std::vector<double> t_grid;
    std::vector<double> sup_grad;
    OlsFit fit;
};

inline std::vector<double> levy_support_grid(const LevyModel& model, const TestFunction& f,
                                             double t, std::size_t quantile_nodes = 33,
                                             std::size_t kink_nodes = 17) {
    double s = model.horizon() - t;
    std::vector<double> xs;
    if (model.is_lattice()) {
        const LatticeLaw& law = model.lattice_law(s);
        double acc = 0.0;
        for (std::size_t i = 0; i < law.prob.size(); ++i) acc += law.prob[i];
        for (std::size_t i = 0; i < law.prob.size(); ++i)
            xs.push_back(law.h * static_cast<double>(law.m_min + static_cast<long>(i)));
        return xs;
    }
    const LevyDensity& d = model.density(s);
    for (double v : linspace(1e-5, 1.0 - 1e-5, quantile_nodes)) xs.push_back(d.quantile(v));
    double feat = std::pow(s, 1.0 / std::max(model.beta(), 0.2));
    for (double k : f.kinks())
        for (double xi : linspace(-4.0, 4.0, kink_nodes)) xs.push_back(k + xi * feat);
    std::sort(xs.begin(), xs.end());
    xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
    return xs;
}

inline SingularityReport singularity_regression(const LevyModel& model, const TestFunction& f,
                                                const MeasureProfile& rho,
                                                const std::vector<double>& t_grid) {
    SingularityReport rep;
    std::vector<double> lx, ly;
    for (double t : t_grid) {
        double sup = 0.0;
        for (double x : levy_support_grid(model, f, t))
            sup = std::max(sup, std::fabs(d_rho_F(model, f, rho, t, x)));
        rep.t_grid.push_back(t);
        rep.sup_grad.push_back(sup);
        if (sup > 0.0) {
            lx.push_back(std::log(model.horizon() - t));
            ly.push_back(std::log(sup));
        }
    }
    if (lx.size() >= 3) rep.fit = ols(lx, ly);
    return rep;
}

} // namespace fracpath
