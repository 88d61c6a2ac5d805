#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <vector>

namespace fracpath {

inline double normal_pdf(double x) {
    return std::exp(-0.5 * x * x) * 0.3989422804014326779399461;
}

inline double normal_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.7071067811865475244008444);
}

// Welford accumulator
class RunningStat {
public:
    void add(double x) {
        ++n_;
        double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }
    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    double stddev() const { return std::sqrt(variance()); }
    double stderr_mean() const {
        return n_ > 0 ? stddev() / std::sqrt(static_cast<double>(n_)) : 0.0;
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct OlsFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_stderr = 0.0;
    double ci_halfwidth = 0.0; // 95%
};

inline OlsFit ols(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("ols: need >= 2 points with equal sizes");
    std::size_t n = x.size();
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
    mx /= static_cast<double>(n); my /= static_cast<double>(n);
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx == 0) throw std::invalid_argument("ols: degenerate abscissae");
    OlsFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - f.intercept - f.slope * x[i];
        ss += r * r;
    }
    if (n > 2) {
        f.slope_stderr = std::sqrt(ss / static_cast<double>(n - 2) / sxx);
        f.ci_halfwidth = 1.959963984540054 * f.slope_stderr;
    }
    return f;
}

// weighted quadratic fit y ~ a + b x + c x^2; returns {a, b, c, stderr(c)}
struct QuadFit {
    double a = 0, b = 0, c = 0, c_stderr = 0;
};

inline QuadFit weighted_quadratic(const std::vector<double>& x,
                                  const std::vector<double>& y,
                                  const std::vector<double>& w) {
    std::size_t n = x.size();
    if (n < 3 || y.size() != n || w.size() != n)
        throw std::invalid_argument("weighted_quadratic: need >= 3 points");
    // normal equations, 3x3
    double s[5] = {0, 0, 0, 0, 0};
    double t[3] = {0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        double xp = 1.0;
        for (int k = 0; k <= 4; ++k) { s[k] += w[i] * xp; xp *= x[i]; }
        xp = 1.0;
        for (int k = 0; k <= 2; ++k) { t[k] += w[i] * y[i] * xp; xp *= x[i]; }
    }
    double A[3][3] = {{s[0], s[1], s[2]}, {s[1], s[2], s[3]}, {s[2], s[3], s[4]}};
    double rhs[3] = {t[0], t[1], t[2]};
    // Gaussian elimination with partial pivoting + inverse diagonal for var(c)
    double inv[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int col = 0; col < 3; ++col) {
        int piv = col;
        for (int r = col + 1; r < 3; ++r)
            if (std::fabs(A[r][col]) > std::fabs(A[piv][col])) piv = r;
        for (int k = 0; k < 3; ++k) {
            std::swap(A[col][k], A[piv][k]);
            std::swap(inv[col][k], inv[piv][k]);
        }
        std::swap(rhs[col], rhs[piv]);
        if (A[col][col] == 0) throw std::runtime_error("weighted_quadratic: singular system");
        double d = A[col][col];
        for (int k = 0; k < 3; ++k) { A[col][k] /= d; inv[col][k] /= d; }
        rhs[col] /= d;
        for (int r = 0; r < 3; ++r) {
            if (r == col) continue;
            double m = A[r][col];
            for (int k = 0; k < 3; ++k) {
                A[r][k] -= m * A[col][k];
                inv[r][k] -= m * inv[col][k];
            }
            rhs[r] -= m * rhs[col];
        }
    }
    QuadFit q;
    q.a = rhs[0]; q.b = rhs[1]; q.c = rhs[2];
    q.c_stderr = std::sqrt(std::max(0.0, inv[2][2]));
    return q;
}

inline std::vector<double> linspace(double lo, double hi, std::size_t n) {
    std::vector<double> v(n);
    if (n == 1) { v[0] = lo; return v; }
    for (std::size_t i = 0; i < n; ++i)
        v[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
    return v;
}

inline std::vector<double> logspace(double lo, double hi, std::size_t n) {
    std::vector<double> v = linspace(std::log(lo), std::log(hi), n);
    for (double& x : v) x = std::exp(x);
    return v;
}

} // namespace fracpath
