#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <vector>

#include "fracpath/levy.hpp"
#include "fracpath/process.hpp"
#include "fracpath/rng.hpp"
#include "fracpath/stats.hpp"
#include "fracpath/time_net.hpp"

namespace fracpath {

// Orthonormal basis of L_2(R, mu) over the atoms of a finite-activity model,
// mu({z_k}) = z_k^2 rate_k, built by Gram-Schmidt over {1, z, z^2, ...} with a
// re-orthogonalization pass so the Gram defect stays at rounding level.
struct JumpBasis {
    std::vector<double> z;       // atom positions
    std::vector<double> mu;      // z^2 nu masses
    std::vector<double> rate;    // nu masses
    std::vector<std::vector<double>> D; // D[j][k] = D_j(z_k)

    std::size_t size() const { return D.size(); }

    double inner(const std::vector<double>& a, const std::vector<double>& b) const {
        double s = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) s += a[k] * b[k] * mu[k];
        return s;
    }
    double l1_mu_pos(std::size_t j) const {
        double s = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) s += std::max(D[j][k], 0.0) * mu[k];
        return s;
    }
    double l1_mu_neg(std::size_t j) const {
        double s = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) s += std::max(-D[j][k], 0.0) * mu[k];
        return s;
    }
    // compensator rate of X^{D_j}: int D_j(z) z nu(dz)
    double compensator_rate(std::size_t j) const {
        double s = 0.0;
        for (std::size_t k = 0; k < z.size(); ++k) s += D[j][k] * z[k] * rate[k];
        return s;
    }
    double gram_defect() const {
        double worst = 0.0;
        for (std::size_t i = 0; i < D.size(); ++i)
            for (std::size_t j = 0; j < D.size(); ++j) {
                double g = inner(D[i], D[j]);
                worst = std::max(worst, std::fabs(g - (i == j ? 1.0 : 0.0)));
            }
        return worst;
    }
};

inline JumpBasis build_basis(const LevyModel& model) {
    if (!model.is_lattice())
        throw std::invalid_argument("build_basis: needs a finite-activity jump model");
    JumpBasis b;
    for (const auto& a : model.atoms()) {
        b.z.push_back(a.size);
        b.rate.push_back(a.rate);
        b.mu.push_back(a.size * a.size * a.rate);
    }
    const std::size_t n = b.z.size();
    for (std::size_t deg = 0; deg < n; ++deg) {
        std::vector<double> v(n);
        for (std::size_t k = 0; k < n; ++k) v[k] = std::pow(b.z[k], static_cast<double>(deg));
        for (int pass = 0; pass < 2; ++pass)
            for (const auto& prev : b.D) {
                double c = b.inner(v, prev);
                for (std::size_t k = 0; k < n; ++k) v[k] -= c * prev[k];
            }
        double norm = std::sqrt(b.inner(v, v));
        if (!(norm > 1e-10))
            throw std::runtime_error("build_basis: fewer independent functions than atoms");
        for (double& x : v) x /= norm;
        b.D.push_back(std::move(v));
    }
    return b;
}

// X_t^{D_j} decomposed into its pure-jump sampled path and the compensator
// rate; the full martingale value is jump_part(t) - rate * t
struct DirectionalPath {
    SampledPath jump_part;
    double rate = 0.0;
    double value(double t) const { return jump_part.evaluate(t) - rate * t; }
};

inline DirectionalPath directional_martingale(const JumpBasis& basis, std::size_t j,
                                              const SampledPath& path) {
    std::vector<double> times{0.0}, values{0.0};
    double level = 0.0;
    for (double t : path.jump_times()) {
        double dz = path.jump_at(t);
        std::size_t k = 0;
        bool found = false;
        for (; k < basis.z.size(); ++k)
            if (std::fabs(dz - basis.z[k]) < 1e-9) { found = true; break; }
        if (!found)
            throw std::invalid_argument("directional_martingale: jump size not an atom");
        level += basis.D[j][k] * dz;
        times.push_back(t);
        values.push_back(level);
    }
    DirectionalPath out{SampledPath(path.horizon(), std::move(times), std::move(values)),
                        basis.compensator_rate(j)};
    return out;
}

// psi_t^j(x) = |D_j^+|_{L1(mu)} D_{rho_j^+} F(t,x) - |D_j^-|_{L1(mu)} D_{rho_j^-} F(t,x)
inline double psi_field(const LevyModel& model, const TestFunction& f, const JumpBasis& basis,
                        std::size_t j, double t, double x) {
    double acc = 0.0;
    double wp = basis.l1_mu_pos(j), wn = basis.l1_mu_neg(j);
    if (wp > 0.0) {
        std::vector<std::pair<double, double>> atoms;
        for (std::size_t k = 0; k < basis.z.size(); ++k)
            if (basis.D[j][k] > 0.0)
                atoms.push_back({basis.z[k], basis.D[j][k] * basis.mu[k] / wp});
        acc += wp * d_rho_F(model, f, MeasureProfile::atoms(std::move(atoms)), t, x);
    }
    if (wn > 0.0) {
        std::vector<std::pair<double, double>> atoms;
        for (std::size_t k = 0; k < basis.z.size(); ++k)
            if (basis.D[j][k] < 0.0)
                atoms.push_back({basis.z[k], -basis.D[j][k] * basis.mu[k] / wn});
        acc -= wn * d_rho_F(model, f, MeasureProfile::atoms(std::move(atoms)), t, x);
    }
    return acc;
}

// psi on a (log-spaced maturity) x lattice table with linear interpolation in
// t; the state axis is exact, so the only attributed tolerance is the t-interp
// at the pre-jump left limits
class PsiTable {
public:
    PsiTable(const LevyModel& model, const TestFunction& f, const JumpBasis& basis,
             std::size_t t_levels = 129, double deepest_ttm = 1e-6)
        : model_(model), basis_(basis) {
        const double T = model.horizon();
        for (double ttm : logspace(deepest_ttm * T, T, t_levels)) t_.push_back(T - ttm);
        std::sort(t_.begin(), t_.end());
        // lattice states reachable over the full horizon
        const LatticeLaw& law = model.lattice_law(T);
        m_min_ = law.m_min;
        m_count_ = law.prob.size();
        values_.assign(basis.size(),
                       std::vector<double>(t_.size() * m_count_, 0.0));
        for (std::size_t j = 0; j < basis.size(); ++j)
            for (std::size_t l = 0; l < t_.size(); ++l)
                for (std::size_t mi = 0; mi < m_count_; ++mi) {
                    double x = law.h * static_cast<double>(m_min_ + static_cast<long>(mi));
                    values_[j][l * m_count_ + mi] = psi_field(model_, f, basis_, j, t_[l], x);
                }
    }

    double eval(std::size_t j, double t, double x) const {
        const double h = model_.lattice_pitch();
        long m = static_cast<long>(std::llround(x / h));
        long mi = m - m_min_;
        if (mi < 0 || mi >= static_cast<long>(m_count_)) return 0.0; // out of reachable span
        auto it = std::upper_bound(t_.begin(), t_.end(), t);
        std::size_t l1 = std::min<std::size_t>(t_.size() - 1,
                                               static_cast<std::size_t>(it - t_.begin()));
        std::size_t l0 = l1 > 0 ? l1 - 1 : 0;
        double w = t_[l1] > t_[l0] ? (t - t_[l0]) / (t_[l1] - t_[l0]) : 0.0;
        w = std::clamp(w, 0.0, 1.0);
        double v0 = values_[j][l0 * m_count_ + static_cast<std::size_t>(mi)];
        double v1 = values_[j][l1 * m_count_ + static_cast<std::size_t>(mi)];
        return (1.0 - w) * v0 + w * v1;
    }

    const std::vector<double>& levels() const { return t_; }

private:
    const LevyModel& model_;
    const JumpBasis& basis_;
    std::vector<double> t_;
    long m_min_ = 0;
    std::size_t m_count_ = 0;
    std::vector<std::vector<double>> values_;
};

struct ReconstructStats {
    double rel_l2_residual = 0.0;
    double abs_l2_residual = 0.0;
    double residual_stderr = 0.0;
    double var_f = 0.0;
};

// per-replica check of f(X_T) = E f(X_T) + sum_j int psi_{t-}^j dX^{D_j}
inline ReconstructStats reconstruct(const LevyModel& model, const TestFunction& f,
                                    const JumpBasis& basis, const PsiTable& psi,
                                    std::size_t replicas, std::uint64_t seed) {
    const double T = model.horizon();
    std::vector<JumpAtom> atoms = model.atoms();
    ProcessSpec spec = ProcessSpec::compound_poisson(T, atoms);
    // E f(X_T) and Var f(X_T) exactly from the lattice law
    const LatticeLaw& law = model.lattice_law(T);
    double mean_f = 0.0, second = 0.0;
    for (std::size_t i = 0; i < law.prob.size(); ++i) {
        double x = law.h * static_cast<double>(law.m_min + static_cast<long>(i));
        mean_f += law.prob[i] * f(x);
        second += law.prob[i] * f(x) * f(x);
    }
    RunningStat res_sq;
    static const QuadNodes gl = gauss_legendre(16);
    for (std::uint64_t r = 0; r < replicas; ++r) {
        RngStream rng(seed, r);
        SampledPath path = simulate_path(spec, {0.0}, rng);
        double total = 0.0;
        for (std::size_t j = 0; j < basis.size(); ++j) {
            double integral = 0.0;
            // jump leg
            for (double tj : path.jump_times()) {
                double dz = path.jump_at(tj);
                std::size_t k = 0;
                for (; k < basis.z.size(); ++k)
                    if (std::fabs(dz - basis.z[k]) < 1e-9) break;
                double xdj = basis.D[j][k] * dz;
                integral += psi.eval(j, tj, path.left_limit(tj)) * xdj;
            }
            // compensator leg: -rate int_0^T psi(t, X_t) dt, exact per segment
            double rate = basis.compensator_rate(j);
            if (rate != 0.0) {
                std::vector<double> seg{0.0};
                for (double tj : path.jump_times()) seg.push_back(tj);
                seg.push_back(T);
                double leg = 0.0;
                for (std::size_t si = 0; si + 1 < seg.size(); ++si) {
                    double x_here = path.evaluate(seg[si]);
                    for (std::size_t q = 0; q < gl.x.size(); ++q) {
                        double t = 0.5 * (seg[si] + seg[si + 1])
                                 + 0.5 * (seg[si + 1] - seg[si]) * gl.x[q];
                        leg += 0.5 * (seg[si + 1] - seg[si]) * gl.w[q]
                             * psi.eval(j, t, x_here);
                    }
                }
                integral -= rate * leg;
            }
            total += integral;
        }
        double resid = f(path.evaluate(T)) - mean_f - total;
        res_sq.add(resid * resid);
    }
    ReconstructStats out;
    out.var_f = second - mean_f * mean_f;
    out.abs_l2_residual = std::sqrt(std::max(res_sq.mean(), 0.0));
    out.rel_l2_residual = out.var_f > 1e-14
                              ? out.abs_l2_residual / std::sqrt(out.var_f)
                              : out.abs_l2_residual;
    out.residual_stderr = res_sq.stderr_mean();
    return out;
}

struct GkwErrorStats {
    double l2 = 0.0;            // E E_T(f; tau, D_j)^2
    double l2_stderr = 0.0;
    double bmo_lhs = 0.0;       // max bin of E[|E_T - E_a|^2 | bin]
    double bmo_rhs = 0.0;       // max bin of int D^2 dmu * E[[psi;tau]_T - [psi;tau]_a | bin]
    double bmo_agree_sigma = 0.0; // |lhs - rhs| in combined stderr units per worst bin
};

// Riemann error of int psi_{t-} dX^{D_j} up to t_stop along a fixed path
inline double gkw_path_error(const LevyModel& model, const JumpBasis& basis,
                             const PsiTable& psi, std::size_t j, const TimeNet& net,
                             const SampledPath& path, double t_stop) {
    const auto& knots = net.knots();
    static const QuadNodes gl = gauss_legendre(8);
    double rate = basis.compensator_rate(j);
    (void)model;
    {
        auto value_to = [&](double t_stop) {
            double integral = 0.0;
            for (double tj : path.jump_times()) {
                if (tj > t_stop) break;
                double dz = path.jump_at(tj);
                std::size_t k = 0;
                for (; k < basis.z.size(); ++k)
                    if (std::fabs(dz - basis.z[k]) < 1e-9) break;
                integral += psi.eval(j, tj, path.left_limit(tj)) * basis.D[j][k] * dz;
            }
            if (rate != 0.0) {
                std::vector<double> seg{0.0};
                for (double tj : path.jump_times())
                    if (tj < t_stop) seg.push_back(tj);
                seg.push_back(t_stop);
                double leg = 0.0;
                for (std::size_t si = 0; si + 1 < seg.size(); ++si) {
                    double x_here = path.evaluate(seg[si]);
                    for (std::size_t q = 0; q < gl.x.size(); ++q) {
                        double t = 0.5 * (seg[si] + seg[si + 1])
                                 + 0.5 * (seg[si + 1] - seg[si]) * gl.x[q];
                        leg += 0.5 * (seg[si + 1] - seg[si]) * gl.w[q]
                             * psi.eval(j, t, x_here);
                    }
                }
                integral -= rate * leg;
            }
            // Riemann leg with the predictable left-limit values at the knots
            double riemann = 0.0;
            for (std::size_t i = 1; i < knots.size(); ++i) {
                double lo = knots[i - 1], hi = std::min(knots[i], t_stop);
                if (hi <= lo) break;
                double pred = psi.eval(j, lo, path.evaluate(lo));
                double dxd = 0.0;
                for (double tj : path.jump_times())
                    if (tj > lo && tj <= hi) {
                        double dz = path.jump_at(tj);
                        std::size_t k = 0;
                        for (; k < basis.z.size(); ++k)
                            if (std::fabs(dz - basis.z[k]) < 1e-9) break;
                        dxd += basis.D[j][k] * dz;
                    }
                dxd -= rate * (hi - lo);
                riemann += pred * dxd;
            }
            return integral - riemann;
        };
        return value_to(t_stop);
    }
}

// Error statistics along a net, with the square-function identity cross-check
// binned at the probe knot
inline GkwErrorStats gkw_error(const LevyModel& model, const TestFunction& f,
                               const JumpBasis& basis, const PsiTable& psi, std::size_t j,
                               const TimeNet& net, std::size_t replicas, std::uint64_t seed,
                               std::size_t probe_knot = 0) {
    const double T = model.horizon();
    ProcessSpec spec = ProcessSpec::compound_poisson(T, model.atoms());
    const auto& knots = net.knots();
    double a_probe = probe_knot > 0 && probe_knot < knots.size() ? knots[probe_knot] : -1.0;
    static const QuadNodes gl = gauss_legendre(8);
    RunningStat e_sq;
    std::map<long, RunningStat> bin_lhs, bin_rhs;
    for (std::uint64_t r = 0; r < replicas; ++r) {
        RngStream rng(seed, r);
        SampledPath path = simulate_path(spec, {0.0}, rng);
        double e_T = gkw_path_error(model, basis, psi, j, net, path, T);
        e_sq.add(e_T * e_T);
        if (a_probe > 0.0) {
            double e_a = gkw_path_error(model, basis, psi, j, net, path, a_probe);
            long state = static_cast<long>(
                std::llround(path.evaluate(a_probe) / model.lattice_pitch()));
            bin_lhs[state].add((e_T - e_a) * (e_T - e_a));
            // square-function leg on the same path: int_a^T (psi_u - psi_pred)^2 du
            double sq = 0.0;
            for (std::size_t i = 1; i < knots.size(); ++i) {
                double lo = std::max(knots[i - 1], a_probe), hi = knots[i];
                if (hi <= lo) continue;
                double pred_t = std::max(knots[i - 1], 0.0);
                double pred = psi.eval(j, pred_t, path.evaluate(pred_t));
                std::vector<double> seg{lo};
                for (double tj : path.jump_times())
                    if (tj > lo && tj < hi) seg.push_back(tj);
                seg.push_back(hi);
                for (std::size_t si = 0; si + 1 < seg.size(); ++si) {
                    double x_here = path.evaluate(seg[si]);
                    for (std::size_t q = 0; q < gl.x.size(); ++q) {
                        double t = 0.5 * (seg[si] + seg[si + 1])
                                 + 0.5 * (seg[si + 1] - seg[si]) * gl.x[q];
                        double d = psi.eval(j, t, x_here) - pred;
                        sq += 0.5 * (seg[si + 1] - seg[si]) * gl.w[q] * d * d;
                    }
                }
            }
            bin_rhs[state].add(sq); // int D^2 dmu = 1 for orthonormal D_j
        }
    }
    GkwErrorStats out;
    out.l2 = e_sq.mean();
    out.l2_stderr = e_sq.stderr_mean();
    for (auto& [state, lhs] : bin_lhs) {
        auto it = bin_rhs.find(state);
        if (it == bin_rhs.end() || lhs.count() < 100) continue;
        double se = std::sqrt(lhs.stderr_mean() * lhs.stderr_mean()
                              + it->second.stderr_mean() * it->second.stderr_mean());
        double gap = std::fabs(lhs.mean() - it->second.mean());
        if (lhs.mean() > out.bmo_lhs) {
            out.bmo_lhs = lhs.mean();
            out.bmo_rhs = it->second.mean();
            out.bmo_agree_sigma = se > 0.0 ? gap / se : 0.0;
        }
    }
    return out;
}

// Var f(X_T) = sum_j E int_0^T psi^j(t, X_t)^2 dt, evaluated deterministically
// through the lattice marginals
inline double parseval_rhs(const LevyModel& model, const TestFunction& f,
                           const JumpBasis& basis, const PsiTable& psi,
                           std::size_t t_cells = 96) {
    const double T = model.horizon();
    static const QuadNodes gl = gauss_legendre(6);
    double total = 0.0;
    for (std::size_t c = 0; c < t_cells; ++c) {
        double lo = T * static_cast<double>(c) / static_cast<double>(t_cells);
        double hi = T * static_cast<double>(c + 1) / static_cast<double>(t_cells);
        for (std::size_t q = 0; q < gl.x.size(); ++q) {
            double t = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.x[q];
            const LatticeLaw& law = model.lattice_law(std::max(t, 1e-12));
            double acc = 0.0;
            for (std::size_t i = 0; i < law.prob.size(); ++i) {
                double x = law.h * static_cast<double>(law.m_min + static_cast<long>(i));
                for (std::size_t j = 0; j < basis.size(); ++j) {
                    double v = psi.eval(j, t, x);
                    acc += law.prob[i] * v * v;
                }
            }
            total += 0.5 * (hi - lo) * gl.w[q] * acc;
        }
    }
    return total;
}

} // namespace fracpath
