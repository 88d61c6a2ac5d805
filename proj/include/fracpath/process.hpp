#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fracpath/rng.hpp"
#include "fracpath/sampled_path.hpp"

namespace fracpath {

enum class ProcessKind {
    brownian,
    geometric_brownian,
    symmetric_stable,
    cauchy,
    compound_poisson
};

struct JumpAtom {
    double size;
    double rate;
};

struct ProcessSpec {
    ProcessKind kind = ProcessKind::brownian;
    double horizon = 1.0;
    double beta = 0.0;            // symmetric_stable only, in (0,2)
    std::vector<JumpAtom> atoms;  // compound_poisson only

    static ProcessSpec brownian(double T) { return {ProcessKind::brownian, T, 0.0, {}}; }
    static ProcessSpec geometric_brownian(double T) {
        return {ProcessKind::geometric_brownian, T, 0.0, {}};
    }
    static ProcessSpec symmetric_stable(double T, double beta) {
        if (!(beta > 0.0 && beta < 2.0))
            throw std::invalid_argument("symmetric_stable: beta must lie in (0,2)");
        return {ProcessKind::symmetric_stable, T, beta, {}};
    }
    static ProcessSpec cauchy(double T) { return {ProcessKind::cauchy, T, 1.0, {}}; }
    static ProcessSpec compound_poisson(double T, std::vector<JumpAtom> atoms) {
        if (atoms.empty())
            throw std::invalid_argument("compound_poisson: needs at least one atom");
        for (const auto& a : atoms)
            if (!(a.rate > 0.0))
                throw std::invalid_argument("compound_poisson: rates must be positive");
        return {ProcessKind::compound_poisson, T, 0.0, std::move(atoms)};
    }

    double total_rate() const {
        double s = 0.0;
        for (const auto& a : atoms) s += a.rate;
        return s;
    }
};

inline void validate_grid(const ProcessSpec& spec, const std::vector<double>& grid) {
    if (grid.empty() || grid.front() != 0.0)
        throw std::invalid_argument("simulate_path: grid must start at 0");
    for (std::size_t i = 1; i < grid.size(); ++i)
        if (!(grid[i] > grid[i - 1]))
            throw std::invalid_argument("simulate_path: grid must be sorted strictly");
    if (grid.back() > spec.horizon)
        throw std::invalid_argument("simulate_path: grid exceeds horizon");
}

// Samples the process at the grid times; for compound_poisson the exact jump
// times are inserted so the returned step path is the exact trajectory.
inline SampledPath simulate_path(const ProcessSpec& spec, const std::vector<double>& grid,
                                 RngStream& rng) {
    validate_grid(spec, grid);
    switch (spec.kind) {
    case ProcessKind::brownian:
    case ProcessKind::geometric_brownian: {
        std::vector<double> v(grid.size());
        double w = 0.0;
        v[0] = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            w += std::sqrt(grid[i] - grid[i - 1]) * rng.gaussian();
            v[i] = w;
        }
        if (spec.kind == ProcessKind::geometric_brownian)
            for (std::size_t i = 0; i < v.size(); ++i)
                v[i] = std::exp(v[i] - 0.5 * grid[i]);
        return SampledPath(spec.horizon, grid, std::move(v));
    }
    case ProcessKind::symmetric_stable:
    case ProcessKind::cauchy: {
        double beta = spec.kind == ProcessKind::cauchy ? 1.0 : spec.beta;
        std::vector<double> v(grid.size());
        double x = 0.0;
        v[0] = 0.0;
        for (std::size_t i = 1; i < grid.size(); ++i) {
            double dt = grid[i] - grid[i - 1];
            x += std::pow(dt, 1.0 / beta) * rng.symmetric_stable(beta);
            v[i] = x;
        }
        return SampledPath(spec.horizon, grid, std::move(v));
    }
    case ProcessKind::compound_poisson: {
        double lam = spec.total_rate();
        std::vector<double> jt, js;
        double t = rng.exponential(lam);
        while (t < spec.horizon) {
            double u = rng.uniform() * lam, acc = 0.0;
            double size = spec.atoms.back().size;
            for (const auto& a : spec.atoms) {
                acc += a.rate;
                if (u <= acc) { size = a.size; break; }
            }
            jt.push_back(t);
            js.push_back(size);
            t += rng.exponential(lam);
        }
        std::vector<double> times = merge_knots(grid, jt);
        std::vector<double> values(times.size(), 0.0);
        double level = 0.0;
        std::size_t j = 0;
        for (std::size_t i = 0; i < times.size(); ++i) {
            while (j < jt.size() && jt[j] <= times[i]) level += js[j++];
            values[i] = level;
        }
        return SampledPath(spec.horizon, times, std::move(values));
    }
    }
    throw std::logic_error("simulate_path: unreachable");
}

} // namespace fracpath
