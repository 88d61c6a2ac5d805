#pragma once

#include <cmath>
#include <cstdint>

namespace fracpath {

// Counter-based generator split by (seed, stream index). Draws are a pure
// function of (seed, index, position), so replicas can be laid out in any
// order without changing results. The distribution code below is hand-rolled
// on purpose: std::normal_distribution is implementation-defined and would
// break bit-identical reruns across toolchains.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::uint64_t index)
        : state_(mix(mix(seed ^ 0x9e3779b97f4a7c15ull) + index)),
          inc_(mix(mix(index + 0xbf58476d1ce4e5b9ull) ^ seed) | 1ull) {}

    std::uint64_t next_u64() {
        state_ = state_ * 6364136223846793005ull + inc_;
        std::uint64_t x = state_;
        x ^= x >> 33; x *= 0xff51afd7ed558ccdull;
        x ^= x >> 33; x *= 0xc4ceb9fe1a85ec53ull;
        x ^= x >> 33;
        return x;
    }

    // uniform on (0,1), never returns an exact endpoint
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform(); }

    // Box-Muller, second draw cached
    double gaussian() {
        if (have_cached_) { have_cached_ = false; return cached_; }
        double u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    double exponential(double rate = 1.0) {
        return -std::log(uniform()) / rate;
    }

    // standard symmetric beta-stable draw (unit scale: E exp(iuX) = exp(-|u|^beta)),
    // Chambers-Mallows-Stuckey construction; beta = 1 falls back to tan (Cauchy).
    double symmetric_stable(double beta) {
        double u = uniform(-1.5707963267948966, 1.5707963267948966);
        if (beta == 1.0) return std::tan(u);
        double w = exponential();
        double t = beta * u;
        return (std::sin(t) / std::pow(std::cos(u), 1.0 / beta))
             * std::pow(std::cos(u - t) / w, (1.0 - beta) / beta);
    }

    std::uint64_t poisson(double mean) {
        // inversion for small means, normal-rejection style loop otherwise
        if (mean < 30.0) {
            double p = std::exp(-mean), cdf = p, u = uniform();
            std::uint64_t k = 0;
            while (u > cdf && k < 10000) {
                ++k;
                p *= mean / static_cast<double>(k);
                cdf += p;
            }
            return k;
        }
        // split recursively: Poisson(m) = Poisson(m/2) + Poisson(m/2)
        return poisson(mean * 0.5) + poisson(mean * 0.5);
    }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ull;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
        return x ^ (x >> 31);
    }

    std::uint64_t state_;
    std::uint64_t inc_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

} // namespace fracpath
