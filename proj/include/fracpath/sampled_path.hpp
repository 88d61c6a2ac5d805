#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace fracpath {

// Piecewise-constant cadlag path on [0,T]: value values[i] on
// [times[i], times[i+1]) and on [times.back(), T] for the last segment.
class SampledPath {
public:
    SampledPath(double horizon, std::vector<double> times, std::vector<double> values)
        : horizon_(horizon), times_(std::move(times)), values_(std::move(values)) {
        if (horizon_ <= 0) throw std::invalid_argument("SampledPath: horizon must be positive");
        if (times_.empty() || times_.size() != values_.size())
            throw std::invalid_argument("SampledPath: times/values size mismatch or empty");
        if (times_.front() != 0.0)
            throw std::invalid_argument("SampledPath: first time must be 0");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i] > times_[i - 1]))
                throw std::invalid_argument("SampledPath: times must be strictly increasing");
        if (times_.back() > horizon_)
            throw std::invalid_argument("SampledPath: last time exceeds horizon");
    }

    static SampledPath constant(double horizon, double value) {
        return SampledPath(horizon, {0.0}, {value});
    }

    double horizon() const { return horizon_; }
    const std::vector<double>& times() const { return times_; }
    const std::vector<double>& values() const { return values_; }
    std::size_t size() const { return times_.size(); }

    // index of the segment containing t (largest i with times[i] <= t)
    std::size_t segment(double t) const {
        check_range(t);
        auto it = std::upper_bound(times_.begin(), times_.end(), t);
        return static_cast<std::size_t>(it - times_.begin()) - 1;
    }

    double evaluate(double t) const { return values_[segment(t)]; }

    double left_limit(double t) const {
        check_range(t);
        if (t == 0.0) return values_.front();
        auto it = std::lower_bound(times_.begin(), times_.end(), t);
        std::size_t i = static_cast<std::size_t>(it - times_.begin());
        if (i < times_.size() && times_[i] == t)
            return i == 0 ? values_.front() : values_[i - 1];
        return values_[i - 1];
    }

    double jump_at(double t) const { return evaluate(t) - left_limit(t); }

    // interior jump times (strictly inside (0,T)) with nonzero jump size
    std::vector<double> jump_times() const {
        std::vector<double> out;
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (values_[i] != values_[i - 1] && times_[i] < horizon_)
                out.push_back(times_[i]);
        return out;
    }

private:
    void check_range(double t) const {
        if (t < 0.0 || t > horizon_)
            throw std::out_of_range("SampledPath: time outside [0,T]");
    }

    double horizon_;
    std::vector<double> times_;
    std::vector<double> values_;
};

// sorted union of two knot sequences, exact duplicates removed
inline std::vector<double> merge_knots(const std::vector<double>& a,
                                       const std::vector<double>& b) {
    std::vector<double> out;
    out.reserve(a.size() + b.size());
    std::merge(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace fracpath
