// Shared plumbing: error types, grid types, small numeric helpers.
#ifndef RMFG_COMMON_HPP
#define RMFG_COMMON_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace rmfg {

// Thrown when a coefficient or state evaluates to NaN/Inf during simulation
// or dynamic programming. Carries the point at which evaluation blew up.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what_arg, double t, double x, double u)
        : std::runtime_error(what_arg + " at t=" + std::to_string(t) +
                             " x=" + std::to_string(x) + " u=" + std::to_string(u)),
          t_(t), x_(x), u_(u) {}
    double t() const { return t_; }
    double x() const { return x_; }
    double u() const { return u_; }

private:
    double t_, x_, u_;
};

// Uniform grid on [0, T]. Node steps() lands on T exactly.
class TimeGrid {
public:
    TimeGrid() : horizon_(1.0), steps_(1) {}
    TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
        if (!(horizon > 0.0) || steps == 0)
            throw std::invalid_argument("TimeGrid: need horizon > 0 and steps >= 1");
    }
    double horizon() const { return horizon_; }
    std::size_t steps() const { return steps_; }
    std::size_t nodes() const { return steps_ + 1; }
    double dt() const { return horizon_ / static_cast<double>(steps_); }
    double node(std::size_t k) const {
        return k == steps_ ? horizon_
                           : horizon_ * static_cast<double>(k) / static_cast<double>(steps_);
    }
    bool operator==(const TimeGrid& o) const {
        return steps_ == o.steps_ && horizon_ == o.horizon_;
    }
    bool operator!=(const TimeGrid& o) const { return !(*this == o); }

private:
    double horizon_;
    std::size_t steps_;
};

// Uniform grid on [0, xmax] used for value functions and policy tables.
class StateGrid {
public:
    StateGrid() : xmax_(1.0), count_(2) {}
    StateGrid(double xmax, std::size_t count) : xmax_(xmax), count_(count) {
        if (!(xmax > 0.0) || count < 2)
            throw std::invalid_argument("StateGrid: need xmax > 0 and at least 2 nodes");
    }
    double xmax() const { return xmax_; }
    std::size_t count() const { return count_; }
    double spacing() const { return xmax_ / static_cast<double>(count_ - 1); }
    double node(std::size_t j) const {
        return j == count_ - 1
                   ? xmax_
                   : xmax_ * static_cast<double>(j) / static_cast<double>(count_ - 1);
    }
    // Nearest node, clamped to the grid. Used for policy lookup.
    std::size_t nearest(double x) const {
        if (!(x > 0.0)) return 0;
        double jf = x / spacing();
        auto j = static_cast<std::size_t>(jf + 0.5);
        return j >= count_ ? count_ - 1 : j;
    }
    // Linear interpolation weights: value(x) ~ (1-w)*v[j] + w*v[j+1].
    // Clamps outside [0, xmax]; reports whether the upper end clamped.
    void interp(double x, std::size_t& j, double& w, bool* clamped_high = nullptr) const {
        if (clamped_high) *clamped_high = false;
        if (!(x > 0.0)) { j = 0; w = 0.0; return; }
        if (x >= xmax_) {
            j = count_ - 2;
            w = 1.0;
            if (clamped_high && x > xmax_) *clamped_high = true;
            return;
        }
        double jf = x / spacing();
        j = static_cast<std::size_t>(jf);
        if (j > count_ - 2) j = count_ - 2;
        w = jf - static_cast<double>(j);
        if (w < 0.0) w = 0.0;
        if (w > 1.0) w = 1.0;
    }
    bool operator==(const StateGrid& o) const {
        return count_ == o.count_ && xmax_ == o.xmax_;
    }

private:
    double xmax_;
    std::size_t count_;
};

// Runs fn(begin, end) over a contiguous partition of [0, n). Each chunk writes
// disjoint output, so results do not depend on the schedule or thread count.
// The first worker exception (in chunk order) is rethrown after the join.
inline void parallel_for(std::size_t n, unsigned nthreads,
                         const std::function<void(std::size_t, std::size_t)>& fn) {
    if (n == 0) return;
    if (nthreads == 0) nthreads = 1;
    if (nthreads <= 1 || n < 2 * nthreads) {
        fn(0, n);
        return;
    }
    std::size_t chunk = (n + nthreads - 1) / nthreads;
    std::size_t nchunks = (n + chunk - 1) / chunk;
    std::vector<std::exception_ptr> errors(nchunks);
    std::vector<std::thread> pool;
    pool.reserve(nchunks);
    for (std::size_t t = 0; t < nchunks; ++t) {
        std::size_t b = t * chunk;
        std::size_t e = std::min(n, b + chunk);
        pool.emplace_back([&, t, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                errors[t] = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    for (auto& err : errors)
        if (err) std::rethrow_exception(err);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Sample standard error of the mean.
inline double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / (static_cast<double>(v.size()) - 1.0) /
                     static_cast<double>(v.size()));
}

}  // namespace rmfg

#endif
