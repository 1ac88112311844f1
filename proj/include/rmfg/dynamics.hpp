// Reflected SDE machinery: coefficient sets with their assumption constants,
// relaxed (measure-valued) policies on grids, the discrete Skorokhod map, and
// the projection-scheme Euler simulator.
#ifndef RMFG_DYNAMICS_HPP
#define RMFG_DYNAMICS_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "rmfg/common.hpp"
#include "rmfg/measures.hpp"
#include "rmfg/rng.hpp"

namespace rmfg {

// A control point in R^d.
using Control = std::vector<double>;

// Finite subset of the compact control set.
class ControlGrid {
public:
    explicit ControlGrid(std::vector<Control> points);
    static ControlGrid scalar(std::vector<double> values);
    const std::vector<Control>& points() const { return points_; }
    std::size_t size() const { return points_.size(); }
    std::size_t dim() const { return points_[0].size(); }
    const Control& at(std::size_t i) const { return points_.at(i); }
    bool operator==(const ControlGrid& o) const { return points_ == o.points_; }

private:
    std::vector<Control> points_;
};

// Model data: drift b(t,x,mu,u), volatility sigma(t,x,mu,u), running cost
// f(t,x,mu,u), terminal cost g(x,mu), boundary cost h(t), plus the constants
// the growth/regularity assumptions are spot-checked against and the start
// point x0 >= 0.
struct CoefficientSet {
    std::function<double(double, double, const EmpiricalMeasure&, const Control&)> b;
    std::function<double(double, double, const EmpiricalMeasure&, const Control&)> sigma;
    std::function<double(double, double, const EmpiricalMeasure&, const Control&)> f;
    std::function<double(double, const EmpiricalMeasure&)> g;
    std::function<double(double)> h;
    double lipschitz_c1 = 1.0;  // C1: Lipschitz scale of b, sigma
    double growth_c2 = 1.0;     // C2: |b|,|sigma| <= C2(1+|x|+sqrt(m2(mu)))
    double lower_c3 = 1.0;      // C3: g >= -C3(1+x^2+m2(mu))
    double upper_c4 = 1.0;      // C4: |f|,g <= C4(1+x^2+m2(mu))
    double x0 = 0.0;
};

// Projects b and sigma pointwise onto [-n, n]; costs are left alone.
CoefficientSet truncate_coefficients(const CoefficientSet& c, double n);

// Worst observed ratio of |coefficient| to its permitted growth bound over
// random probe points. <= 1 everywhere means the spot check passes.
struct GrowthCheck {
    double worst_b_sigma = 0.0;
    double worst_f = 0.0;
    double worst_g = 0.0;
    bool pass(double slack = 1.0) const {
        return worst_b_sigma <= slack && worst_f <= slack && worst_g <= slack;
    }
};
GrowthCheck spot_check_growth(const CoefficientSet& c, const ControlGrid& cg,
                              double horizon, double xprobe, std::uint64_t seed,
                              std::size_t nprobes);

// Weights over control points, tabulated on (time node, state node). Row
// (k, j) is the mixture applied on [t_k, t_{k+1}) at states nearest node j.
class RelaxedPolicy {
public:
    RelaxedPolicy(TimeGrid grid, StateGrid sgrid, ControlGrid cgrid,
                  std::vector<double> weights);
    static RelaxedPolicy uniform(const TimeGrid& grid, const StateGrid& sgrid,
                                 const ControlGrid& cgrid);
    static RelaxedPolicy constant_control(const TimeGrid& grid, const StateGrid& sgrid,
                                          const ControlGrid& cgrid, std::size_t control_index);

    const TimeGrid& grid() const { return grid_; }
    const StateGrid& state_grid() const { return sgrid_; }
    const ControlGrid& control_grid() const { return cgrid_; }
    const double* weights_at(std::size_t k, std::size_t j) const {
        return weights_.data() + (k * sgrid_.count() + j) * cgrid_.size();
    }
    double* weights_at(std::size_t k, std::size_t j) {
        return weights_.data() + (k * sgrid_.count() + j) * cgrid_.size();
    }
    // Mixture applied at time node k for a path at state x (nearest node).
    const double* lookup(std::size_t k, double x) const {
        return weights_at(k, sgrid_.nearest(x));
    }

private:
    TimeGrid grid_;
    StateGrid sgrid_;
    ControlGrid cgrid_;
    std::vector<double> weights_;  // [steps][state nodes][controls]
};

// Mixture-averaged drift, variance and running cost at one point:
// drift = sum q_i b(t,x,mu,u_i), variance = sum q_i sigma(t,x,mu,u_i)^2,
// runcost = sum q_i f(t,x,mu,u_i). Throws NumericError on non-finite values.
struct EffectiveCoefficients {
    double drift;
    double variance;
    double runcost;
};
EffectiveCoefficients effective_coefficients(const CoefficientSet& c, double t, double x,
                                             const EmpiricalMeasure& mu,
                                             const ControlGrid& cg, const double* q);

// Discrete Skorokhod map at zero: x_k = z_k + k_k with k nondecreasing,
// k_0 = 0, x >= 0, and x_k * (k_k - k_{k-1}) = 0 exactly.
void skorokhod_map(const std::vector<double>& z, std::vector<double>& x,
                   std::vector<double>& k);

// Simulated trajectories plus the reflection processes and the policy that
// produced them (kept for applied-control lookups in downstream checks).
struct PathBundle {
    TimeGrid grid;
    std::vector<std::vector<double>> X;  // [path][node]
    std::vector<std::vector<double>> K;
    std::shared_ptr<const RelaxedPolicy> policy;
    std::uint64_t seed = 0;
    std::uint64_t first_path = 0;

    std::size_t npaths() const { return X.size(); }
    const double* applied_weights(std::size_t p, std::size_t k) const {
        return policy->lookup(k, X[p][k]);
    }
};

// Euler scheme with one-step projection: Z = X + drift dt + sqrt(var dt) xi,
// X' = max(Z, 0), dK = max(-Z, 0). Path p draws from the stream derived as
// (seed, paths-tag, first_path + p), so results are independent of chunking
// and thread count.
PathBundle simulate_reflected(const CoefficientSet& c, const MeasureFlow& mu,
                              const RelaxedPolicy& pi, std::size_t npaths,
                              std::uint64_t seed, std::uint64_t first_path = 0,
                              unsigned nthreads = 1);

void write_bundle_csv(const std::string& path, const PathBundle& pb,
                      std::size_t max_paths = 0);

}  // namespace rmfg

#endif
