// Checks that tie simulated bundles back to the objects they are supposed to
// discretize: exact Skorokhod bookkeeping, the martingale problem for the
// generator with applied control mixtures, an explicit Gronwall moment bound,
// refinement behaviour of boundary integrals, and continuity of costs in the
// flow argument.
#ifndef RMFG_VERIFY_HPP
#define RMFG_VERIFY_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rmfg/dynamics.hpp"

namespace rmfg {

// Bounded C^2 test functions with closed-form derivatives.
struct TestFunction {
    enum class Kind { One, Rational, Ramp, Bump, Sigmoid };
    std::string name;
    Kind kind;
    double a = 0.0, b = 1.0;  // kind parameters: interval, center/width, or center/scale

    double phi(double x) const;
    double dphi(double x) const;
    double d2phi(double x) const;
    // Whether phi'(0) is materially nonzero, i.e. the function can see a
    // missing boundary compensator.
    bool boundary_sensitive() const;
};

class TestFunctionBasis {
public:
    explicit TestFunctionBasis(std::vector<TestFunction> fns);
    // 10 functions spanning constant, boundary-linear, ramps, bumps and
    // sigmoids, scaled to [0, xmax].
    static TestFunctionBasis default_basis(double xmax);
    const std::vector<TestFunction>& functions() const { return fns_; }

private:
    std::vector<TestFunction> fns_;
};

struct SkorokhodReport {
    bool pass = false;
    double worst_negative_x = 0.0;       // most negative state seen (should be 0)
    double worst_k_decrease = 0.0;       // largest decrease of K (should be 0)
    double worst_complementarity = 0.0;  // max |X_k * dK_k|
    double worst_k0 = 0.0;               // max |K_0|
};
SkorokhodReport check_skorokhod(const PathBundle& pb, double tol);

enum class MartingaleWeight { One, SigmoidOfXs };

struct MartingaleCell {
    std::string phi;
    std::size_t s_node = 0, t_node = 0;
    MartingaleWeight weight = MartingaleWeight::One;
    double stat = 0.0;
    double se = 0.0;
    double allowance = 0.0;
    bool boundary_sensitive = false;
    bool pass = false;
};
struct MartingaleReport {
    std::vector<MartingaleCell> cells;
    double pass_fraction = 0.0;
    bool pass(double required_fraction = 0.9) const {
        return pass_fraction >= required_fraction;
    }
};

// For each (phi, (s,t), weight H) cell, tests E[(M_t - M_s) H] = 0 where
// M_t = phi(X_t) - int (1/2 var phi'' + drift phi') dt - int phi'(X) dK under
// the bundle's applied mixtures. Passes when |mean| <= 3 se + allowance_c*dt;
// calibrate allowance_c with calibrate_martingale_allowance on a half-step
// control run.
MartingaleReport check_martingale(const PathBundle& pb, const CoefficientSet& c,
                                  const MeasureFlow& mu, const TestFunctionBasis& basis,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                  double allowance_c);
double calibrate_martingale_allowance(const MartingaleReport& half_step_report,
                                      double half_dt);

struct MomentBoundReport {
    double lhs = 0.0;          // E[ sup X ^p + K_T^p ]
    double log10_lhs = 0.0;
    double log10_bound = 0.0;  // explicit Gronwall constant (can be astronomically loose)
    bool pass = false;
};
// Integer moment order q >= 1 checks E(||X||^{2q} + ||K||^{2q}) against the
// explicit constant C(T, C2, q, x0) * polynomial in the empirical flow
// sup-moment. Needs mu to evaluate that sup-moment.
MomentBoundReport check_moment_bounds(const PathBundle& pb, const CoefficientSet& c,
                                      const MeasureFlow& mu, std::size_t q);

struct BoundaryLevel {
    double dt = 0.0;
    double integral = 0.0;  // E int h dK at this step size
    double se = 0.0;
};
struct BoundaryReport {
    std::vector<BoundaryLevel> levels;
    std::vector<double> diffs;     // |I_{l+1} - I_l| on coupled paths
    std::vector<double> diff_se;
    bool pass = false;             // differences monotone shrinking within noise
};
// Couples refinements of the same Brownian paths across step sizes (coarse
// increments are sums of fine ones) and watches E int h dK settle.
BoundaryReport check_boundary_integral_convergence(const CoefficientSet& c,
                                                   const MeasureFlow& mu,
                                                   const RelaxedPolicy& pi,
                                                   const std::vector<double>& dt_levels,
                                                   std::size_t npaths, std::uint64_t seed);

struct ContinuityProbe {
    double shift = 0.0;
    double delta_cost = 0.0;
    double se = 0.0;
    double ratio = 0.0;  // delta_cost / shift
};
struct ContinuityReport {
    double base_cost = 0.0;
    std::vector<ContinuityProbe> probes;
    double envelope_slope = 0.0;  // fitted on the smallest shift
    bool pass = false;
};
// Translates the flow by each shift, re-prices the policy under common random
// numbers, and checks the cost increments stay under an affine envelope.
ContinuityReport probe_continuity(const CoefficientSet& c, const MeasureFlow& mu,
                                  const RelaxedPolicy& pi, const std::vector<double>& shifts,
                                  std::size_t npaths, std::uint64_t seed);

void write_martingale_csv(const std::string& path, const MartingaleReport& rep);

}  // namespace rmfg

#endif
