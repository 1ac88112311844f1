// Single-agent control against a frozen flow: Gauss-Hermite transition
// quadrature, backward dynamic programming on a state grid, Monte Carlo cost
// evaluation, and the mixture-geometry probe behind the strict-control
// reduction.
#ifndef RMFG_AGENT_HPP
#define RMFG_AGENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rmfg/dynamics.hpp"

namespace rmfg {

// Nodes/weights for E[phi(N(0,1))] = sum w_i phi(y_i); exact for polynomials
// up to degree 2n-1.
class GaussHermite {
public:
    explicit GaussHermite(std::size_t order);
    std::size_t order() const { return y_.size(); }
    const std::vector<double>& nodes() const { return y_; }     // standard-normal points
    const std::vector<double>& weights() const { return w_; }   // sum to 1

private:
    std::vector<double> y_, w_;
};

struct DPSolution {
    TimeGrid grid;
    StateGrid sgrid;
    std::vector<std::vector<double>> value;  // [time node][state node]
    RelaxedPolicy policy;                    // Dirac rows; uniform over exact ties
    double value_at_x0 = 0.0;
    std::uint64_t clamped_transitions = 0;   // quadrature points clamped at xmax
    std::uint64_t total_transitions = 0;
};

// Backward induction with reflected-at-zero, clamped-at-xmax transitions and
// linear interpolation of the continuation value.
DPSolution solve_dp(const CoefficientSet& c, const MeasureFlow& mu, const StateGrid& sg,
                    const ControlGrid& cg, const GaussHermite& quad);

// Pathwise cost of a simulated bundle under its own applied mixtures:
// sum f dt (left endpoint) + sum h dK + g at the terminal node.
struct CostEstimate {
    double mean = 0.0;
    double stderr_mean = 0.0;
    std::vector<double> per_path;
};
CostEstimate cost_of_bundle(const CoefficientSet& c, const MeasureFlow& mu,
                            const PathBundle& pb);

// simulate_reflected followed by cost_of_bundle.
CostEstimate evaluate_policy(const CoefficientSet& c, const MeasureFlow& mu,
                             const RelaxedPolicy& pi, std::size_t npaths,
                             std::uint64_t seed);

// Per-vertex one-step costs G_i = f_i dt + E[V(step under u_i) + h(t) dK_i],
// with the same reflected/clamped transition quadrature the DP sweep uses.
// Under relaxed-control semantics a mixture q transitions by the mixture of
// the vertex kernels, so its one-step objective is exactly sum_i q_i G_i and
// vertex minimality is structural, not numerical.
std::vector<double> one_step_objectives(const CoefficientSet& c, double t, double x,
                                        const EmpiricalMeasure& mu, const ControlGrid& cg,
                                        const GaussHermite& quad, double dt,
                                        const StateGrid& sg, const std::vector<double>& vnext);

// Probes whether the one-point coefficient set S(t,x,mu) = {(sigma^2, b, e):
// e >= f(u), u in U} looks convex on the sampled control grid: every midpoint
// of two sampled points must be close to some sampled point with no more than
// tolerance excess cost.
enum class ConvexityVerdict { Convex, NotConvex, Inconclusive };
struct ConvexityReport {
    ConvexityVerdict verdict = ConvexityVerdict::Inconclusive;
    double worst_deficiency = 0.0;
    double tolerance = 0.0;
};
ConvexityReport check_convexity_S(const CoefficientSet& c, const ControlGrid& cg,
                                  double t, double x, const EmpiricalMeasure& mu,
                                  double tolerance = 0.0);

void write_value_csv(const std::string& path, const DPSolution& sol);
void write_policy_csv(const std::string& path, const RelaxedPolicy& pi);

}  // namespace rmfg

#endif
