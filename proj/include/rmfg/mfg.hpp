// Mean field fixed point: iterate best response (dynamic programming) and
// flow re-simulation with damped particle mixing until the flow reproduces
// itself in Wasserstein distance.
#ifndef RMFG_MFG_HPP
#define RMFG_MFG_HPP

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "rmfg/agent.hpp"
#include "rmfg/dynamics.hpp"

namespace rmfg {

struct MFGConfig {
    TimeGrid grid;
    StateGrid sgrid;
    std::size_t quad_order = 7;
    std::size_t npaths = 20000;
    std::uint64_t seed = 1;
    double damping = 0.5;         // lambda in (0, 1]; 1 is the undamped map
    double tolerance = 0.05;      // fixed-point epsilon in sup-W2
    std::size_t max_iterations = 30;
};

struct MFGSolution {
    MeasureFlow flow;                  // the flow whose residual was measured
    RelaxedPolicy policy;              // best response to that flow
    std::optional<double> value;       // DP value at x0 (absent if no DP ran)
    bool converged = false;
    std::vector<double> residuals;     // one per phi evaluation
    std::uint64_t dp_clamped = 0;      // from the last DP sweep
    std::uint64_t dp_total = 0;
    double max_state = 0.0;            // largest simulated state seen last round
};

// One application of the best-response map: solve the control problem against
// mu, then push x0-particles through the optimal policy. The simulation seed
// is derived once from cfg.seed, so repeated applications share noise and the
// residual sequence measures contraction rather than Monte Carlo jitter.
std::pair<MeasureFlow, DPSolution> phi_map(const CoefficientSet& c, const ControlGrid& cg,
                                           const MeasureFlow& mu, const MFGConfig& cfg);

// Damped Picard iteration from the uncontrolled flow (uniform mixture policy
// against a point-mass bootstrap), or from *warm_start when given.
MFGSolution solve_fixed_point(const CoefficientSet& c, const ControlGrid& cg,
                              const MFGConfig& cfg,
                              const MeasureFlow* warm_start = nullptr);

// Fixed-point distance d(mu, Phi(mu)) in sup-W2 under cfg's seed.
double residual(const CoefficientSet& c, const ControlGrid& cg, const MeasureFlow& mu,
                const MFGConfig& cfg);

struct TruncationResult {
    std::vector<double> levels;
    std::vector<MFGSolution> solutions;    // one per level, warm-started
    std::vector<double> gaps;              // sup-W2 between consecutive flows
};

// Solves a sequence of coefficient truncations (b, sigma clipped to [-n, n])
// with warm starts, recording how fast the flows stabilize.
TruncationResult solve_with_truncation(const CoefficientSet& c, const ControlGrid& cg,
                                       const MFGConfig& cfg,
                                       const std::vector<double>& levels);

}  // namespace rmfg

#endif
