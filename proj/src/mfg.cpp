#include "rmfg/mfg.hpp"

#include <cmath>
#include <stdexcept>

namespace rmfg {

namespace {

void validate_config(const MFGConfig& cfg) {
    if (cfg.npaths == 0) throw std::invalid_argument("MFGConfig: npaths must be positive");
    if (!(cfg.damping >= 0.0 && cfg.damping <= 1.0))
        throw std::invalid_argument("MFGConfig: damping must lie in [0, 1]");
    if (!(cfg.tolerance > 0.0))
        throw std::invalid_argument("MFGConfig: tolerance must be positive");
    if (cfg.quad_order == 0)
        throw std::invalid_argument("MFGConfig: quadrature order must be >= 1");
}

// Particle-interleaved mixing: a lambda fraction of particles is refreshed
// from the new flow each round. The refresh pattern rotates with the round
// index so every particle is refreshed at rate lambda and no path survives
// more than ~1/lambda rounds; a fixed refresh set would leave the complement
// stuck on its bootstrap paths and pin the residual above the tolerance.
// Deterministic in (i, round), so identical runs mix identically.
MeasureFlow mix_flows(const MeasureFlow& old_flow, const MeasureFlow& new_flow,
                      double lambda, std::size_t round) {
    const auto& po = old_flow.paths();
    const auto& pn = new_flow.paths();
    if (po.size() != pn.size())
        throw std::invalid_argument("mix_flows: particle counts differ");
    std::vector<std::vector<double>> mixed(po.size());
    for (std::size_t i = 0; i < po.size(); ++i) {
        double at = static_cast<double>(i + round);
        bool refresh = std::floor((at + 1.0) * lambda) > std::floor(at * lambda);
        mixed[i] = refresh ? pn[i] : po[i];
    }
    return MeasureFlow::from_paths(old_flow.grid(), mixed);
}

}  // namespace

std::pair<MeasureFlow, DPSolution> phi_map(const CoefficientSet& c, const ControlGrid& cg,
                                           const MeasureFlow& mu, const MFGConfig& cfg) {
    validate_config(cfg);
    if (mu.grid() != cfg.grid)
        throw std::invalid_argument("phi_map: flow grid does not match config grid");
    GaussHermite quad(cfg.quad_order);
    DPSolution dp = solve_dp(c, mu, cfg.sgrid, cg, quad);
    PathBundle pb = simulate_reflected(c, mu, dp.policy, cfg.npaths,
                                       derive_seed(cfg.seed, stream::kPhi));
    MeasureFlow next = MeasureFlow::from_paths(cfg.grid, pb.X);
    return {std::move(next), std::move(dp)};
}

MFGSolution solve_fixed_point(const CoefficientSet& c, const ControlGrid& cg,
                              const MFGConfig& cfg, const MeasureFlow* warm_start) {
    validate_config(cfg);

    MeasureFlow mu = [&]() -> MeasureFlow {
        if (warm_start) {
            if (!warm_start->path_coupled())
                throw std::invalid_argument("solve_fixed_point: warm start must carry particles");
            if (warm_start->grid() != cfg.grid)
                throw std::invalid_argument("solve_fixed_point: warm start grid mismatch");
            return *warm_start;
        }
        // Uncontrolled initialization: uniform control mixture simulated
        // against a point-mass bootstrap flow at x0.
        std::vector<std::vector<double>> boot(
            cfg.npaths, std::vector<double>(cfg.grid.nodes(), c.x0));
        MeasureFlow boot_flow = MeasureFlow::from_paths(cfg.grid, boot);
        RelaxedPolicy uniform = RelaxedPolicy::uniform(cfg.grid, cfg.sgrid, cg);
        PathBundle pb = simulate_reflected(c, boot_flow, uniform, cfg.npaths,
                                           derive_seed(cfg.seed, stream::kPhi));
        return MeasureFlow::from_paths(cfg.grid, pb.X);
    }();

    if (cfg.max_iterations == 0) {
        RelaxedPolicy uniform = RelaxedPolicy::uniform(cfg.grid, cfg.sgrid, cg);
        return MFGSolution{std::move(mu), std::move(uniform), std::nullopt,
                           false,        {},                  0,
                           0,            0.0};
    }

    std::vector<double> residuals;
    residuals.reserve(cfg.max_iterations);
    for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
        auto [next, dp] = phi_map(c, cg, mu, cfg);
        double r = flow_distance(mu, next, FlowDistanceMode::Sup);
        residuals.push_back(r);
        double max_state = 0.0;
        for (std::size_t k = 0; k < next.nodes(); ++k)
            max_state = std::max(max_state, next.at(k).samples().back());
        if (r <= cfg.tolerance || it + 1 == cfg.max_iterations) {
            return MFGSolution{std::move(mu),
                               std::move(dp.policy),
                               dp.value_at_x0,
                               r <= cfg.tolerance,
                               std::move(residuals),
                               dp.clamped_transitions,
                               dp.total_transitions,
                               max_state};
        }
        mu = mix_flows(mu, next, cfg.damping, it);
    }
    throw std::logic_error("solve_fixed_point: unreachable");
}

double residual(const CoefficientSet& c, const ControlGrid& cg, const MeasureFlow& mu,
                const MFGConfig& cfg) {
    auto [next, dp] = phi_map(c, cg, mu, cfg);
    (void)dp;
    return flow_distance(mu, next, FlowDistanceMode::Sup);
}

TruncationResult solve_with_truncation(const CoefficientSet& c, const ControlGrid& cg,
                                       const MFGConfig& cfg,
                                       const std::vector<double>& levels) {
    if (levels.empty())
        throw std::invalid_argument("solve_with_truncation: empty level schedule");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (!(levels[i] > 0.0))
            throw std::invalid_argument("solve_with_truncation: levels must be positive");
        if (i > 0 && !(levels[i] > levels[i - 1]))
            throw std::invalid_argument("solve_with_truncation: levels must increase strictly");
    }
    TruncationResult out;
    out.levels = levels;
    for (std::size_t i = 0; i < levels.size(); ++i) {
        CoefficientSet cn = truncate_coefficients(c, levels[i]);
        const MeasureFlow* warm = out.solutions.empty() ? nullptr : &out.solutions.back().flow;
        out.solutions.push_back(solve_fixed_point(cn, cg, cfg, warm));
        if (i > 0)
            out.gaps.push_back(flow_distance(out.solutions[i - 1].flow,
                                             out.solutions[i].flow, FlowDistanceMode::Sup));
    }
    return out;
}

}  // namespace rmfg
