#include "rmfg/nplayer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rmfg/csv.hpp"

namespace rmfg {

namespace {

constexpr std::uint64_t kPilotOffset = 0x70696c6fu;  // pilot run stream marker

struct SystemRun {
    // costs[r][i]: player i's realized cost in replication r.
    std::vector<std::vector<double>> costs;
    // states[r * N + i] over nodes, for pooled flow building.
    std::vector<std::vector<double>> states;
};

// One synchronous pass of the system. deviant, if nonnull, replaces pi for
// player 0 only. Streams depend only on (seed, replication, seed id), never
// on the policies, so deviation runs see identical noise.
SystemRun run_system(const CoefficientSet& c, const RelaxedPolicy& pi,
                     const RelaxedPolicy* deviant, const GameConfig& gc,
                     bool keep_states) {
    const std::size_t N = gc.nplayers;
    const TimeGrid& grid = pi.grid();
    const std::size_t steps = grid.steps();
    const double dt = grid.dt();
    const ControlGrid& cg = pi.control_grid();
    if (deviant) {
        if (deviant->grid() != grid || !(deviant->control_grid() == cg))
            throw std::invalid_argument("run_system: deviant policy grids differ");
    }

    std::vector<std::uint64_t> ids = gc.seed_ids;
    if (ids.empty()) {
        ids.resize(N);
        for (std::size_t i = 0; i < N; ++i) ids[i] = i;
    }
    if (ids.size() != N)
        throw std::invalid_argument("run_system: seed id list must have one entry per player");

    SystemRun out;
    out.costs.assign(gc.replications, std::vector<double>(N, 0.0));
    if (keep_states)
        out.states.assign(gc.replications * N, std::vector<double>(grid.nodes()));

    std::vector<double> x(N), k_acc(N), cost(N), xnew(N);
    std::vector<Xoshiro256pp> rngs;
    rngs.reserve(N);
    for (std::size_t r = 0; r < gc.replications; ++r) {
        rngs.clear();
        for (std::size_t i = 0; i < N; ++i)
            rngs.emplace_back(derive_seed(gc.seed, stream::kNPlayer, r, ids[i]));
        std::fill(x.begin(), x.end(), c.x0);
        std::fill(k_acc.begin(), k_acc.end(), 0.0);
        std::fill(cost.begin(), cost.end(), 0.0);
        if (keep_states)
            for (std::size_t i = 0; i < N; ++i) out.states[r * N + i][0] = c.x0;

        for (std::size_t s = 0; s < steps; ++s) {
            double t = grid.node(s);
            EmpiricalMeasure mu_bar(x);  // includes every player, self included
            double ht = c.h(t);
            for (std::size_t i = 0; i < N; ++i) {
                const RelaxedPolicy& pol = (deviant && i == 0) ? *deviant : pi;
                const double* q = pol.lookup(s, x[i]);
                auto eff = effective_coefficients(c, t, x[i], mu_bar, cg, q);
                double xi = rngs[i].normal();
                double z = x[i] + eff.drift * dt + std::sqrt(eff.variance * dt) * xi;
                if (!std::isfinite(z)) throw NumericError("non-finite state update", t, x[i], 0.0);
                double xn = z > 0.0 ? z : 0.0;
                cost[i] += eff.runcost * dt + ht * (xn - z);
                k_acc[i] += xn - z;
                xnew[i] = xn;
                if (keep_states) out.states[r * N + i][s + 1] = xn;
            }
            x.swap(xnew);
        }
        EmpiricalMeasure mu_T(x);
        for (std::size_t i = 0; i < N; ++i) {
            cost[i] += c.g(x[i], mu_T);
            out.costs[r][i] = cost[i];
        }
    }
    return out;
}

}  // namespace

NPlayerResult simulate_nplayer(const CoefficientSet& c, const RelaxedPolicy& pi,
                               const GameConfig& gc) {
    if (gc.nplayers == 0) throw std::invalid_argument("simulate_nplayer: need at least 1 player");
    if (gc.replications < 2)
        throw std::invalid_argument("simulate_nplayer: need at least 2 replications");
    SystemRun run = run_system(c, pi, nullptr, gc, true);

    NPlayerResult res{MeasureFlow::from_paths(pi.grid(), run.states),
                      std::vector<double>(gc.nplayers),
                      std::vector<double>(gc.nplayers),
                      {},
                      gc.nplayers == 1};
    std::vector<double> per_rep(gc.replications);
    for (std::size_t i = 0; i < gc.nplayers; ++i) {
        for (std::size_t r = 0; r < gc.replications; ++r) per_rep[r] = run.costs[r][i];
        res.player_mean_cost[i] = mean_of(per_rep);
        res.player_se[i] = stderr_of(per_rep);
        if (i == 0) res.player0_costs = per_rep;
    }
    return res;
}

DeviationReport estimate_deviation_gain(const CoefficientSet& c, const RelaxedPolicy& pi,
                                        const GameConfig& gc) {
    if (gc.nplayers == 0) throw std::invalid_argument("estimate_deviation_gain: no players");
    // Pilot pass on its own stream family; its pooled flow is the frozen
    // environment the best response is computed against.
    GameConfig pilot_cfg = gc;
    pilot_cfg.seed = derive_seed(gc.seed, stream::kNPlayer, kPilotOffset);
    NPlayerResult pilot = simulate_nplayer(c, pi, pilot_cfg);

    GaussHermite quad(gc.quad_order);
    DPSolution dp = solve_dp(c, pilot.mean_flow, gc.sgrid, pi.control_grid(), quad);

    NPlayerResult base = simulate_nplayer(c, pi, gc);

    DeviationReport rep;
    rep.baseline = mean_of(base.player0_costs);
    rep.baseline_se = stderr_of(base.player0_costs);

    const ControlGrid& cg = pi.control_grid();
    std::vector<std::pair<std::string, RelaxedPolicy>> candidates;
    for (std::size_t i = 0; i < cg.size(); ++i) {
        std::string id = "const";
        for (double v : cg.at(i)) id += "_" + fmt_double(v);
        candidates.emplace_back(id, RelaxedPolicy::constant_control(
                                        pi.grid(), pi.state_grid(), cg, i));
    }
    candidates.emplace_back("best-response", dp.policy);

    std::vector<double> diff(gc.replications);
    bool first = true;
    for (const auto& [id, cand] : candidates) {
        SystemRun run = run_system(c, pi, &cand, gc, false);
        DeviationRow row;
        row.id = id;
        std::vector<double> costs(gc.replications);
        for (std::size_t r = 0; r < gc.replications; ++r) {
            costs[r] = run.costs[r][0];
            diff[r] = base.player0_costs[r] - costs[r];
        }
        row.cost = mean_of(costs);
        row.cost_se = stderr_of(costs);
        row.gap = mean_of(diff);
        row.gap_se = stderr_of(diff);
        rep.rows.push_back(row);
        if (first || row.gap > rep.best_gap) {
            rep.best_id = row.id;
            rep.best_gap = row.gap;
            rep.best_gap_se = row.gap_se;
            first = false;
        }
    }
    return rep;
}

void write_deviation_csv(const std::string& path, std::size_t nplayers,
                         const DeviationReport& rep) {
    CsvWriter w(path);
    w.row({"nplayers", "candidate", "baseline", "cost", "gap", "gap_se"});
    for (const auto& row : rep.rows)
        w.row({std::to_string(nplayers), row.id, fmt_double(rep.baseline),
               fmt_double(row.cost), fmt_double(row.gap), fmt_double(row.gap_se)});
}

}  // namespace rmfg
