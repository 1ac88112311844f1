// Finite-population game: N coupled reflected diffusions feeding their own
// empirical measure, symmetric policies, and unilateral-deviation pricing
// under common random numbers.
#ifndef RMFG_NPLAYER_HPP
#define RMFG_NPLAYER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rmfg/agent.hpp"
#include "rmfg/dynamics.hpp"

namespace rmfg {

struct GameConfig {
    std::size_t nplayers = 2;
    std::size_t replications = 100;
    std::uint64_t seed = 1;
    StateGrid sgrid;                      // for the best-response sweep
    std::size_t quad_order = 7;
    std::vector<std::uint64_t> seed_ids;  // optional per-player stream ids (default 0..N-1)
};

struct NPlayerResult {
    MeasureFlow mean_flow;                   // all replications x players pooled
    std::vector<double> player_mean_cost;    // one per player, averaged over reps
    std::vector<double> player_se;
    std::vector<double> player0_costs;       // per replication, for paired comparisons
    bool degenerate = false;                 // N == 1: self-coupling through delta_X
};

// Simulates the N-player system with every player using pi. Player i in
// replication r draws from the stream (seed, nplayer-tag, r, seed_ids[i]).
NPlayerResult simulate_nplayer(const CoefficientSet& c, const RelaxedPolicy& pi,
                               const GameConfig& gc);

struct DeviationRow {
    std::string id;
    double cost = 0.0;
    double cost_se = 0.0;
    double gap = 0.0;     // baseline - deviating cost, positive = deviation gains
    double gap_se = 0.0;  // paired, common random numbers
};
struct DeviationReport {
    double baseline = 0.0;
    double baseline_se = 0.0;
    std::vector<DeviationRow> rows;
    std::string best_id;
    double best_gap = 0.0;    // signed; negative means no candidate improved
    double best_gap_se = 0.0;
};

// Prices unilateral deviations of player 0: each constant control, plus the
// the dynamic-programming best response to a pilot run's mean flow. All runs
// reuse the baseline's noise streams, so gaps difference out path noise.
DeviationReport estimate_deviation_gain(const CoefficientSet& c, const RelaxedPolicy& pi,
                                        const GameConfig& gc);

void write_deviation_csv(const std::string& path, std::size_t nplayers,
                         const DeviationReport& rep);

}  // namespace rmfg

#endif
