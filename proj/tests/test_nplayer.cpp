// Finite-population game: stream exchangeability, agreement with the
// single-agent picture when the coupling is off, and exact common-random-
// number pairing in the deviation pricer.
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <vector>

#include "rmfg/csv.hpp"
#include "rmfg/nplayer.hpp"
#include "rmfg/scenarios.hpp"

using namespace rmfg;

namespace {

GameConfig game_config(const Scenario& sc, std::size_t n, std::size_t reps,
                       std::uint64_t seed) {
    GameConfig gc;
    gc.nplayers = n;
    gc.replications = reps;
    gc.seed = seed;
    gc.sgrid = sc.sgrid;
    gc.quad_order = 7;
    return gc;
}

RelaxedPolicy uniform_policy(const Scenario& sc, std::size_t steps) {
    return RelaxedPolicy::uniform(TimeGrid(sc.grid.horizon(), steps), sc.sgrid, sc.controls);
}

}  // namespace

TEST_CASE("player costs are exchangeable under seed-id permutation") {
    Scenario sc = make_scenario("toy-coupled");
    RelaxedPolicy pi = uniform_policy(sc, 25);
    GameConfig gc = game_config(sc, 3, 40, 9);

    NPlayerResult fwd = simulate_nplayer(sc.coefficients, pi, gc);
    gc.seed_ids = {2, 1, 0};
    NPlayerResult rev = simulate_nplayer(sc.coefficients, pi, gc);

    // Identity is carried by the stream id, not the player slot: reversing
    // the ids reverses the cost vector bit for bit (the pooled empirical
    // measure is the same set either way).
    REQUIRE(fwd.player_mean_cost.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(fwd.player_mean_cost[i] == rev.player_mean_cost[2 - i]);
        CHECK(fwd.player_se[i] == rev.player_se[2 - i]);
    }
    CHECK_FALSE(fwd.degenerate);
}

TEST_CASE("single-player system is flagged degenerate but runs") {
    Scenario sc = make_scenario("toy-coupled");
    RelaxedPolicy pi = uniform_policy(sc, 20);
    GameConfig gc = game_config(sc, 1, 10, 3);
    NPlayerResult res = simulate_nplayer(sc.coefficients, pi, gc);
    CHECK(res.degenerate);
    CHECK(res.player_mean_cost.size() == 1);
    CHECK(res.player0_costs.size() == 10);
    CHECK(res.mean_flow.nodes() == pi.grid().nodes());
    CHECK(res.mean_flow.at(0).size() == 10);  // reps x players particles per node
    CHECK(res.mean_flow.at(0).samples().front() == sc.coefficients.x0);
}

TEST_CASE("uncoupled players reproduce the single-agent boundary charge") {
    // boundary-cost-bm ignores the empirical measure, so each player is an
    // independent reflected walk and the mean cost is the discrete-exact
    // E K_T from the Spitzer sum at this step count.
    Scenario sc = make_scenario("boundary-cost-bm");
    const std::size_t steps = 50;
    RelaxedPolicy pi = uniform_policy(sc, steps);
    GameConfig gc = game_config(sc, 2, 1000, 1);
    NPlayerResult res = simulate_nplayer(sc.coefficients, pi, gc);

    double dt = 1.0 / static_cast<double>(steps);
    double oracle = 0.0;
    for (std::size_t k = 1; k <= steps; ++k)
        oracle += std::sqrt(static_cast<double>(k) * dt / (2.0 * M_PI)) /
                  static_cast<double>(k);
    CHECK(std::abs(res.player_mean_cost[0] - oracle) <= 3.0 * res.player_se[0]);
    CHECK(std::abs(res.player_mean_cost[1] - oracle) <= 3.0 * res.player_se[1]);
}

TEST_CASE("deviation pricer pairs runs exactly and ranks candidates") {
    Scenario sc = make_scenario("toy-coupled");
    const std::size_t steps = 30;
    // Baseline policy equals the "const_0" candidate, so that candidate's
    // deviation run replays the baseline bit for bit: gap exactly zero.
    RelaxedPolicy pi = RelaxedPolicy::constant_control(
        TimeGrid(sc.grid.horizon(), steps), sc.sgrid, sc.controls, 1);
    GameConfig gc = game_config(sc, 4, 100, 7);
    DeviationReport rep = estimate_deviation_gain(sc.coefficients, pi, gc);

    REQUIRE(rep.rows.size() == sc.controls.size() + 1);
    CHECK(rep.rows[0].id == "const_-1");
    CHECK(rep.rows[1].id == "const_0");
    CHECK(rep.rows[2].id == "const_1");
    CHECK(rep.rows[3].id == "best-response");

    CHECK(rep.rows[1].gap == 0.0);
    CHECK(rep.rows[1].gap_se == 0.0);
    CHECK(rep.rows[1].cost == doctest::Approx(rep.baseline).epsilon(1e-12));

    double best = rep.rows[0].gap;
    for (const auto& row : rep.rows) {
        best = std::max(best, row.gap);
        // Paired gap mean equals the difference of means up to roundoff.
        CHECK(row.gap == doctest::Approx(rep.baseline - row.cost).epsilon(1e-10).scale(1.0));
        CHECK(row.gap_se >= 0.0);
    }
    CHECK(rep.best_gap == best);
    bool found = false;
    for (const auto& row : rep.rows)
        if (row.id == rep.best_id) {
            CHECK(row.gap == rep.best_gap);
            found = true;
        }
    CHECK(found);
}

TEST_CASE("game configuration is validated") {
    Scenario sc = make_scenario("toy-coupled");
    RelaxedPolicy pi = uniform_policy(sc, 10);
    GameConfig gc = game_config(sc, 0, 10, 1);
    CHECK_THROWS_AS(simulate_nplayer(sc.coefficients, pi, gc), std::invalid_argument);
    CHECK_THROWS_AS(estimate_deviation_gain(sc.coefficients, pi, gc), std::invalid_argument);
    gc = game_config(sc, 2, 1, 1);
    CHECK_THROWS_AS(simulate_nplayer(sc.coefficients, pi, gc), std::invalid_argument);
    gc = game_config(sc, 3, 10, 1);
    gc.seed_ids = {0, 1};  // wrong length
    CHECK_THROWS_AS(simulate_nplayer(sc.coefficients, pi, gc), std::invalid_argument);
}

TEST_CASE("deviation csv has one row per candidate") {
    Scenario sc = make_scenario("toy-coupled");
    RelaxedPolicy pi = uniform_policy(sc, 15);
    GameConfig gc = game_config(sc, 2, 20, 5);
    DeviationReport rep = estimate_deviation_gain(sc.coefficients, pi, gc);
    auto dir = std::filesystem::temp_directory_path() / "rmfg_nplayer_tests";
    std::filesystem::create_directories(dir);
    std::string path = (dir / "deviation.csv").string();
    write_deviation_csv(path, gc.nplayers, rep);
    auto rows = read_csv(path);
    CHECK(rows.size() == rep.rows.size());
    for (const auto& r : rows) {
        CHECK(r.size() == 6);
        CHECK(r[0] == "2");
    }
}
