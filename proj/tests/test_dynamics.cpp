// Reflection machinery against closed-form oracles. The projected Euler walk
// started at zero with driftless unit-volatility increments is a Lindley
// recursion, so its terminal mean and second moment have exact finite-n values
// from the Spitzer identity:
//   E X_n   = sum_{k<=n} a_k / k,                       a_k = sqrt(k dt / 2pi)
//   E X_n^2 = n dt / 2 + sum_{m<=n} sum_{j<m} (a_j/j) (a_{m-j}/(m-j))
// Those sums are evaluated here and frozen below; the simulator must hit them
// within Monte Carlo noise with no discretization allowance at all.
#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "rmfg/common.hpp"
#include "rmfg/dynamics.hpp"
#include "rmfg/rng.hpp"
#include "rmfg/scenarios.hpp"

using namespace rmfg;

namespace {

// Spitzer sums for T = 0.5, n = 50, sigma = 1 (verified against an
// independent-generator Monte Carlo run at 4e6 paths when frozen).
constexpr double kSpitzerMean50 = 0.508746114209253;
constexpr double kSpitzerM2_50 = 0.439920169897022;

double spitzer_mean(double horizon, std::size_t n) {
    double dt = horizon / static_cast<double>(n);
    double s = 0.0;
    for (std::size_t k = 1; k <= n; ++k)
        s += std::sqrt(static_cast<double>(k) * dt / (2.0 * M_PI)) / static_cast<double>(k);
    return s;
}

double spitzer_second_moment(double horizon, std::size_t n) {
    double dt = horizon / static_cast<double>(n);
    std::vector<double> a(n + 1);
    for (std::size_t k = 1; k <= n; ++k)
        a[k] = std::sqrt(static_cast<double>(k) * dt / (2.0 * M_PI)) / static_cast<double>(k);
    double m2 = horizon / 2.0;
    for (std::size_t m = 2; m <= n; ++m)
        for (std::size_t j = 1; j < m; ++j) m2 += a[j] * a[m - j];
    return m2;
}

}  // namespace

TEST_CASE("frozen Spitzer constants match their defining sums") {
    CHECK(spitzer_mean(0.5, 50) == doctest::Approx(kSpitzerMean50).epsilon(1e-14));
    CHECK(spitzer_second_moment(0.5, 50) == doctest::Approx(kSpitzerM2_50).epsilon(1e-14));
}

TEST_CASE("skorokhod map on a worked example") {
    std::vector<double> z{1.0, -0.5, 0.2, -1.0, 0.5};
    std::vector<double> x, k;
    skorokhod_map(z, x, k);
    CHECK(x == std::vector<double>{1.0, 0.0, 0.7, 0.0, 1.5});
    CHECK(k == std::vector<double>{0.0, 0.5, 0.5, 1.0, 1.0});
    CHECK_THROWS_AS(skorokhod_map({}, x, k), std::invalid_argument);
}

TEST_CASE("skorokhod map properties on random free paths") {
    Xoshiro256pp rng(314);
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t n = 1 + static_cast<std::size_t>(rng.uniform() * 40);
        std::vector<double> z(n);
        double acc = 2.0 * rng.uniform() - 0.5;
        for (auto& v : z) {
            v = acc;
            acc += rng.normal() * 0.3;
        }
        std::vector<double> x, k;
        skorokhod_map(z, x, k);
        CHECK(k[0] == std::max(0.0, -z[0]));
        for (std::size_t j = 0; j < n; ++j) {
            CHECK(x[j] >= 0.0);
            CHECK(x[j] == std::max(z[j] + k[j], 0.0));
            if (j > 0) {
                double dk = k[j] - k[j - 1];
                CHECK(dk >= 0.0);
                // Minimality: k moves only while x sits on the boundary.
                if (dk > 0.0) CHECK(x[j] == 0.0);
                CHECK(x[j] * dk == 0.0);
            }
        }
    }
}

TEST_CASE("terminal mean of the driftless reflected walk is Spitzer-exact") {
    Scenario sc = make_scenario("reflected-bm");
    sc.grid = TimeGrid(0.5, 50);
    MeasureFlow mu = MeasureFlow::constant(sc.grid, EmpiricalMeasure::point_mass(0.0, 1));
    RelaxedPolicy pi = RelaxedPolicy::uniform(sc.grid, sc.sgrid, sc.controls);
    PathBundle pb = simulate_reflected(sc.coefficients, mu, pi, 40000, 1);

    std::vector<double> xT(pb.npaths()), x2(pb.npaths()), kT(pb.npaths());
    for (std::size_t p = 0; p < pb.npaths(); ++p) {
        xT[p] = pb.X[p].back();
        x2[p] = xT[p] * xT[p];
        kT[p] = pb.K[p].back();
    }
    // 4-sigma Monte Carlo bands around the exact discrete values. The gap to
    // the continuum targets (E X = sqrt(2T/pi) = 0.5642, E X^2 = T = 0.5) is
    // several times wider than these bands, so the comparison genuinely pins
    // the discrete scheme and not just the limiting diffusion.
    CHECK(std::abs(mean_of(xT) - kSpitzerMean50) <= 4.0 * stderr_of(xT));
    CHECK(std::abs(mean_of(x2) - kSpitzerM2_50) <= 4.0 * stderr_of(x2));
    // With zero drift and x0 = 0, E K_n = E X_n exactly (increments are
    // centered), so K gets the same oracle.
    CHECK(std::abs(mean_of(kT) - kSpitzerMean50) <= 4.0 * stderr_of(kT));
}

TEST_CASE("simulated bundles satisfy the discrete reflection identities exactly") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        Scenario sc = make_scenario(name);
        sc.grid = TimeGrid(0.5, 40);
        MeasureFlow mu =
            MeasureFlow::constant(sc.grid, EmpiricalMeasure::point_mass(sc.coefficients.x0, 16));
        RelaxedPolicy pi = RelaxedPolicy::uniform(sc.grid, sc.sgrid, sc.controls);
        PathBundle pb = simulate_reflected(sc.coefficients, mu, pi, 500, 7);
        for (std::size_t p = 0; p < pb.npaths(); ++p) {
            CHECK(pb.X[p][0] == sc.coefficients.x0);
            CHECK(pb.K[p][0] == 0.0);
            for (std::size_t k = 1; k < pb.grid.nodes(); ++k) {
                CHECK(pb.X[p][k] >= 0.0);
                double dk = pb.K[p][k] - pb.K[p][k - 1];
                CHECK(dk >= 0.0);
                CHECK(pb.X[p][k] * dk == 0.0);  // exact complementarity, no tolerance
            }
        }
    }
}

TEST_CASE("simulator rejects inconsistent inputs") {
    Scenario sc = make_scenario("reflected-bm");
    sc.grid = TimeGrid(0.5, 10);
    MeasureFlow mu = MeasureFlow::constant(sc.grid, EmpiricalMeasure::point_mass(0.0, 1));
    RelaxedPolicy pi = RelaxedPolicy::uniform(sc.grid, sc.sgrid, sc.controls);
    CHECK_THROWS_AS(simulate_reflected(sc.coefficients, mu, pi, 0, 1), std::invalid_argument);

    MeasureFlow other =
        MeasureFlow::constant(TimeGrid(0.5, 20), EmpiricalMeasure::point_mass(0.0, 1));
    CHECK_THROWS_AS(simulate_reflected(sc.coefficients, other, pi, 4, 1),
                    std::invalid_argument);

    CoefficientSet bad = sc.coefficients;
    bad.x0 = -1.0;
    CHECK_THROWS_AS(simulate_reflected(bad, mu, pi, 4, 1), std::invalid_argument);
}

TEST_CASE("effective coefficients mix drift, variance and cost per the weights") {
    CoefficientSet c;
    c.b = [](double, double, const EmpiricalMeasure&, const Control& u) { return u[0]; };
    c.sigma = [](double, double, const EmpiricalMeasure&, const Control& u) {
        return 1.0 + u[0];
    };
    c.f = [](double, double, const EmpiricalMeasure&, const Control& u) {
        return 2.0 * u[0];
    };
    c.g = [](double, const EmpiricalMeasure&) { return 0.0; };
    c.h = [](double) { return 0.0; };
    ControlGrid cg = ControlGrid::scalar({0.0, 1.0});
    EmpiricalMeasure mu = EmpiricalMeasure::point_mass(0.0, 1);

    double q[2] = {0.25, 0.75};
    auto eff = effective_coefficients(c, 0.0, 0.0, mu, cg, q);
    CHECK(eff.drift == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(eff.variance == doctest::Approx(0.25 * 1.0 + 0.75 * 4.0).epsilon(1e-15));
    CHECK(eff.runcost == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("zero-weight controls are never evaluated; used NaN controls throw") {
    CoefficientSet c;
    c.b = [](double, double, const EmpiricalMeasure&, const Control& u) {
        return u[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
    };
    c.sigma = [](double, double, const EmpiricalMeasure&, const Control&) { return 1.0; };
    c.f = [](double, double, const EmpiricalMeasure&, const Control&) { return 0.0; };
    ControlGrid cg = ControlGrid::scalar({0.0, 1.0});
    EmpiricalMeasure mu = EmpiricalMeasure::point_mass(0.0, 1);

    double masked[2] = {1.0, 0.0};
    CHECK_NOTHROW(effective_coefficients(c, 0.0, 0.0, mu, cg, masked));
    double mixed[2] = {0.5, 0.5};
    CHECK_THROWS_AS(effective_coefficients(c, 0.0, 0.0, mu, cg, mixed), NumericError);
}

TEST_CASE("truncation clips drift and volatility only") {
    Scenario sc = make_scenario("unbounded-drift");
    CoefficientSet cut = truncate_coefficients(sc.coefficients, 0.3);
    EmpiricalMeasure mu = EmpiricalMeasure::point_mass(0.0, 1);
    Control u{0.0};
    // b = -x = -2 clips to -0.3; sigma = 0.5 clips to 0.3; f untouched.
    CHECK(cut.b(0.0, 2.0, mu, u) == -0.3);
    CHECK(cut.sigma(0.0, 2.0, mu, u) == 0.3);
    CHECK(cut.f(0.0, 2.0, mu, u) == sc.coefficients.f(0.0, 2.0, mu, u));
    CHECK(cut.g(2.0, mu) == sc.coefficients.g(2.0, mu));
    // Inside the band nothing changes.
    CHECK(cut.b(0.0, 0.1, mu, u) == sc.coefficients.b(0.0, 0.1, mu, u));
    CHECK_THROWS_AS(truncate_coefficients(sc.coefficients, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(truncate_coefficients(sc.coefficients, -1.0), std::invalid_argument);
}

TEST_CASE("growth spot check passes honest constants and flags understated ones") {
    for (const auto& name : scenario_names()) {
        CAPTURE(name);
        Scenario sc = make_scenario(name);
        GrowthCheck gc = spot_check_growth(sc.coefficients, sc.controls,
                                           sc.grid.horizon(), sc.sgrid.xmax(), 5, 512);
        CHECK(gc.pass());
    }
    Scenario sc = make_scenario("toy-coupled");
    CoefficientSet lying = sc.coefficients;
    lying.growth_c2 = 0.01;  // claims |b|, |sigma| <= 0.01 (1 + x + sqrt(m2))
    GrowthCheck gc = spot_check_growth(lying, sc.controls, sc.grid.horizon(),
                                       sc.sgrid.xmax(), 5, 512);
    CHECK_FALSE(gc.pass());
    CHECK(gc.worst_b_sigma > 1.0);
}

TEST_CASE("control grids and policies validate their shape") {
    CHECK_THROWS_AS(ControlGrid(std::vector<Control>{}), std::invalid_argument);
    CHECK_THROWS_AS(ControlGrid({{1.0}, {1.0}}), std::invalid_argument);
    CHECK_THROWS_AS(ControlGrid({{1.0}, {1.0, 2.0}}), std::invalid_argument);
    CHECK_THROWS_AS(ControlGrid({Control{}}), std::invalid_argument);

    TimeGrid grid(1.0, 2);
    StateGrid sgrid(1.0, 3);
    ControlGrid cg = ControlGrid::scalar({0.0, 1.0});
    CHECK_THROWS_AS(RelaxedPolicy(grid, sgrid, cg, std::vector<double>(5, 0.2)),
                    std::invalid_argument);
    std::vector<double> negw(2 * 3 * 2, 0.5);
    negw[0] = -0.1;
    negw[1] = 1.1;
    CHECK_THROWS_AS(RelaxedPolicy(grid, sgrid, cg, negw), std::invalid_argument);
    std::vector<double> badsum(2 * 3 * 2, 0.4);
    CHECK_THROWS_AS(RelaxedPolicy(grid, sgrid, cg, badsum), std::invalid_argument);
    CHECK_THROWS_AS(RelaxedPolicy::constant_control(grid, sgrid, cg, 2),
                    std::invalid_argument);

    RelaxedPolicy pi = RelaxedPolicy::constant_control(grid, sgrid, cg, 1);
    const double* q = pi.lookup(0, 0.9);
    CHECK(q[0] == 0.0);
    CHECK(q[1] == 1.0);
}
