#include "rmfg/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <utility>

#include "rmfg/agent.hpp"
#include "rmfg/csv.hpp"
#include "rmfg/mfg.hpp"
#include "rmfg/nplayer.hpp"
#include "rmfg/scenarios.hpp"
#include "rmfg/verify.hpp"

namespace rmfg {

namespace {

struct SummaryRow {
    std::string check;
    double value;
    double threshold;
    std::string relation;  // how value compares to threshold when passing
    bool pass;
};

struct RunContext {
    Scenario scenario;
    MFGConfig mfg;
    std::string pipeline = "solve";
    std::size_t flow_max_particles = 512;
    std::size_t bundle_paths = 0;
    std::vector<double> truncation_levels;
    double final_gap_threshold = 0.02;
    std::vector<double> boundary_levels;
    std::vector<double> continuity_shifts;
    double martingale_min_fraction = 0.9;
    std::size_t moment_q = 1;
    std::vector<double> nplayer_ns;
    std::size_t nplayer_reps = 200;
    std::map<std::string, std::string> manifest;

    explicit RunContext(Scenario sc) : scenario(std::move(sc)) {}
};

const std::map<std::string, std::vector<std::string>> kSchema{
    {"run", {"scenario", "pipeline", "seed", "npaths"}},
    {"grid", {"horizon", "steps", "xmax", "state-nodes", "quadrature"}},
    {"scenario", {}},  // free-form, validated by the scenario itself
    {"fixed-point",
     {"damping", "tolerance", "max-iterations", "truncation-levels", "final-gap-threshold"}},
    {"verify", {"boundary-levels", "shifts", "martingale-min-fraction", "moment-q"}},
    {"nplayer", {"n-list", "replications"}},
    {"output", {"flow-max-particles", "bundle-paths"}},
};

std::size_t checked_size(std::int64_t v, const std::string& what) {
    if (v <= 0) throw ConfigError(what + " must be positive");
    return static_cast<std::size_t>(v);
}

RunContext build_context(const Config& cfg, const RunOverrides& ov) {
    cfg.enforce_schema(kSchema, {"scenario"});

    std::string scen_name =
        ov.scenario ? *ov.scenario : cfg.get_string("run", "scenario", "");
    if (scen_name.empty()) throw ConfigError("[run] scenario is required");

    std::map<std::string, double> params;
    for (const auto& kv : cfg.section("scenario"))
        params[kv.first] = cfg.get_double("scenario", kv.first, 0.0);

    RunContext ctx(make_scenario(scen_name, params));

    ctx.pipeline = cfg.get_string("run", "pipeline", "solve");
    if (ctx.pipeline != "solve" && ctx.pipeline != "verify" && ctx.pipeline != "nplayer" &&
        ctx.pipeline != "all")
        throw ConfigError("[run] pipeline must be solve, verify, nplayer or all");

    double horizon = cfg.get_double("grid", "horizon", ctx.scenario.grid.horizon());
    auto steps = checked_size(
        cfg.get_int("grid", "steps", static_cast<std::int64_t>(ctx.scenario.grid.steps())),
        "[grid] steps");
    double xmax = cfg.get_double("grid", "xmax", ctx.scenario.sgrid.xmax());
    auto snodes = checked_size(
        cfg.get_int("grid", "state-nodes",
                    static_cast<std::int64_t>(ctx.scenario.sgrid.count())),
        "[grid] state-nodes");
    if (snodes < 2) throw ConfigError("[grid] state-nodes must be at least 2");
    ctx.scenario.grid = TimeGrid(horizon, steps);
    ctx.scenario.sgrid = StateGrid(xmax, snodes);

    ctx.mfg.grid = ctx.scenario.grid;
    ctx.mfg.sgrid = ctx.scenario.sgrid;
    ctx.mfg.quad_order = checked_size(cfg.get_int("grid", "quadrature", 7), "[grid] quadrature");
    ctx.mfg.seed =
        ov.seed ? *ov.seed : static_cast<std::uint64_t>(cfg.get_int("run", "seed", 1));
    ctx.mfg.npaths = ov.npaths ? *ov.npaths
                               : checked_size(cfg.get_int("run", "npaths", 20000),
                                              "[run] npaths");
    ctx.mfg.damping = cfg.get_double("fixed-point", "damping", 0.5);
    if (!(ctx.mfg.damping > 0.0) || ctx.mfg.damping > 1.0)
        throw ConfigError("[fixed-point] damping must be in (0, 1]");
    ctx.mfg.tolerance = cfg.get_double("fixed-point", "tolerance", 0.05);
    std::int64_t maxit = cfg.get_int("fixed-point", "max-iterations", 30);
    if (maxit < 0) throw ConfigError("[fixed-point] max-iterations must be >= 0");
    ctx.mfg.max_iterations = static_cast<std::size_t>(maxit);

    ctx.truncation_levels = cfg.get_list("fixed-point", "truncation-levels");
    ctx.final_gap_threshold = cfg.get_double("fixed-point", "final-gap-threshold", 0.02);

    ctx.boundary_levels = cfg.get_list("verify", "boundary-levels");
    if (ctx.boundary_levels.empty()) {
        double dt = ctx.scenario.grid.dt();
        ctx.boundary_levels = {dt, dt / 2.0, dt / 4.0};
    }
    ctx.continuity_shifts = cfg.get_list("verify", "shifts");
    if (ctx.continuity_shifts.empty()) ctx.continuity_shifts = {0.05, 0.1, 0.2, 0.4};
    ctx.martingale_min_fraction = cfg.get_double("verify", "martingale-min-fraction", 0.9);
    ctx.moment_q = checked_size(cfg.get_int("verify", "moment-q", 1), "[verify] moment-q");

    ctx.nplayer_ns = cfg.get_list("nplayer", "n-list");
    if (ctx.nplayer_ns.empty()) ctx.nplayer_ns = {8, 32, 128};
    for (double nd : ctx.nplayer_ns)
        if (!(nd >= 1.0) || nd != std::floor(nd))
            throw ConfigError("[nplayer] n-list entries must be positive integers");
    ctx.nplayer_reps =
        checked_size(cfg.get_int("nplayer", "replications", 200), "[nplayer] replications");

    std::int64_t fmp = cfg.get_int("output", "flow-max-particles", 512);
    if (fmp < 0) throw ConfigError("[output] flow-max-particles must be >= 0");
    ctx.flow_max_particles = static_cast<std::size_t>(fmp);
    std::int64_t bp = cfg.get_int("output", "bundle-paths", 0);
    if (bp < 0) throw ConfigError("[output] bundle-paths must be >= 0");
    ctx.bundle_paths = static_cast<std::size_t>(bp);

    auto& man = ctx.manifest;
    man["scenario"] = ctx.scenario.name;
    man["pipeline"] = ctx.pipeline;
    man["seed"] = std::to_string(ctx.mfg.seed);
    man["npaths"] = std::to_string(ctx.mfg.npaths);
    man["horizon"] = fmt_double(horizon);
    man["steps"] = std::to_string(steps);
    man["xmax"] = fmt_double(xmax);
    man["state-nodes"] = std::to_string(snodes);
    man["quadrature"] = std::to_string(ctx.mfg.quad_order);
    man["damping"] = fmt_double(ctx.mfg.damping);
    man["tolerance"] = fmt_double(ctx.mfg.tolerance);
    man["max-iterations"] = std::to_string(ctx.mfg.max_iterations);
    man["flow-max-particles"] = std::to_string(ctx.flow_max_particles);
    man["x0"] = fmt_double(ctx.scenario.coefficients.x0);
    man["const-c1"] = fmt_double(ctx.scenario.coefficients.lipschitz_c1);
    man["const-c2"] = fmt_double(ctx.scenario.coefficients.growth_c2);
    man["const-c3"] = fmt_double(ctx.scenario.coefficients.lower_c3);
    man["const-c4"] = fmt_double(ctx.scenario.coefficients.upper_c4);
    for (const auto& kv : ctx.scenario.params)
        man["scenario-" + kv.first] = fmt_double(kv.second);
    return ctx;
}

void write_manifest(const std::string& path, const std::map<std::string, std::string>& man) {
    std::ofstream out(path, std::ios::binary);
    for (const auto& [key, value] : man) out << key << " = " << value << '\n';
}

void write_summary(const std::string& path, const std::vector<SummaryRow>& rows) {
    CsvWriter w(path);
    w.row({"check", "value", "threshold", "relation", "pass"});
    for (const auto& r : rows)
        w.row({r.check, fmt_double(r.value), fmt_double(r.threshold), r.relation,
               r.pass ? "1" : "0"});
}

void write_residuals(const std::string& path, const std::vector<double>& residuals) {
    CsvWriter w(path);
    w.row({"iteration", "residual"});
    for (std::size_t i = 0; i < residuals.size(); ++i)
        w.row({std::to_string(i), fmt_double(residuals[i])});
}

// Uncontrolled environment for verification runs: simulate the uniform
// mixture against a point-mass bootstrap, freeze the resulting flow, then
// re-simulate the same mixture against that frozen flow.
std::pair<MeasureFlow, PathBundle> verification_environment(const Scenario& sc,
                                                            std::size_t npaths,
                                                            std::uint64_t seed) {
    std::vector<std::vector<double>> boot(
        npaths, std::vector<double>(sc.grid.nodes(), sc.coefficients.x0));
    MeasureFlow boot_flow = MeasureFlow::from_paths(sc.grid, boot);
    RelaxedPolicy uniform = RelaxedPolicy::uniform(sc.grid, sc.sgrid, sc.controls);
    PathBundle warm = simulate_reflected(sc.coefficients, boot_flow, uniform, npaths,
                                         derive_seed(seed, stream::kPhi));
    MeasureFlow mu = MeasureFlow::from_paths(sc.grid, warm.X);
    PathBundle pb = simulate_reflected(sc.coefficients, mu, uniform, npaths,
                                       derive_seed(seed, stream::kPaths, 1));
    return {std::move(mu), std::move(pb)};
}

std::vector<std::pair<std::size_t, std::size_t>> default_pairs(std::size_t steps) {
    std::size_t q = std::max<std::size_t>(1, steps / 4);
    std::vector<std::pair<std::size_t, std::size_t>> pairs{
        {0, std::min(steps, 2 * q)},
        {std::min(steps - 1, q), std::min(steps, 3 * q)},
        {std::min(steps - 1, 2 * q), steps},
        {0, steps}};
    for (auto& [s, t] : pairs)
        if (!(s < t)) s = t - 1;
    return pairs;
}

void run_solve(const RunContext& ctx, const std::string& out,
               std::vector<SummaryRow>& rows, std::map<std::string, std::string>& man) {
    const auto& sc = ctx.scenario;

    if (!ctx.truncation_levels.empty()) {
        TruncationResult tr =
            solve_with_truncation(sc.coefficients, sc.controls, ctx.mfg, ctx.truncation_levels);
        {
            CsvWriter w(out + "/truncation.csv");
            w.row({"level", "converged", "iterations", "residual", "gap_from_previous"});
            for (std::size_t i = 0; i < tr.levels.size(); ++i) {
                const auto& sol = tr.solutions[i];
                w.row({fmt_double(tr.levels[i]), sol.converged ? "1" : "0",
                       std::to_string(sol.residuals.size()),
                       sol.residuals.empty() ? "nan" : fmt_double(sol.residuals.back()),
                       i == 0 ? "nan" : fmt_double(tr.gaps[i - 1])});
            }
        }
        double worst_increase = 0.0;
        for (std::size_t i = 1; i < tr.gaps.size(); ++i)
            worst_increase = std::max(worst_increase, tr.gaps[i] - tr.gaps[i - 1]);
        rows.push_back({"truncation-gaps-monotone", worst_increase, 0.0, "<=",
                        worst_increase <= 0.0});
        double final_gap = tr.gaps.empty() ? 0.0 : tr.gaps.back();
        rows.push_back({"truncation-final-gap", final_gap, ctx.final_gap_threshold, "<",
                        final_gap < ctx.final_gap_threshold});
        const MFGSolution& last = tr.solutions.back();
        write_flow_csv(out + "/flow.csv", last.flow, ctx.flow_max_particles);
        write_policy_csv(out + "/policy.csv", last.policy);
        write_residuals(out + "/residuals.csv", last.residuals);
        man["truncation-levels"] = std::to_string(tr.levels.size());
        man["converged"] = last.converged ? "1" : "0";
        return;
    }

    MFGSolution sol = solve_fixed_point(sc.coefficients, sc.controls, ctx.mfg);
    write_residuals(out + "/residuals.csv", sol.residuals);
    write_flow_csv(out + "/flow.csv", sol.flow, ctx.flow_max_particles);
    write_policy_csv(out + "/policy.csv", sol.policy);
    {
        // The value table of the best response to the reported flow.
        GaussHermite quad(ctx.mfg.quad_order);
        DPSolution dp = solve_dp(sc.coefficients, sol.flow, sc.sgrid, sc.controls, quad);
        write_value_csv(out + "/value.csv", dp);
    }

    double final_residual = sol.residuals.empty() ? 0.0 : sol.residuals.back();
    rows.push_back({"fixed-point-converged", final_residual, ctx.mfg.tolerance, "<=",
                    sol.converged});

    // Self-consistency: push the reported policy through fresh noise twice.
    // The reported flow must match a re-simulation up to the fixed-point
    // tolerance plus three noise widths (noise measured between the two
    // fresh re-simulations).
    PathBundle re1 = simulate_reflected(sc.coefficients, sol.flow, sol.policy, ctx.mfg.npaths,
                                        derive_seed(ctx.mfg.seed, stream::kSelfTest, 1));
    PathBundle re2 = simulate_reflected(sc.coefficients, sol.flow, sol.policy, ctx.mfg.npaths,
                                        derive_seed(ctx.mfg.seed, stream::kSelfTest, 2));
    MeasureFlow f1 = MeasureFlow::from_paths(sc.grid, re1.X);
    MeasureFlow f2 = MeasureFlow::from_paths(sc.grid, re2.X);
    double noise = flow_distance(f1, f2, FlowDistanceMode::Sup);
    double drift = flow_distance(sol.flow, f1, FlowDistanceMode::Sup);
    double allowed = ctx.mfg.tolerance + 3.0 * noise;
    rows.push_back({"self-consistency", drift, allowed, "<=", drift <= allowed});

    man["converged"] = sol.converged ? "1" : "0";
    man["iterations"] = std::to_string(sol.residuals.size());
    man["value-at-x0"] = sol.value ? fmt_double(*sol.value) : "nan";
    man["dp-clamp-fraction"] = fmt_double(
        sol.dp_total == 0
            ? 0.0
            : static_cast<double>(sol.dp_clamped) / static_cast<double>(sol.dp_total));
    man["max-state"] = fmt_double(sol.max_state);
}

void run_verify(const RunContext& ctx, const std::string& out,
                std::vector<SummaryRow>& rows, std::map<std::string, std::string>& man) {
    const auto& sc = ctx.scenario;
    auto [mu, pb] = verification_environment(sc, ctx.mfg.npaths, ctx.mfg.seed);

    SkorokhodReport sk = check_skorokhod(pb, 1e-12);
    rows.push_back(
        {"skorokhod-complementarity", sk.worst_complementarity, 1e-12, "<=", sk.pass});

    TestFunctionBasis basis = TestFunctionBasis::default_basis(sc.sgrid.xmax());
    auto pairs = default_pairs(sc.grid.steps());

    // A half-step control run calibrates the discretization allowance in the
    // martingale cells; its own cells are judged on 3 se alone.
    Scenario half = sc;
    half.grid = TimeGrid(sc.grid.horizon(), sc.grid.steps() * 2);
    auto [mu_h, pb_h] = verification_environment(half, ctx.mfg.npaths, ctx.mfg.seed + 1);
    std::vector<std::pair<std::size_t, std::size_t>> half_pairs;
    for (auto [s, t] : pairs) half_pairs.emplace_back(2 * s, 2 * t);
    MartingaleReport half_rep =
        check_martingale(pb_h, sc.coefficients, mu_h, basis, half_pairs, 0.0);
    double allowance_c = calibrate_martingale_allowance(half_rep, half.grid.dt());
    MartingaleReport mrep = check_martingale(pb, sc.coefficients, mu, basis, pairs, allowance_c);
    write_martingale_csv(out + "/martingale.csv", mrep);
    rows.push_back({"martingale-pass-fraction", mrep.pass_fraction,
                    ctx.martingale_min_fraction, ">=",
                    mrep.pass(ctx.martingale_min_fraction)});
    man["martingale-allowance-c"] = fmt_double(allowance_c);

    MomentBoundReport mb = check_moment_bounds(pb, sc.coefficients, mu, ctx.moment_q);
    rows.push_back({"moment-bound-log10-margin", mb.log10_lhs - mb.log10_bound, 0.0, "<=",
                    mb.pass});

    RelaxedPolicy uniform = RelaxedPolicy::uniform(sc.grid, sc.sgrid, sc.controls);
    BoundaryReport br = check_boundary_integral_convergence(
        sc.coefficients, mu, uniform, ctx.boundary_levels,
        std::min<std::size_t>(ctx.mfg.npaths, 20000), ctx.mfg.seed + 2);
    {
        CsvWriter w(out + "/boundary.csv");
        w.row({"dt", "integral", "se"});
        for (const auto& lvl : br.levels)
            w.row({fmt_double(lvl.dt), fmt_double(lvl.integral), fmt_double(lvl.se)});
    }
    double last_diff = br.diffs.empty() ? 0.0 : br.diffs.back();
    double first_diff = br.diffs.empty() ? 0.0 : br.diffs.front();
    rows.push_back({"boundary-diffs-shrink", last_diff, first_diff, "<=", br.pass});

    ContinuityReport cr = probe_continuity(sc.coefficients, mu, uniform, ctx.continuity_shifts,
                                           std::min<std::size_t>(ctx.mfg.npaths, 10000),
                                           ctx.mfg.seed + 3);
    {
        CsvWriter w(out + "/continuity.csv");
        w.row({"shift", "delta_cost", "se", "ratio"});
        for (const auto& probe : cr.probes)
            w.row({fmt_double(probe.shift), fmt_double(probe.delta_cost),
                   fmt_double(probe.se), fmt_double(probe.ratio)});
    }
    double worst_ratio = 0.0;
    for (const auto& probe : cr.probes) worst_ratio = std::max(worst_ratio, probe.ratio);
    rows.push_back(
        {"continuity-envelope", worst_ratio, 2.0 * cr.envelope_slope, "<=", cr.pass});

    GrowthCheck gc = spot_check_growth(sc.coefficients, sc.controls, sc.grid.horizon(),
                                       sc.sgrid.xmax(), ctx.mfg.seed, 256);
    double worst_growth = std::max({gc.worst_b_sigma, gc.worst_f, gc.worst_g});
    rows.push_back({"growth-spot-check", worst_growth, 1.0, "<=", gc.pass()});

    ConvexityReport cx = check_convexity_S(sc.coefficients, sc.controls, 0.0,
                                           sc.coefficients.x0, mu.at(0));
    rows.push_back({"mixture-geometry", cx.worst_deficiency, 10.0 * cx.tolerance, "<=",
                    cx.verdict != ConvexityVerdict::NotConvex});
    man["mixture-geometry-verdict"] =
        cx.verdict == ConvexityVerdict::Convex
            ? "convex"
            : (cx.verdict == ConvexityVerdict::NotConvex ? "not-convex" : "inconclusive");

    if (ctx.bundle_paths > 0) write_bundle_csv(out + "/bundle.csv", pb, ctx.bundle_paths);
    write_flow_csv(out + "/env_flow.csv", mu, ctx.flow_max_particles);
}

void run_nplayer(const RunContext& ctx, const std::string& out,
                 std::vector<SummaryRow>& rows, std::map<std::string, std::string>& man) {
    const auto& sc = ctx.scenario;
    MFGSolution sol = solve_fixed_point(sc.coefficients, sc.controls, ctx.mfg);
    man["nplayer-policy-converged"] = sol.converged ? "1" : "0";

    CsvWriter dev(out + "/deviation.csv");
    dev.row({"nplayers", "candidate", "baseline", "cost", "gap", "gap_se"});
    std::vector<double> gaps, gap_ses;
    for (double nd : ctx.nplayer_ns) {
        auto n = static_cast<std::size_t>(nd);
        GameConfig gc;
        gc.nplayers = n;
        gc.replications = ctx.nplayer_reps;
        gc.seed = ctx.mfg.seed;
        gc.sgrid = sc.sgrid;
        gc.quad_order = ctx.mfg.quad_order;
        DeviationReport rep = estimate_deviation_gain(sc.coefficients, sol.policy, gc);
        for (const auto& row : rep.rows)
            dev.row({std::to_string(n), row.id, fmt_double(rep.baseline),
                     fmt_double(row.cost), fmt_double(row.gap), fmt_double(row.gap_se)});
        gaps.push_back(rep.best_gap);
        gap_ses.push_back(rep.best_gap_se);
        man["nash-gap-n" + std::to_string(n)] = fmt_double(rep.best_gap);
    }
    double worst_jump = 0.0;
    bool monotone = true;
    for (std::size_t i = 1; i < gaps.size(); ++i) {
        double slack = 3.0 * std::hypot(gap_ses[i], gap_ses[i - 1]);
        worst_jump = std::max(worst_jump, gaps[i] - gaps[i - 1] - slack);
        if (gaps[i] > gaps[i - 1] + slack) monotone = false;
    }
    rows.push_back({"nash-gap-monotone", worst_jump, 0.0, "<=", monotone});
    if (gaps.size() > 1)
        rows.push_back({"nash-gap-shrinks", gaps.back(), gaps.front(), "<",
                        gaps.back() < gaps.front()});
}

}  // namespace

int run_pipeline(const Config& cfg, const std::string& out_dir, const RunOverrides& ov) {
    RunContext ctx = build_context(cfg, ov);
    std::filesystem::create_directories(out_dir);

    std::vector<SummaryRow> rows;
    if (ctx.pipeline == "solve" || ctx.pipeline == "all")
        run_solve(ctx, out_dir, rows, ctx.manifest);
    if (ctx.pipeline == "verify" || ctx.pipeline == "all")
        run_verify(ctx, out_dir, rows, ctx.manifest);
    if (ctx.pipeline == "nplayer" || ctx.pipeline == "all")
        run_nplayer(ctx, out_dir, rows, ctx.manifest);

    bool all_pass = true;
    for (const auto& r : rows) all_pass = all_pass && r.pass;
    ctx.manifest["checks-passed"] = all_pass ? "1" : "0";
    ctx.manifest["checks-total"] = std::to_string(rows.size());
    write_manifest(out_dir + "/manifest.txt", ctx.manifest);
    write_summary(out_dir + "/summary.csv", rows);
    return all_pass ? 0 : 1;
}

int run_config_file(const std::string& config_path, const std::string& out_dir,
                    const RunOverrides& ov) {
    try {
        Config cfg = Config::parse_file(config_path);
        return run_pipeline(cfg, out_dir, ov);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "run failed: " << e.what() << '\n';
        return 1;
    }
}

std::string list_scenarios_text() {
    // Short %g here: this is display text, not a round-tripping artifact.
    auto short_fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%g", v);
        return std::string(buf);
    };
    std::ostringstream out;
    for (const auto& name : scenario_names()) {
        Scenario sc = make_scenario(name);
        out << name << "\n    " << sc.blurb << "\n    defaults: horizon="
            << short_fmt(sc.grid.horizon()) << " steps=" << sc.grid.steps()
            << " xmax=" << short_fmt(sc.sgrid.xmax()) << " state-nodes=" << sc.sgrid.count()
            << " x0=" << short_fmt(sc.coefficients.x0);
        if (!sc.params.empty()) {
            out << " params:";
            for (const auto& kv : sc.params)
                out << ' ' << kv.first << '=' << short_fmt(kv.second);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace rmfg
