#include "rmfg/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rmfg/agent.hpp"
#include "rmfg/csv.hpp"

namespace rmfg {

namespace {

// Quintic smoothstep and derivatives; C^2 with flat ends.
inline double smoothstep(double y) { return y * y * y * (10.0 + y * (-15.0 + 6.0 * y)); }
inline double smoothstep_d(double y) { return 30.0 * y * y * (1.0 - y) * (1.0 - y); }
inline double smoothstep_d2(double y) { return 60.0 * y * (1.0 - y) * (1.0 - 2.0 * y); }

}  // namespace

double TestFunction::phi(double x) const {
    switch (kind) {
        case Kind::One:
            return 1.0;
        case Kind::Rational:
            return x / (1.0 + x);
        case Kind::Ramp: {
            double y = (x - a) / (b - a);
            if (y <= 0.0) return 0.0;
            if (y >= 1.0) return 1.0;
            return smoothstep(y);
        }
        case Kind::Bump:
            return std::exp(-(x - a) * (x - a) / b);
        case Kind::Sigmoid:
            return 1.0 / (1.0 + std::exp(-(x - a) / b));
    }
    return 0.0;
}

double TestFunction::dphi(double x) const {
    switch (kind) {
        case Kind::One:
            return 0.0;
        case Kind::Rational:
            return 1.0 / ((1.0 + x) * (1.0 + x));
        case Kind::Ramp: {
            double y = (x - a) / (b - a);
            if (y <= 0.0 || y >= 1.0) return 0.0;
            return smoothstep_d(y) / (b - a);
        }
        case Kind::Bump:
            return -2.0 * (x - a) / b * phi(x);
        case Kind::Sigmoid: {
            double s = phi(x);
            return s * (1.0 - s) / b;
        }
    }
    return 0.0;
}

double TestFunction::d2phi(double x) const {
    switch (kind) {
        case Kind::One:
            return 0.0;
        case Kind::Rational:
            return -2.0 / ((1.0 + x) * (1.0 + x) * (1.0 + x));
        case Kind::Ramp: {
            double y = (x - a) / (b - a);
            if (y <= 0.0 || y >= 1.0) return 0.0;
            return smoothstep_d2(y) / ((b - a) * (b - a));
        }
        case Kind::Bump: {
            double d = (x - a);
            return (4.0 * d * d / (b * b) - 2.0 / b) * phi(x);
        }
        case Kind::Sigmoid: {
            double s = phi(x);
            return s * (1.0 - s) * (1.0 - 2.0 * s) / (b * b);
        }
    }
    return 0.0;
}

bool TestFunction::boundary_sensitive() const { return std::abs(dphi(0.0)) > 0.1; }

TestFunctionBasis::TestFunctionBasis(std::vector<TestFunction> fns) : fns_(std::move(fns)) {
    if (fns_.empty()) throw std::invalid_argument("TestFunctionBasis: empty");
}

TestFunctionBasis TestFunctionBasis::default_basis(double xmax) {
    if (!(xmax > 0.0)) throw std::invalid_argument("default_basis: xmax must be positive");
    double s = xmax / 4.0;  // designed at xmax = 4, scaled affinely
    std::vector<TestFunction> fns;
    fns.push_back({"one", TestFunction::Kind::One, 0.0, 1.0});
    fns.push_back({"rational", TestFunction::Kind::Rational, 0.0, 1.0});
    fns.push_back({"ramp-low", TestFunction::Kind::Ramp, 0.0, 2.0 * s});
    fns.push_back({"ramp-mid", TestFunction::Kind::Ramp, 1.0 * s, 3.0 * s});
    fns.push_back({"bump-0.2", TestFunction::Kind::Bump, 0.2 * s, 0.05 * s * s});
    fns.push_back({"bump-0.5", TestFunction::Kind::Bump, 0.5 * s, 0.2 * s * s});
    fns.push_back({"bump-1.0", TestFunction::Kind::Bump, 1.0 * s, 0.5 * s * s});
    fns.push_back({"bump-2.0", TestFunction::Kind::Bump, 2.0 * s, 1.25 * s * s});
    fns.push_back({"sigmoid-0.75", TestFunction::Kind::Sigmoid, 0.75 * s, 0.2 * s});
    fns.push_back({"sigmoid-1.5", TestFunction::Kind::Sigmoid, 1.5 * s, 0.3 * s});
    return TestFunctionBasis(std::move(fns));
}

SkorokhodReport check_skorokhod(const PathBundle& pb, double tol) {
    SkorokhodReport rep;
    for (std::size_t p = 0; p < pb.npaths(); ++p) {
        const auto& x = pb.X[p];
        const auto& k = pb.K[p];
        rep.worst_k0 = std::max(rep.worst_k0, std::abs(k[0]));
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (x[j] < 0.0) rep.worst_negative_x = std::min(rep.worst_negative_x, x[j]);
            if (j > 0) {
                double dk = k[j] - k[j - 1];
                if (dk < 0.0) rep.worst_k_decrease = std::min(rep.worst_k_decrease, dk);
                rep.worst_complementarity =
                    std::max(rep.worst_complementarity, std::abs(x[j] * dk));
            }
        }
    }
    rep.pass = rep.worst_negative_x == 0.0 && rep.worst_k_decrease == 0.0 &&
               rep.worst_k0 == 0.0 && rep.worst_complementarity <= tol;
    return rep;
}

MartingaleReport check_martingale(const PathBundle& pb, const CoefficientSet& c,
                                  const MeasureFlow& mu, const TestFunctionBasis& basis,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& pairs,
                                  double allowance_c) {
    if (pb.grid != mu.grid())
        throw std::invalid_argument("check_martingale: bundle and flow grids differ");
    if (pairs.empty()) throw std::invalid_argument("check_martingale: no (s,t) pairs");
    const std::size_t steps = pb.grid.steps();
    for (auto [s, t] : pairs)
        if (!(s < t) || t > steps)
            throw std::invalid_argument("check_martingale: bad (s,t) pair");

    const double dt = pb.grid.dt();
    const ControlGrid& cg = pb.policy->control_grid();
    const std::size_t nf = basis.functions().size();
    const std::size_t np = pairs.size();
    const std::size_t npaths = pb.npaths();

    // Two H weights per (phi, pair) cell: H = 1 and H = sigmoid(X_s).
    std::vector<double> sum(nf * np * 2, 0.0), sumsq(nf * np * 2, 0.0);

    std::vector<double> beff(steps), veff(steps);
    std::vector<double> compensator(steps + 1);
    for (std::size_t p = 0; p < npaths; ++p) {
        const auto& x = pb.X[p];
        const auto& kk = pb.K[p];
        for (std::size_t j = 0; j < steps; ++j) {
            auto eff = effective_coefficients(c, pb.grid.node(j), x[j], mu.at(j), cg,
                                              pb.applied_weights(p, j));
            beff[j] = eff.drift;
            veff[j] = eff.variance;
        }
        for (std::size_t fi = 0; fi < nf; ++fi) {
            const TestFunction& fn = basis.functions()[fi];
            compensator[0] = 0.0;
            for (std::size_t j = 0; j < steps; ++j) {
                double gen = 0.5 * veff[j] * fn.d2phi(x[j]) + beff[j] * fn.dphi(x[j]);
                double refl = fn.dphi(x[j + 1]) * (kk[j + 1] - kk[j]);
                compensator[j + 1] = compensator[j] + gen * dt + refl;
            }
            for (std::size_t pi = 0; pi < np; ++pi) {
                auto [s, t] = pairs[pi];
                double mdiff = (fn.phi(x[t]) - fn.phi(x[s])) -
                               (compensator[t] - compensator[s]);
                double hsig = 1.0 / (1.0 + std::exp(-4.0 * (x[s] - 0.5)));
                double v1 = mdiff;
                double v2 = mdiff * hsig;
                std::size_t base = (fi * np + pi) * 2;
                sum[base] += v1;
                sumsq[base] += v1 * v1;
                sum[base + 1] += v2;
                sumsq[base + 1] += v2 * v2;
            }
        }
    }

    MartingaleReport rep;
    rep.cells.reserve(nf * np * 2);
    std::size_t npass = 0;
    for (std::size_t fi = 0; fi < nf; ++fi)
        for (std::size_t pi = 0; pi < np; ++pi)
            for (std::size_t h = 0; h < 2; ++h) {
                std::size_t idx = (fi * np + pi) * 2 + h;
                double m = sum[idx] / static_cast<double>(npaths);
                double var = (sumsq[idx] - static_cast<double>(npaths) * m * m) /
                             (static_cast<double>(npaths) - 1.0);
                MartingaleCell cell;
                cell.phi = basis.functions()[fi].name;
                cell.s_node = pairs[pi].first;
                cell.t_node = pairs[pi].second;
                cell.weight = h == 0 ? MartingaleWeight::One : MartingaleWeight::SigmoidOfXs;
                cell.stat = m;
                cell.se = std::sqrt(std::max(0.0, var) / static_cast<double>(npaths));
                cell.allowance = allowance_c * dt;
                cell.boundary_sensitive = basis.functions()[fi].boundary_sensitive();
                cell.pass = std::abs(cell.stat) <= 3.0 * cell.se + cell.allowance;
                if (cell.pass) ++npass;
                rep.cells.push_back(cell);
            }
    rep.pass_fraction = static_cast<double>(npass) / static_cast<double>(rep.cells.size());
    return rep;
}

double calibrate_martingale_allowance(const MartingaleReport& half_step_report,
                                      double half_dt) {
    double c = 0.0;
    for (const auto& cell : half_step_report.cells)
        c = std::max(c, (std::abs(cell.stat) + cell.se) / half_dt);
    return c;
}

MomentBoundReport check_moment_bounds(const PathBundle& pb, const CoefficientSet& c,
                                      const MeasureFlow& mu, std::size_t q) {
    if (q < 1) throw std::invalid_argument("check_moment_bounds: q must be >= 1");
    const double p = 2.0 * static_cast<double>(q);
    const double T = pb.grid.horizon();
    const double C2 = c.growth_c2;

    MomentBoundReport rep;
    double acc = 0.0;
    for (std::size_t i = 0; i < pb.npaths(); ++i) {
        double supx = 0.0;
        for (double x : pb.X[i]) supx = std::max(supx, x);
        acc += std::pow(supx, p) + std::pow(pb.K[i].back(), p);
    }
    rep.lhs = acc / static_cast<double>(pb.npaths());
    rep.log10_lhs = std::log10(std::max(rep.lhs, 1e-300));

    // Explicit Gronwall constant. Ito on X^p kills the reflection term
    // (X^{p-1} dK = 0), weighted Young keeps every X^p coefficient
    // proportional to C2, Davis' inequality handles the martingale part, and
    // the K bound comes from reading K off the integrated equation in L^p.
    double m1 = std::pow(std::max(flow_sup_moment(mu, p, T), 0.0), 1.0 / p);
    double G = C2 * (1.0 + m1);
    double A = (9.0 * p * p + p * (p - 1.0)) / 2.0;
    double onem1p = p * std::log(1.0 + m1);
    // log BX = log(2 (x0^p + (p C2 + 2 A C2^2) (1+m1)^p T)) + 2 (2p C2 + 4 A C2^2) T
    double add1 = c.x0 > 0.0 ? p * std::log(c.x0) : -1e300;
    double add2 = std::log((p * C2 + 2.0 * A * C2 * C2) * T) + onem1p;
    double log_bx = std::log(2.0) + std::max(add1, add2) +
                    std::log1p(std::exp(std::min(add1, add2) - std::max(add1, add2))) +
                    2.0 * (2.0 * p * C2 + 4.0 * A * C2 * C2) * T;
    // E |int sigma dB|^p <= (p(p-1)/2)^{p/2} T^{(p-2)/2} * T * 2^{p-1} (G^p + C2^p BX)
    double lg1 = p * std::log(std::max(G, 1e-300));
    double lg2 = p * std::log(std::max(C2, 1e-300)) + log_bx;
    double log_gsum = std::max(lg1, lg2) + std::log1p(std::exp(std::min(lg1, lg2) - std::max(lg1, lg2)));
    double log_mao = 0.5 * p * std::log(p * (p - 1.0) / 2.0) +
                     0.5 * (p - 2.0) * std::log(T) + std::log(T) +
                     (p - 1.0) * std::log(2.0) + log_gsum;
    double log_doob = p * std::log(p / (p - 1.0)) + log_mao;
    double bx_root = std::exp(log_bx / p);
    double sk = bx_root * (1.0 + C2 * T) + c.x0 + T * G + std::exp(log_doob / p);
    double log_bk = p * std::log(sk);
    double log_bound = std::max(log_bx, log_bk) +
                       std::log1p(std::exp(std::min(log_bx, log_bk) - std::max(log_bx, log_bk)));
    rep.log10_bound = log_bound / std::log(10.0);
    rep.pass = rep.log10_lhs <= rep.log10_bound;
    return rep;
}

BoundaryReport check_boundary_integral_convergence(const CoefficientSet& c,
                                                   const MeasureFlow& mu,
                                                   const RelaxedPolicy& pi,
                                                   const std::vector<double>& dt_levels,
                                                   std::size_t npaths, std::uint64_t seed) {
    if (dt_levels.size() < 3)
        throw std::invalid_argument("boundary convergence: need at least 3 levels");
    if (mu.grid() != pi.grid())
        throw std::invalid_argument("boundary convergence: flow and policy grids differ");
    const double T = pi.grid().horizon();
    const std::size_t base_steps = pi.grid().steps();

    std::vector<std::size_t> steps_of(dt_levels.size());
    for (std::size_t l = 0; l < dt_levels.size(); ++l) {
        double raw = T / dt_levels[l];
        auto n = static_cast<std::size_t>(raw + 0.5);
        if (n == 0 || std::abs(raw - static_cast<double>(n)) > 1e-9)
            throw std::invalid_argument("boundary convergence: level does not divide horizon");
        if (l > 0 && (n <= steps_of[l - 1] || n % steps_of[l - 1] != 0))
            throw std::invalid_argument("boundary convergence: levels must refine each other");
        if (n % base_steps != 0 && base_steps % n != 0 && n != base_steps)
            throw std::invalid_argument("boundary convergence: level incompatible with policy grid");
        steps_of[l] = n;
    }
    const std::size_t nfine = steps_of.back();
    const ControlGrid& cg = pi.control_grid();

    std::vector<std::vector<double>> integrals(dt_levels.size(), std::vector<double>(npaths));
    std::vector<double> xi(nfine);
    for (std::size_t p = 0; p < npaths; ++p) {
        Xoshiro256pp rng(derive_seed(seed, stream::kPaths, p));
        for (auto& v : xi) v = rng.normal();
        for (std::size_t l = 0; l < dt_levels.size(); ++l) {
            std::size_t n = steps_of[l];
            std::size_t r = nfine / n;
            double dtl = T / static_cast<double>(n);
            double sqdt = std::sqrt(dtl);
            double x = c.x0, acc = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                // Coarse normal = renormalized sum of the fine increments, so
                // every level rides the same Brownian path.
                double z = 0.0;
                for (std::size_t j = 0; j < r; ++j) z += xi[k * r + j];
                z /= std::sqrt(static_cast<double>(r));
                double t = T * static_cast<double>(k) / static_cast<double>(n);
                // Policy/flow tabulated on the base grid; use the containing node.
                std::size_t kb = (k * base_steps) / n;
                auto eff = effective_coefficients(c, t, x, mu.at(kb), cg, pi.lookup(kb, x));
                double znext = x + eff.drift * dtl + std::sqrt(eff.variance) * sqdt * z;
                double xn = znext > 0.0 ? znext : 0.0;
                acc += c.h(t) * (xn - znext);
                x = xn;
            }
            integrals[l][p] = acc;
        }
    }

    BoundaryReport rep;
    for (std::size_t l = 0; l < dt_levels.size(); ++l) {
        BoundaryLevel lvl;
        lvl.dt = dt_levels[l];
        lvl.integral = mean_of(integrals[l]);
        lvl.se = stderr_of(integrals[l]);
        rep.levels.push_back(lvl);
    }
    std::vector<double> diff(npaths);
    for (std::size_t l = 0; l + 1 < dt_levels.size(); ++l) {
        for (std::size_t p = 0; p < npaths; ++p)
            diff[p] = integrals[l + 1][p] - integrals[l][p];
        rep.diffs.push_back(std::abs(mean_of(diff)));
        rep.diff_se.push_back(stderr_of(diff));
    }
    rep.pass = true;
    for (std::size_t i = 0; i + 1 < rep.diffs.size(); ++i)
        if (rep.diffs[i + 1] > rep.diffs[i] + 3.0 * (rep.diff_se[i] + rep.diff_se[i + 1]))
            rep.pass = false;
    return rep;
}

ContinuityReport probe_continuity(const CoefficientSet& c, const MeasureFlow& mu,
                                  const RelaxedPolicy& pi, const std::vector<double>& shifts,
                                  std::size_t npaths, std::uint64_t seed) {
    if (shifts.empty()) throw std::invalid_argument("probe_continuity: no shifts");
    for (std::size_t i = 0; i < shifts.size(); ++i) {
        if (!(shifts[i] > 0.0))
            throw std::invalid_argument("probe_continuity: shifts must be positive");
        if (i > 0 && !(shifts[i] > shifts[i - 1]))
            throw std::invalid_argument("probe_continuity: shifts must increase strictly");
    }
    ContinuityReport rep;
    CostEstimate base = evaluate_policy(c, mu, pi, npaths, seed);
    rep.base_cost = base.mean;
    for (double s : shifts) {
        CostEstimate shifted = evaluate_policy(c, mu.translated(s), pi, npaths, seed);
        ContinuityProbe probe;
        probe.shift = s;
        // Common random numbers: difference taken pathwise.
        std::vector<double> diff(npaths);
        for (std::size_t p = 0; p < npaths; ++p)
            diff[p] = shifted.per_path[p] - base.per_path[p];
        probe.delta_cost = std::abs(mean_of(diff));
        probe.se = stderr_of(diff);
        probe.ratio = probe.delta_cost / s;
        rep.probes.push_back(probe);
    }
    const ContinuityProbe& first = rep.probes.front();
    rep.envelope_slope = (first.delta_cost + 3.0 * first.se) / first.shift;
    rep.pass = true;
    for (const auto& probe : rep.probes)
        if (probe.delta_cost > 2.0 * rep.envelope_slope * probe.shift + 3.0 * probe.se)
            rep.pass = false;
    return rep;
}

void write_martingale_csv(const std::string& path, const MartingaleReport& rep) {
    CsvWriter w(path);
    w.row({"phi", "s_node", "t_node", "weight", "stat", "se", "allowance",
           "boundary_sensitive", "pass"});
    for (const auto& cell : rep.cells)
        w.row({cell.phi, std::to_string(cell.s_node), std::to_string(cell.t_node),
               cell.weight == MartingaleWeight::One ? "one" : "sigmoid",
               fmt_double(cell.stat), fmt_double(cell.se), fmt_double(cell.allowance),
               cell.boundary_sensitive ? "1" : "0", cell.pass ? "1" : "0"});
}

}  // namespace rmfg
