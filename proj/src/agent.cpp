#include "rmfg/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "rmfg/csv.hpp"

namespace rmfg {

namespace {

// Orthonormal Hermite polynomials for weight exp(-x^2):
// p_0 = pi^{-1/4}, p_{k+1} = x sqrt(2/(k+1)) p_k - sqrt(k/(k+1)) p_{k-1}.
double hermite_orthonormal(std::size_t n, double x, double* prev_out = nullptr) {
    double pm = 0.0;
    double p = std::pow(3.14159265358979323846, -0.25);
    for (std::size_t k = 0; k < n; ++k) {
        double pn = x * std::sqrt(2.0 / static_cast<double>(k + 1)) * p -
                    std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1)) * pm;
        pm = p;
        p = pn;
    }
    if (prev_out) *prev_out = pm;
    return p;
}

double bisect_root(std::size_t n, double a, double b) {
    double fa = hermite_orthonormal(n, a);
    for (int it = 0; it < 200; ++it) {
        double m = 0.5 * (a + b);
        double fm = hermite_orthonormal(n, m);
        if (fm == 0.0) return m;
        if ((fa < 0.0) == (fm < 0.0)) {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
        if (b - a < 1e-16 * (1.0 + std::abs(a) + std::abs(b))) break;
    }
    return 0.5 * (a + b);
}

}  // namespace

GaussHermite::GaussHermite(std::size_t order) {
    if (order == 0) throw std::invalid_argument("GaussHermite: order must be >= 1");
    // Build zeros level by level; zeros of p_{k-1} interlace those of p_k, so
    // each bracket holds exactly one sign change.
    std::vector<double> roots{0.0};  // zeros of p_1
    for (std::size_t k = 2; k <= order; ++k) {
        double outer = std::sqrt(2.0 * static_cast<double>(k) + 2.0) + 1.0;
        std::vector<double> brackets;
        brackets.push_back(-outer);
        brackets.insert(brackets.end(), roots.begin(), roots.end());
        brackets.push_back(outer);
        std::vector<double> next;
        next.reserve(k);
        for (std::size_t i = 0; i + 1 < brackets.size(); ++i)
            next.push_back(bisect_root(k, brackets[i], brackets[i + 1]));
        roots = std::move(next);
    }
    y_.resize(order);
    w_.resize(order);
    double wsum = 0.0;
    for (std::size_t i = 0; i < order; ++i) {
        // Christoffel weights: W_i = 1 / sum_{k<n} p_k(x_i)^2.
        double x = roots[i];
        double pm = 0.0;
        double p = std::pow(3.14159265358979323846, -0.25);
        double ssq = p * p;
        for (std::size_t k = 0; k + 1 < order; ++k) {
            double pn = x * std::sqrt(2.0 / static_cast<double>(k + 1)) * p -
                        std::sqrt(static_cast<double>(k) / static_cast<double>(k + 1)) * pm;
            pm = p;
            p = pn;
            ssq += p * p;
        }
        w_[i] = 1.0 / ssq;
        wsum += w_[i];
        y_[i] = x * std::sqrt(2.0);  // standard-normal abscissa
    }
    // Normalize so the weights integrate the standard normal to exactly 1.
    for (auto& w : w_) w /= wsum;
}

DPSolution solve_dp(const CoefficientSet& c, const MeasureFlow& mu, const StateGrid& sg,
                    const ControlGrid& cg, const GaussHermite& quad) {
    const TimeGrid& grid = mu.grid();
    const std::size_t steps = grid.steps();
    const std::size_t m = sg.count();
    const std::size_t nc = cg.size();
    const double dt = grid.dt();
    const double sqdt = std::sqrt(dt);

    std::vector<std::vector<double>> value(grid.nodes(), std::vector<double>(m));
    std::vector<double> weights(steps * m * nc, 0.0);
    std::uint64_t clamped = 0, total = 0;

    const EmpiricalMeasure& muT = mu.at(steps);
    for (std::size_t j = 0; j < m; ++j) {
        double gv = c.g(sg.node(j), muT);
        if (!std::isfinite(gv))
            throw NumericError("non-finite terminal cost", grid.horizon(), sg.node(j), 0.0);
        value[steps][j] = gv;
    }

    std::vector<double> objective(nc);
    for (std::size_t k = steps; k-- > 0;) {
        double t = grid.node(k);
        const EmpiricalMeasure& muk = mu.at(k);
        double ht = c.h(t);
        const std::vector<double>& vnext = value[k + 1];
        for (std::size_t j = 0; j < m; ++j) {
            double x = sg.node(j);
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < nc; ++i) {
                const Control& u = cg.at(i);
                double bi = c.b(t, x, muk, u);
                double si = c.sigma(t, x, muk, u);
                double fi = c.f(t, x, muk, u);
                if (!std::isfinite(bi) || !std::isfinite(si) || !std::isfinite(fi))
                    throw NumericError("non-finite coefficient", t, x, u[0]);
                double G = fi * dt;
                double sd = std::abs(si) * sqdt;
                for (std::size_t q = 0; q < quad.order(); ++q) {
                    double z = x + bi * dt + sd * quad.nodes()[q];
                    double dk = 0.0;
                    if (z < 0.0) {
                        dk = -z;
                        z = 0.0;
                    }
                    bool clamped_high = false;
                    std::size_t jj;
                    double w;
                    sg.interp(z, jj, w, &clamped_high);
                    if (clamped_high) ++clamped;
                    ++total;
                    double v = (1.0 - w) * vnext[jj] + w * vnext[jj + 1];
                    G += quad.weights()[q] * (v + ht * dk);
                }
                objective[i] = G;
                if (G < best) best = G;
            }
            value[k][j] = best;
            // Exact-tie handling: tied minimizers share the mass uniformly.
            double tol = 1e-12 * std::max(1.0, std::abs(best));
            std::size_t nties = 0;
            for (std::size_t i = 0; i < nc; ++i)
                if (objective[i] - best <= tol) ++nties;
            double* row = weights.data() + (k * m + j) * nc;
            for (std::size_t i = 0; i < nc; ++i)
                row[i] = (objective[i] - best <= tol) ? 1.0 / static_cast<double>(nties) : 0.0;
        }
    }

    RelaxedPolicy policy(grid, sg, cg, std::move(weights));
    std::size_t j0;
    double w0;
    sg.interp(c.x0, j0, w0);
    double v0 = (1.0 - w0) * value[0][j0] + w0 * value[0][j0 + 1];
    return DPSolution{grid, sg, std::move(value), std::move(policy), v0, clamped, total};
}

CostEstimate cost_of_bundle(const CoefficientSet& c, const MeasureFlow& mu,
                            const PathBundle& pb) {
    if (pb.grid != mu.grid())
        throw std::invalid_argument("cost_of_bundle: bundle and flow grids differ");
    const TimeGrid& grid = pb.grid;
    const std::size_t steps = grid.steps();
    const double dt = grid.dt();
    const ControlGrid& cg = pb.policy->control_grid();

    CostEstimate est;
    est.per_path.resize(pb.npaths());
    for (std::size_t p = 0; p < pb.npaths(); ++p) {
        double acc = 0.0;
        for (std::size_t k = 0; k < steps; ++k) {
            double t = grid.node(k);
            double x = pb.X[p][k];
            const double* q = pb.applied_weights(p, k);
            double run = 0.0;
            for (std::size_t i = 0; i < cg.size(); ++i) {
                if (q[i] == 0.0) continue;
                double fi = c.f(t, x, mu.at(k), cg.at(i));
                if (!std::isfinite(fi)) throw NumericError("non-finite running cost", t, x, cg.at(i)[0]);
                run += q[i] * fi;
            }
            acc += run * dt + c.h(t) * (pb.K[p][k + 1] - pb.K[p][k]);
        }
        acc += c.g(pb.X[p][steps], mu.at(steps));
        est.per_path[p] = acc;
    }
    est.mean = mean_of(est.per_path);
    est.stderr_mean = stderr_of(est.per_path);
    return est;
}

CostEstimate evaluate_policy(const CoefficientSet& c, const MeasureFlow& mu,
                             const RelaxedPolicy& pi, std::size_t npaths,
                             std::uint64_t seed) {
    PathBundle pb = simulate_reflected(c, mu, pi, npaths, seed);
    return cost_of_bundle(c, mu, pb);
}

std::vector<double> one_step_objectives(const CoefficientSet& c, double t, double x,
                                        const EmpiricalMeasure& mu, const ControlGrid& cg,
                                        const GaussHermite& quad, double dt,
                                        const StateGrid& sg, const std::vector<double>& vnext) {
    if (vnext.size() != sg.count())
        throw std::invalid_argument("one_step_objectives: continuation size mismatch");
    double sqdt = std::sqrt(dt);
    double ht = c.h(t);
    std::vector<double> out(cg.size());
    for (std::size_t i = 0; i < cg.size(); ++i) {
        const Control& u = cg.at(i);
        double bi = c.b(t, x, mu, u);
        double si = c.sigma(t, x, mu, u);
        double fi = c.f(t, x, mu, u);
        if (!std::isfinite(bi) || !std::isfinite(si) || !std::isfinite(fi))
            throw NumericError("non-finite coefficient", t, x, u[0]);
        double G = fi * dt;
        double sd = std::abs(si) * sqdt;
        for (std::size_t qn = 0; qn < quad.order(); ++qn) {
            double z = x + bi * dt + sd * quad.nodes()[qn];
            double dk = 0.0;
            if (z < 0.0) {
                dk = -z;
                z = 0.0;
            }
            std::size_t jj;
            double w;
            sg.interp(z, jj, w);
            double v = (1.0 - w) * vnext[jj] + w * vnext[jj + 1];
            G += quad.weights()[qn] * (v + ht * dk);
        }
        out[i] = G;
    }
    return out;
}

ConvexityReport check_convexity_S(const CoefficientSet& c, const ControlGrid& cg,
                                  double t, double x, const EmpiricalMeasure& mu,
                                  double tolerance) {
    std::size_t n = cg.size();
    std::vector<double> s2(n), b(n), f(n);
    for (std::size_t i = 0; i < n; ++i) {
        double si = c.sigma(t, x, mu, cg.at(i));
        s2[i] = si * si;
        b[i] = c.b(t, x, mu, cg.at(i));
        f[i] = c.f(t, x, mu, cg.at(i));
    }
    double diam = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            diam = std::max(diam, std::hypot(s2[i] - s2[j], b[i] - b[j]));
    ConvexityReport rep;
    rep.tolerance = tolerance > 0.0 ? tolerance : 0.04 * diam;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double mid_s2 = 0.5 * (s2[i] + s2[j]);
            double mid_b = 0.5 * (b[i] + b[j]);
            double mid_f = 0.5 * (f[i] + f[j]);
            double deficiency = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < n; ++k) {
                double dist = std::hypot(s2[k] - mid_s2, b[k] - mid_b);
                double excess = std::max(0.0, f[k] - mid_f);
                deficiency = std::min(deficiency, std::max(dist, excess));
            }
            rep.worst_deficiency = std::max(rep.worst_deficiency, deficiency);
        }
    if (rep.worst_deficiency <= rep.tolerance)
        rep.verdict = ConvexityVerdict::Convex;
    else if (rep.worst_deficiency > 10.0 * rep.tolerance)
        rep.verdict = ConvexityVerdict::NotConvex;
    else
        rep.verdict = ConvexityVerdict::Inconclusive;
    return rep;
}

void write_value_csv(const std::string& path, const DPSolution& sol) {
    CsvWriter w(path);
    w.row({"horizon", fmt_double(sol.grid.horizon()), "steps", std::to_string(sol.grid.steps()),
           "xmax", fmt_double(sol.sgrid.xmax()), "nodes", std::to_string(sol.sgrid.count())});
    for (const auto& row : sol.value) w.numeric_row(row);
}

void write_policy_csv(const std::string& path, const RelaxedPolicy& pi) {
    CsvWriter w(path);
    std::vector<std::string> head{"time_node", "state_node", "t", "x"};
    for (std::size_t i = 0; i < pi.control_grid().size(); ++i)
        head.push_back("w" + std::to_string(i));
    w.row(head);
    for (std::size_t k = 0; k < pi.grid().steps(); ++k)
        for (std::size_t j = 0; j < pi.state_grid().count(); ++j) {
            std::vector<std::string> row{std::to_string(k), std::to_string(j),
                                         fmt_double(pi.grid().node(k)),
                                         fmt_double(pi.state_grid().node(j))};
            const double* q = pi.weights_at(k, j);
            for (std::size_t i = 0; i < pi.control_grid().size(); ++i)
                row.push_back(fmt_double(q[i]));
            w.row(row);
        }
}

}  // namespace rmfg
