#include "rmfg/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rmfg/csv.hpp"

namespace rmfg {

ControlGrid::ControlGrid(std::vector<Control> points) : points_(std::move(points)) {
    if (points_.empty()) throw std::invalid_argument("ControlGrid: empty");
    std::size_t d = points_[0].size();
    if (d == 0) throw std::invalid_argument("ControlGrid: zero-dimensional control");
    for (std::size_t i = 0; i < points_.size(); ++i) {
        if (points_[i].size() != d)
            throw std::invalid_argument("ControlGrid: mixed dimensions");
        for (std::size_t j = 0; j < i; ++j)
            if (points_[i] == points_[j])
                throw std::invalid_argument("ControlGrid: duplicate control point");
    }
}

ControlGrid ControlGrid::scalar(std::vector<double> values) {
    std::vector<Control> pts;
    pts.reserve(values.size());
    for (double v : values) pts.push_back({v});
    return ControlGrid(std::move(pts));
}

CoefficientSet truncate_coefficients(const CoefficientSet& c, double n) {
    if (!(n > 0.0)) throw std::invalid_argument("truncate_coefficients: level must be positive");
    CoefficientSet out = c;
    auto clip = [n](double v) { return std::max(-n, std::min(n, v)); };
    auto b = c.b;
    auto s = c.sigma;
    out.b = [b, clip](double t, double x, const EmpiricalMeasure& mu, const Control& u) {
        return clip(b(t, x, mu, u));
    };
    out.sigma = [s, clip](double t, double x, const EmpiricalMeasure& mu, const Control& u) {
        return clip(s(t, x, mu, u));
    };
    return out;
}

GrowthCheck spot_check_growth(const CoefficientSet& c, const ControlGrid& cg,
                              double horizon, double xprobe, std::uint64_t seed,
                              std::size_t nprobes) {
    Xoshiro256pp rng(derive_seed(seed, stream::kProbe));
    GrowthCheck out;
    for (std::size_t i = 0; i < nprobes; ++i) {
        double t = horizon * rng.uniform();
        double x = xprobe * rng.uniform();
        // Random probe measure: folded normals at a random scale.
        std::size_t m = 8;
        std::vector<double> samples(m);
        double scale = 0.1 + 2.0 * rng.uniform();
        for (auto& v : samples) v = scale * std::abs(rng.normal());
        EmpiricalMeasure mu(std::move(samples));
        double grow1 = c.growth_c2 * (1.0 + std::abs(x) + std::sqrt(mu.second_moment()));
        double grow2 = 1.0 + x * x + mu.second_moment();
        for (const auto& u : cg.points()) {
            out.worst_b_sigma = std::max(out.worst_b_sigma,
                                         std::abs(c.b(t, x, mu, u)) / grow1);
            out.worst_b_sigma = std::max(out.worst_b_sigma,
                                         std::abs(c.sigma(t, x, mu, u)) / grow1);
            out.worst_f = std::max(out.worst_f,
                                   std::abs(c.f(t, x, mu, u)) / (c.upper_c4 * grow2));
        }
        double gv = c.g(x, mu);
        out.worst_g = std::max(out.worst_g, gv / (c.upper_c4 * grow2));
        out.worst_g = std::max(out.worst_g, -gv / (c.lower_c3 * grow2));
    }
    return out;
}

RelaxedPolicy::RelaxedPolicy(TimeGrid grid, StateGrid sgrid, ControlGrid cgrid,
                             std::vector<double> weights)
    : grid_(grid), sgrid_(sgrid), cgrid_(std::move(cgrid)), weights_(std::move(weights)) {
    std::size_t want = grid_.steps() * sgrid_.count() * cgrid_.size();
    if (weights_.size() != want)
        throw std::invalid_argument("RelaxedPolicy: weight table has wrong shape");
    for (std::size_t k = 0; k < grid_.steps(); ++k)
        for (std::size_t j = 0; j < sgrid_.count(); ++j) {
            const double* q = weights_at(k, j);
            double s = 0.0;
            for (std::size_t i = 0; i < cgrid_.size(); ++i) {
                if (q[i] < 0.0)
                    throw std::invalid_argument("RelaxedPolicy: negative weight");
                s += q[i];
            }
            if (std::abs(s - 1.0) > 1e-12)
                throw std::invalid_argument("RelaxedPolicy: weights do not sum to 1");
        }
}

RelaxedPolicy RelaxedPolicy::uniform(const TimeGrid& grid, const StateGrid& sgrid,
                                     const ControlGrid& cgrid) {
    std::vector<double> w(grid.steps() * sgrid.count() * cgrid.size(),
                          1.0 / static_cast<double>(cgrid.size()));
    return RelaxedPolicy(grid, sgrid, cgrid, std::move(w));
}

RelaxedPolicy RelaxedPolicy::constant_control(const TimeGrid& grid, const StateGrid& sgrid,
                                              const ControlGrid& cgrid,
                                              std::size_t control_index) {
    if (control_index >= cgrid.size())
        throw std::invalid_argument("constant_control: index out of range");
    std::vector<double> w(grid.steps() * sgrid.count() * cgrid.size(), 0.0);
    for (std::size_t k = 0; k < grid.steps(); ++k)
        for (std::size_t j = 0; j < sgrid.count(); ++j)
            w[(k * sgrid.count() + j) * cgrid.size() + control_index] = 1.0;
    return RelaxedPolicy(grid, sgrid, cgrid, std::move(w));
}

EffectiveCoefficients effective_coefficients(const CoefficientSet& c, double t, double x,
                                             const EmpiricalMeasure& mu,
                                             const ControlGrid& cg, const double* q) {
    EffectiveCoefficients out{0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < cg.size(); ++i) {
        if (q[i] == 0.0) continue;
        const Control& u = cg.at(i);
        double bi = c.b(t, x, mu, u);
        double si = c.sigma(t, x, mu, u);
        double fi = c.f(t, x, mu, u);
        if (!std::isfinite(bi) || !std::isfinite(si) || !std::isfinite(fi))
            throw NumericError("non-finite coefficient", t, x, u[0]);
        out.drift += q[i] * bi;
        out.variance += q[i] * si * si;
        out.runcost += q[i] * fi;
    }
    return out;
}

void skorokhod_map(const std::vector<double>& z, std::vector<double>& x,
                   std::vector<double>& k) {
    if (z.empty()) throw std::invalid_argument("skorokhod_map: empty input path");
    x.resize(z.size());
    k.resize(z.size());
    // k_j = max(0, -min_{i<=j} z_i), built with a running minimum so each
    // step either leaves k flat (x > 0) or pins x to the boundary exactly.
    k[0] = std::max(0.0, -z[0]);
    x[0] = z[0] + k[0];
    double runmin = z[0];
    for (std::size_t j = 1; j < z.size(); ++j) {
        runmin = std::min(runmin, z[j]);
        k[j] = std::max(0.0, -runmin);
        x[j] = z[j] + k[j];
        if (x[j] < 0.0) x[j] = 0.0;  // guards -0.0 style roundoff; k pins x at the boundary
    }
}

PathBundle simulate_reflected(const CoefficientSet& c, const MeasureFlow& mu,
                              const RelaxedPolicy& pi, std::size_t npaths,
                              std::uint64_t seed, std::uint64_t first_path,
                              unsigned nthreads) {
    if (npaths == 0) throw std::invalid_argument("simulate_reflected: npaths must be positive");
    if (mu.grid() != pi.grid())
        throw std::invalid_argument("simulate_reflected: flow and policy grids differ");
    if (c.x0 < 0.0) throw std::invalid_argument("simulate_reflected: x0 < 0");

    const TimeGrid& grid = pi.grid();
    const std::size_t steps = grid.steps();
    const double dt = grid.dt();
    const ControlGrid& cg = pi.control_grid();

    PathBundle pb;
    pb.grid = grid;
    pb.policy = std::make_shared<RelaxedPolicy>(pi);
    pb.seed = seed;
    pb.first_path = first_path;
    pb.X.assign(npaths, std::vector<double>(grid.nodes()));
    pb.K.assign(npaths, std::vector<double>(grid.nodes()));

    parallel_for(npaths, nthreads, [&](std::size_t p0, std::size_t p1) {
        for (std::size_t p = p0; p < p1; ++p) {
            Xoshiro256pp rng(derive_seed(seed, stream::kPaths, first_path + p));
            auto& x = pb.X[p];
            auto& k = pb.K[p];
            x[0] = c.x0;
            k[0] = 0.0;
            for (std::size_t s = 0; s < steps; ++s) {
                double t = grid.node(s);
                const double* q = pi.lookup(s, x[s]);
                auto eff = effective_coefficients(c, t, x[s], mu.at(s), cg, q);
                double xi = rng.normal();
                double z = x[s] + eff.drift * dt + std::sqrt(eff.variance * dt) * xi;
                if (!std::isfinite(z))
                    throw NumericError("non-finite state update", t, x[s], 0.0);
                double xn = z > 0.0 ? z : 0.0;
                x[s + 1] = xn;
                k[s + 1] = k[s] + (xn - z);  // projection deficit, exactly max(-z, 0)
            }
        }
    });
    return pb;
}

void write_bundle_csv(const std::string& path, const PathBundle& pb,
                      std::size_t max_paths) {
    CsvWriter w(path);
    w.row({"path", "node", "t", "X", "K"});
    std::size_t n = pb.npaths();
    if (max_paths > 0) n = std::min(n, max_paths);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t k = 0; k < pb.grid.nodes(); ++k)
            w.row({std::to_string(p), std::to_string(k), fmt_double(pb.grid.node(k)),
                   fmt_double(pb.X[p][k]), fmt_double(pb.K[p][k])});
}

}  // namespace rmfg
