#include "rmfg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rmfg/csv.hpp"

namespace rmfg {

EmpiricalMeasure::EmpiricalMeasure(std::vector<double> samples)
    : samples_(std::move(samples)) {
    if (samples_.empty())
        throw std::invalid_argument("EmpiricalMeasure: empty sample set");
    double s = 0.0, s2 = 0.0;
    for (double x : samples_) {
        if (!std::isfinite(x))
            throw std::invalid_argument("EmpiricalMeasure: non-finite sample");
        if (x < 0.0)
            throw std::invalid_argument("EmpiricalMeasure: negative sample (state space is [0,inf))");
        s += x;
        s2 += x * x;
    }
    std::sort(samples_.begin(), samples_.end());
    mean_ = s / static_cast<double>(samples_.size());
    m2_ = s2 / static_cast<double>(samples_.size());
}

EmpiricalMeasure EmpiricalMeasure::point_mass(double x, std::size_t count) {
    if (count == 0) throw std::invalid_argument("point_mass: count must be positive");
    return EmpiricalMeasure(std::vector<double>(count, x));
}

double EmpiricalMeasure::moment(double p) const {
    if (p < 0.0) throw std::invalid_argument("moment: order must be nonnegative");
    if (p == 2.0) return m2_;
    double s = 0.0;
    for (double x : samples_) s += std::pow(x, p);
    return s / static_cast<double>(samples_.size());
}

double EmpiricalMeasure::quantile(double q) const {
    if (q < 0.0 || q > 1.0) throw std::invalid_argument("quantile: level outside [0,1]");
    auto n = samples_.size();
    auto idx = static_cast<std::size_t>(q * static_cast<double>(n));
    if (idx >= n) idx = n - 1;
    return samples_[idx];
}

std::vector<double> EmpiricalMeasure::resample_quantiles(std::size_t m) const {
    if (m == 0) throw std::invalid_argument("resample_quantiles: need m >= 1");
    std::vector<double> out(m);
    auto n = samples_.size();
    for (std::size_t j = 0; j < m; ++j) {
        auto idx = static_cast<std::size_t>((static_cast<double>(j) + 0.5) *
                                            static_cast<double>(n) / static_cast<double>(m));
        if (idx >= n) idx = n - 1;
        out[j] = samples_[idx];
    }
    return out;
}

double w2_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
    const std::vector<double>* xa = &a.samples();
    const std::vector<double>* xb = &b.samples();
    std::vector<double> ra, rb;
    if (a.size() != b.size()) {
        // Align on the finer sample count; midpoint quantiles keep the common
        // case (n == m) an identity.
        std::size_t m = std::max(a.size(), b.size());
        ra = a.resample_quantiles(m);
        rb = b.resample_quantiles(m);
        xa = &ra;
        xb = &rb;
    }
    double ss = 0.0;
    for (std::size_t i = 0; i < xa->size(); ++i) {
        double d = (*xa)[i] - (*xb)[i];
        ss += d * d;
    }
    return std::sqrt(ss / static_cast<double>(xa->size()));
}

MeasureFlow::MeasureFlow(TimeGrid grid, std::vector<EmpiricalMeasure> marginals)
    : grid_(grid), marginals_(std::move(marginals)) {
    if (marginals_.size() != grid_.nodes())
        throw std::invalid_argument("MeasureFlow: need one marginal per time node");
}

MeasureFlow MeasureFlow::from_paths(const TimeGrid& grid,
                                    const std::vector<std::vector<double>>& paths) {
    if (paths.empty()) throw std::invalid_argument("MeasureFlow::from_paths: no paths");
    std::vector<EmpiricalMeasure> marg;
    marg.reserve(grid.nodes());
    std::vector<double> col(paths.size());
    for (std::size_t k = 0; k < grid.nodes(); ++k) {
        for (std::size_t p = 0; p < paths.size(); ++p) {
            if (paths[p].size() != grid.nodes())
                throw std::invalid_argument("MeasureFlow::from_paths: ragged path matrix");
            col[p] = paths[p][k];
        }
        marg.emplace_back(col);
    }
    MeasureFlow flow(grid, std::move(marg));
    flow.paths_ = paths;
    return flow;
}

MeasureFlow MeasureFlow::constant(const TimeGrid& grid, const EmpiricalMeasure& m) {
    return MeasureFlow(grid, std::vector<EmpiricalMeasure>(grid.nodes(), m));
}

MeasureFlow MeasureFlow::translated(double c) const {
    std::vector<EmpiricalMeasure> marg;
    marg.reserve(marginals_.size());
    for (const auto& m : marginals_) {
        std::vector<double> s = m.samples();
        for (double& x : s) x += c;
        marg.emplace_back(std::move(s));
    }
    MeasureFlow out(grid_, std::move(marg));
    if (!paths_.empty()) {
        out.paths_ = paths_;
        for (auto& row : out.paths_)
            for (double& x : row) x += c;
    }
    return out;
}

double flow_distance(const MeasureFlow& a, const MeasureFlow& b, FlowDistanceMode mode) {
    if (a.grid() != b.grid())
        throw std::invalid_argument("flow_distance: flows live on different time grids");
    std::size_t n = a.nodes();
    std::vector<double> d(n);
    for (std::size_t k = 0; k < n; ++k) d[k] = w2_distance(a.at(k), b.at(k));
    if (mode == FlowDistanceMode::Sup) {
        double m = 0.0;
        for (double x : d) m = std::max(m, x);
        return m;
    }
    // Trapezoid rule on the squared node distances.
    double dt = a.grid().dt();
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < n; ++k)
        acc += 0.5 * (d[k] * d[k] + d[k + 1] * d[k + 1]) * dt;
    return acc;
}

double flow_sup_moment(const MeasureFlow& m, double p, double t) {
    if (p < 0.0) throw std::invalid_argument("flow_sup_moment: order must be nonnegative");
    std::size_t last = 0;
    for (std::size_t k = 0; k < m.nodes(); ++k)
        if (m.grid().node(k) <= t + 1e-12 * (1.0 + m.grid().horizon())) last = k;
    if (m.path_coupled()) {
        const auto& paths = m.paths();
        double acc = 0.0;
        for (const auto& path : paths) {
            double run = 0.0;
            for (std::size_t k = 0; k <= last; ++k) run = std::max(run, std::abs(path[k]));
            acc += std::pow(run, p);
        }
        return acc / static_cast<double>(paths.size());
    }
    // Marginals only: the running max is unavailable, fall back to the max of
    // node-wise moments (a documented lower bound).
    double best = 0.0;
    for (std::size_t k = 0; k <= last; ++k) best = std::max(best, m.at(k).moment(p));
    return best;
}

void write_measure_csv(const std::string& path, const EmpiricalMeasure& m) {
    CsvWriter w(path);
    w.row({"sample"});
    for (double x : m.samples()) w.row({fmt_double(x)});
}

EmpiricalMeasure read_measure_csv(const std::string& path) {
    auto rows = read_csv(path);
    std::vector<double> samples;
    samples.reserve(rows.size());
    for (const auto& r : rows) {
        if (r.size() != 1) throw std::runtime_error("measure csv: expected one column");
        samples.push_back(parse_double(r[0]));
    }
    return EmpiricalMeasure(std::move(samples));
}

void write_flow_csv(const std::string& path, const MeasureFlow& flow,
                    std::size_t max_particles) {
    CsvWriter w(path);
    w.row({"horizon", fmt_double(flow.grid().horizon()), "steps",
           std::to_string(flow.grid().steps())});
    for (std::size_t k = 0; k < flow.nodes(); ++k) {
        const auto& m = flow.at(k);
        if (max_particles > 0 && m.size() > max_particles)
            w.numeric_row(m.resample_quantiles(max_particles));
        else
            w.numeric_row(m.samples());
    }
}

MeasureFlow read_flow_csv(const std::string& path) {
    std::string header;
    auto rows = read_csv(path, &header);
    auto head = split_csv_line(header);
    if (head.size() != 4 || head[0] != "horizon" || head[2] != "steps")
        throw std::runtime_error("flow csv: bad header");
    TimeGrid grid(parse_double(head[1]),
                  static_cast<std::size_t>(parse_double(head[3])));
    std::vector<EmpiricalMeasure> marg;
    marg.reserve(rows.size());
    for (const auto& r : rows) {
        std::vector<double> samples;
        samples.reserve(r.size());
        for (const auto& cell : r) samples.push_back(parse_double(cell));
        marg.emplace_back(std::move(samples));
    }
    return MeasureFlow(grid, std::move(marg));
}

}  // namespace rmfg
