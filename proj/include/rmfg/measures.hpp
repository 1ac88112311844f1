// Empirical measures on [0, inf), flows of marginals over a time grid, and
// the order-statistics form of the 1-D Wasserstein-2 distance.
#ifndef RMFG_MEASURES_HPP
#define RMFG_MEASURES_HPP

#include <string>
#include <vector>

#include "rmfg/common.hpp"

namespace rmfg {

// Equal-weight atoms, stored sorted. Immutable after construction; mean and
// second moment are cached because coefficient callbacks hit them per step.
class EmpiricalMeasure {
public:
    explicit EmpiricalMeasure(std::vector<double> samples);
    static EmpiricalMeasure point_mass(double x, std::size_t count);

    const std::vector<double>& samples() const { return samples_; }  // sorted
    std::size_t size() const { return samples_.size(); }
    double mean() const { return mean_; }
    double second_moment() const { return m2_; }
    double moment(double p) const;
    // Quantile of the empirical step cdf at level q in [0,1].
    double quantile(double q) const;
    // m midpoint quantiles; reproduces the samples exactly when m == size().
    std::vector<double> resample_quantiles(std::size_t m) const;

private:
    std::vector<double> samples_;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

// W2 between equal-weight empirical measures: RMS difference of order
// statistics. Unequal sizes are aligned by midpoint quantile resampling.
double w2_distance(const EmpiricalMeasure& a, const EmpiricalMeasure& b);

enum class FlowDistanceMode { Sup, TimeIntegratedSquared };

// A marginal per time node. Optionally carries the particle paths the
// marginals came from, which keeps pathwise running maxima available.
class MeasureFlow {
public:
    MeasureFlow(TimeGrid grid, std::vector<EmpiricalMeasure> marginals);
    // paths(p) is one trajectory over grid.nodes() nodes; marginals are the
    // per-node sample columns.
    static MeasureFlow from_paths(const TimeGrid& grid,
                                  const std::vector<std::vector<double>>& paths);
    static MeasureFlow constant(const TimeGrid& grid, const EmpiricalMeasure& m);

    const TimeGrid& grid() const { return grid_; }
    const EmpiricalMeasure& at(std::size_t k) const { return marginals_.at(k); }
    std::size_t nodes() const { return marginals_.size(); }
    bool path_coupled() const { return !paths_.empty(); }
    const std::vector<std::vector<double>>& paths() const { return paths_; }
    // New flow with every sample (and path) shifted by c; negatives rejected.
    MeasureFlow translated(double c) const;

private:
    TimeGrid grid_;
    std::vector<EmpiricalMeasure> marginals_;
    std::vector<std::vector<double>> paths_;
};

double flow_distance(const MeasureFlow& a, const MeasureFlow& b, FlowDistanceMode mode);

// Empirical sup-moment sup-over-paths version of ||mu||^p_t: mean over
// particles of (max_{s<=t} X_s)^p when the flow is path-coupled, otherwise
// the max over nodes up to t of the node-wise p-th moment (a lower bound,
// flagged by the caller via path_coupled()).
double flow_sup_moment(const MeasureFlow& m, double p, double t);

void write_measure_csv(const std::string& path, const EmpiricalMeasure& m);
EmpiricalMeasure read_measure_csv(const std::string& path);
// One row per time node; cells are the sorted samples. max_particles > 0
// downsamples each marginal to that many midpoint quantiles.
void write_flow_csv(const std::string& path, const MeasureFlow& flow,
                    std::size_t max_particles = 0);
MeasureFlow read_flow_csv(const std::string& path);

}  // namespace rmfg

#endif
