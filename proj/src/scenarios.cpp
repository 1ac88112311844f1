#include "rmfg/scenarios.hpp"

#include <stdexcept>

namespace rmfg {

namespace {

void reject_unknown_params(const std::map<std::string, double>& given,
                           const std::map<std::string, double>& allowed,
                           const std::string& scenario) {
    for (const auto& [key, value] : given) {
        (void)value;
        if (allowed.find(key) == allowed.end())
            throw std::invalid_argument("scenario '" + scenario +
                                        "': unknown parameter '" + key + "'");
    }
}

double param_or(const std::map<std::string, double>& given, const std::string& key,
                double fallback) {
    auto it = given.find(key);
    return it == given.end() ? fallback : it->second;
}

Scenario reflected_bm_base(const std::string& name, double boundary_cost,
                           const std::map<std::string, double>& params) {
    reject_unknown_params(params, {}, name);
    CoefficientSet c;
    c.b = [](double, double, const EmpiricalMeasure&, const Control&) { return 0.0; };
    c.sigma = [](double, double, const EmpiricalMeasure&, const Control&) { return 1.0; };
    c.f = [](double, double, const EmpiricalMeasure&, const Control&) { return 0.0; };
    c.g = [](double, const EmpiricalMeasure&) { return 0.0; };
    c.h = [boundary_cost](double) { return boundary_cost; };
    c.lipschitz_c1 = 1.0;
    c.growth_c2 = 1.0;
    c.lower_c3 = 1.0;
    c.upper_c4 = 1.0;
    c.x0 = 0.0;
    return Scenario{name,
                    boundary_cost == 0.0
                        ? "driftless unit-volatility diffusion reflected at zero"
                        : "reflected driftless diffusion paying for boundary local time",
                    std::move(c),
                    ControlGrid::scalar({0.0}),
                    TimeGrid(1.0, 200),
                    StateGrid(4.0, 81),
                    {}};
}

Scenario toy_coupled(const std::map<std::string, double>& params) {
    std::map<std::string, double> defaults{{"kappa", 0.2}};
    reject_unknown_params(params, defaults, "toy-coupled");
    double kappa = param_or(params, "kappa", defaults["kappa"]);
    CoefficientSet c;
    c.b = [kappa](double, double x, const EmpiricalMeasure& mu, const Control& u) {
        return u[0] + kappa * (mu.mean() - x);
    };
    c.sigma = [](double, double, const EmpiricalMeasure&, const Control&) { return 0.5; };
    c.f = [](double, double x, const EmpiricalMeasure& mu, const Control& u) {
        double d = x - mu.mean();
        return d * d + 0.5 * u[0] * u[0];
    };
    c.g = [](double x, const EmpiricalMeasure&) { return x * x; };
    c.h = [](double) { return 0.1; };
    c.lipschitz_c1 = 1.0 + kappa;
    c.growth_c2 = 1.0;
    c.lower_c3 = 1.0;
    c.upper_c4 = 2.5;
    c.x0 = 1.0;
    return Scenario{"toy-coupled",
                    "mean-chasing control with quadratic effort and terminal spread cost",
                    std::move(c),
                    ControlGrid::scalar({-1.0, 0.0, 1.0}),
                    TimeGrid(1.0, 100),
                    StateGrid(4.0, 81),
                    {{"kappa", kappa}}};
}

Scenario unbounded_drift(const std::map<std::string, double>& params) {
    reject_unknown_params(params, {}, "unbounded-drift");
    CoefficientSet c;
    c.b = [](double, double x, const EmpiricalMeasure&, const Control& u) {
        return u[0] - x;
    };
    c.sigma = [](double, double, const EmpiricalMeasure&, const Control&) { return 0.5; };
    c.f = [](double, double x, const EmpiricalMeasure&, const Control& u) {
        return x * x + 0.5 * u[0] * u[0];
    };
    c.g = [](double, const EmpiricalMeasure&) { return 0.0; };
    c.h = [](double) { return 0.1; };
    c.lipschitz_c1 = 1.0;
    c.growth_c2 = 1.0;
    c.lower_c3 = 1.0;
    c.upper_c4 = 1.5;
    c.x0 = 1.0;
    return Scenario{"unbounded-drift",
                    "state-proportional restoring drift, the truncation-schedule stress case",
                    std::move(c),
                    ControlGrid::scalar({-1.0, 0.0, 1.0}),
                    TimeGrid(1.0, 100),
                    StateGrid(4.0, 81),
                    {}};
}

}  // namespace

Scenario make_scenario(const std::string& name,
                       const std::map<std::string, double>& params) {
    if (name == "reflected-bm") return reflected_bm_base(name, 0.0, params);
    if (name == "boundary-cost-bm") return reflected_bm_base(name, 1.0, params);
    if (name == "toy-coupled") return toy_coupled(params);
    if (name == "unbounded-drift") return unbounded_drift(params);
    throw std::invalid_argument("unknown scenario '" + name + "'");
}

std::vector<std::string> scenario_names() {
    return {"reflected-bm", "boundary-cost-bm", "toy-coupled", "unbounded-drift"};
}

std::string scenario_blurb(const std::string& name) { return make_scenario(name).blurb; }

}  // namespace rmfg
