// Built-in model instances with their default grids and assumption constants.
#ifndef RMFG_SCENARIOS_HPP
#define RMFG_SCENARIOS_HPP

#include <map>
#include <string>
#include <vector>

#include "rmfg/dynamics.hpp"

namespace rmfg {

struct Scenario {
    std::string name;
    std::string blurb;
    CoefficientSet coefficients;
    ControlGrid controls;
    TimeGrid grid;        // default discretization
    StateGrid sgrid;
    std::map<std::string, double> params;  // effective scenario parameters
};

// Throws std::invalid_argument for unknown names or parameters. Grid fields
// may be overridden afterwards; coefficients close over the parameter values.
Scenario make_scenario(const std::string& name,
                       const std::map<std::string, double>& params = {});

std::vector<std::string> scenario_names();
std::string scenario_blurb(const std::string& name);

}  // namespace rmfg

#endif
