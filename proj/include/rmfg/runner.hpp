// Turns a parsed config into a full pipeline run: solve / verify / nplayer /
// all, with every artifact written deterministically under an output
// directory and a machine-readable pass/fail summary.
#ifndef RMFG_RUNNER_HPP
#define RMFG_RUNNER_HPP

#include <optional>
#include <string>

#include "rmfg/config.hpp"

namespace rmfg {

struct RunOverrides {
    std::optional<std::string> scenario;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> npaths;
};

// Exit status: 0 all checks passed, 1 at least one check failed or the run
// aborted numerically, 2 config / usage problems (bad file, unknown scenario
// or key, invalid values).
int run_pipeline(const Config& cfg, const std::string& out_dir,
                 const RunOverrides& overrides = {});
int run_config_file(const std::string& config_path, const std::string& out_dir,
                    const RunOverrides& overrides = {});

std::string list_scenarios_text();

}  // namespace rmfg

#endif
