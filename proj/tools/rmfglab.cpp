// Command line front end: run a configured pipeline or list the built-in
// scenarios. Exit codes: 0 all checks passed, 1 a check failed or the run
// aborted, 2 usage/config problems.
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rmfg/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Reflected mean field game laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string scenario;
    std::int64_t seed = -1;
    std::int64_t npaths = -1;

    CLI::App* run = app.add_subcommand("run", "Run a pipeline from a config file");
    run->add_option("--config", config_path, "INI config file")->required();
    run->add_option("--out", out_dir, "Output directory (created if missing)");
    run->add_option("--scenario", scenario, "Override [run] scenario");
    run->add_option("--seed", seed, "Override [run] seed");
    run->add_option("--npaths", npaths, "Override [run] npaths");

    app.add_subcommand("list-scenarios", "List built-in scenarios and their defaults");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (app.got_subcommand("list-scenarios")) {
        std::cout << rmfg::list_scenarios_text();
        return 0;
    }

    rmfg::RunOverrides ov;
    if (!scenario.empty()) ov.scenario = scenario;
    if (seed >= 0) ov.seed = static_cast<std::uint64_t>(seed);
    if (npaths > 0) ov.npaths = static_cast<std::size_t>(npaths);
    return rmfg::run_config_file(config_path, out_dir, ov);
}
