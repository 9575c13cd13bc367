#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "erc/experiments.hpp"
#include "erc/problems.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Policy-iteration solver for entropy-regularized stochastic control"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::int64_t seed = -1;
    auto* run = app.add_subcommand("run", "execute an experiment config and write reports");
    run->add_option("config", config_path, "path to the JSON experiment config")->required();
    run->add_option("--output-dir", output_dir, "override the config's output directory");
    run->add_option("--seed", seed, "override the Monte-Carlo seed");

    auto* list = app.add_subcommand("list-problems", "list registered problems with audit status");

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        std::cout << erc::list_problems_text(erc::registry());
        return 0;
    }

    erc::RunOverrides ov;
    if (!output_dir.empty()) ov.output_dir = output_dir;
    if (seed >= 0) ov.seed = static_cast<std::uint64_t>(seed);
    return erc::run_from_file(config_path, ov);
}
