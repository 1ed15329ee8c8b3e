// SPDX-License-Identifier: Apache-2.0

#ifndef RIS_CLI_EXPERIMENTS_HPP
#define RIS_CLI_EXPERIMENTS_HPP

#include "ris/cli/config.hpp"
#include "ris/cli/export.hpp"

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace ris::cli
{
    struct RunSummary
    {
        std::string id;
        std::vector<std::filesystem::path> files;
        std::vector<std::string> points;                            // One line per sweep point
        std::vector<std::pair<std::string, std::string>> metrics;   // Experiment-level results
        std::size_t flagged_rows = 0;
    };

    // Checks every experiment-specific field without running anything. Throws ConfigError.
    void validate_experiment(const ExperimentConfig &cfg);

    // Runs the experiment and writes its files to out_dir. Outputs depend only on the config and seed.
    RunSummary run_experiment(const ExperimentConfig &cfg, const std::filesystem::path &out_dir,
                              std::size_t threads = 0);

    // Shared scenario readers, also used by tests
    RadioParams parse_loc_radio(const Node &n);
    loc::RisDeployment parse_ris(const Node &n);
    std::vector<loc::Vec2> parse_points(const Node &n, const std::string &key);
}

#endif
