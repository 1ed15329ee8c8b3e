// SPDX-License-Identifier: Apache-2.0

#include "ris/cli/experiments.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <iostream>

namespace
{
    constexpr int exit_config = 2;
    constexpr int exit_numerical = 3;

    int run(const std::string &file, const std::string &out, const std::optional<std::uint64_t> &seed,
            std::size_t threads)
    {
        auto cfg = ris::cli::load_config(file);
        if (seed)
            cfg.seed = *seed;
        const std::filesystem::path dir = out.empty() ? std::filesystem::path(cfg.output) : std::filesystem::path(out);
        const auto t0 = std::chrono::steady_clock::now();
        ris::cli::RunSummary sum = ris::cli::run_experiment(cfg, dir, threads);
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

        std::cout << "experiment " << sum.id << " seed " << cfg.seed << "\n";
        for (const auto &p : sum.points)
            std::cout << "  " << p << "\n";
        for (const auto &[k, v] : sum.metrics)
            std::cout << "  " << k << " = " << v << "\n";
        if (sum.flagged_rows)
            std::cout << "  flagged rows: " << sum.flagged_rows << "\n";
        for (const auto &f : sum.files)
            std::cout << "wrote " << f.string() << "\n";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.3f", secs);
        std::cout << "wall-clock " << buf << " s\n";
        return 0;
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"RIS link, localization and sensing experiments"};
    app.require_subcommand(1);

    std::string file, out;
    std::uint64_t seed_value = 0;
    std::size_t threads = 0;
    auto *run_cmd = app.add_subcommand("run", "Run an experiment config and write its outputs");
    run_cmd->add_option("config", file, "Experiment config (JSON)")->required();
    run_cmd->add_option("--out", out, "Output directory (overrides the config)");
    auto *seed_opt = run_cmd->add_option("--seed", seed_value, "Seed (overrides the config)");
    run_cmd->add_option("--threads", threads, "Worker threads, 0 for automatic");

    std::string vfile;
    auto *val_cmd = app.add_subcommand("validate", "Check a config without running it");
    val_cmd->add_option("config", vfile, "Experiment config (JSON)")->required();

    auto *list_cmd = app.add_subcommand("list-experiments", "Print the known experiment ids");

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run_cmd)
        {
            std::optional<std::uint64_t> seed;
            if (*seed_opt)
                seed = seed_value;
            return run(file, out, seed, threads);
        }
        if (*val_cmd)
        {
            auto cfg = ris::cli::load_config(vfile);
            ris::cli::validate_experiment(cfg);
            std::cout << vfile << ": ok (" << cfg.id << ", " << cfg.sweep.values.size() << " sweep points)\n";
            return 0;
        }
        if (*list_cmd)
        {
            for (const auto &id : ris::cli::experiment_ids())
                std::cout << id << "\n";
            return 0;
        }
    }
    catch (const ris::cli::ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return exit_config;
    }
    catch (const std::invalid_argument &e)
    {
        std::cerr << "invalid input: " << e.what() << "\n";
        return exit_config;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return exit_numerical;
    }
    return 0;
}
