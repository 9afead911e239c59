// SPDX-License-Identifier: Apache-2.0
//
// mela: metasurface-enabled ELAA channel simulation
// Copyright (C) 2026 The mela contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "mela/harness.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>

namespace
{
constexpr int exit_failure = 2;
}

int main(int argc, char **argv)
{
    CLI::App app{"mela: metasurface-enabled ELAA channel simulation"};
    app.require_subcommand(1);

    auto *run = app.add_subcommand("run", "Run a figure preset and print its tables");
    std::string preset, out_path, format = "tsv", config_path, snr;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    run->add_option("preset", preset, "Preset name")->required()->check(CLI::IsMember(mela::preset_names()));
    run->add_option("--seed", seed, "Random seed");
    run->add_option("--trials", trials, "Monte Carlo trials (or random draws)");
    run->add_option("--snr", snr, "Comma-separated SNR list in dB");
    run->add_option("--out", out_path, "Write tables to this file instead of stdout");
    run->add_option("--format", format, "tsv or csv")->check(CLI::IsMember({"tsv", "csv"}));
    run->add_option("--config", config_path, "key = value override file");

    auto *validate = app.add_subcommand("validate", "Run the identity and oracle suite");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError &e)
    {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try
    {
        if (*validate)
        {
            auto checks = mela::run_identity_suite();
            bool ok = true;
            for (const auto &c : checks)
            {
                fmt::print("{} {} ({})\n", c.pass ? "PASS" : "FAIL", c.name, c.detail);
                ok = ok && c.pass;
            }
            fmt::print("{} of {} checks passed\n", std::count_if(checks.begin(), checks.end(),
                                                                 [](const auto &c) { return c.pass; }),
                       checks.size());
            return ok ? 0 : exit_failure;
        }

        mela::Overrides ov;
        if (!config_path.empty())
            ov = mela::read_config_file(config_path);
        if (seed)
            ov["seed"] = std::to_string(*seed);
        if (trials)
            ov["trials"] = std::to_string(*trials);
        if (!snr.empty())
            ov["snr"] = snr;

        auto tables = mela::run_preset(preset, ov);
        auto text = mela::format_tables(tables, format == "csv" ? mela::TableFormat::CSV : mela::TableFormat::TSV);
        if (out_path.empty())
            std::cout << text;
        else
        {
            std::ofstream f(out_path);
            if (!(f << text))
                throw mela::DomainError("cannot write " + out_path);
        }
    }
    catch (const std::exception &e)
    {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    }
    return 0;
}
