// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "voltail/error.hpp"
#include "voltail/io/config.hpp"

namespace voltail::io {

enum ExitCode : int { exit_ok = 0, exit_config = 2, exit_numerical = 3, exit_check = 4 };

/// config / io / domain / dimension / condition errors are configuration
/// problems; the rest are numerical failures.
[[nodiscard]] int exit_code_for(ErrorKind kind) noexcept;

struct CommandOptions {
    unsigned workers = 1;  // never changes outputs
    bool check = false;    // compare against the acceptance tolerances
};

struct CommandResult {
    nlohmann::json summary;
    std::vector<std::string> warnings;
    int exit_code = exit_ok;
};

[[nodiscard]] const std::vector<std::string>& command_names();

/// Runs one of validate, simulate, density, tails, scaling, ingest. Writes the
/// data files, summary.json and manifest.json into cfg.output_dir atomically.
/// Library errors propagate with the command name prefixed.
[[nodiscard]] CommandResult run_command(const std::string& command, const ExperimentConfig& cfg,
                                        const CommandOptions& opt = {});

}  // namespace voltail::io
