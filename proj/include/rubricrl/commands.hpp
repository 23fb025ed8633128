#pragma once

#include "rubricrl/config.hpp"
#include "rubricrl/gateway.hpp"

#include <optional>
#include <string>

namespace rubricrl {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int internal = 1;
inline constexpr int config = 2;
inline constexpr int backend = 3;
inline constexpr int data = 4;
} // namespace exit_code

struct GlobalOptions {
    std::optional<std::uint64_t> seed;
    bool dry_run = false;
};

// Each command validates the whole config, loads fixtures and inputs, and
// only then talks to endpoints. They throw; run_cli maps errors to exit codes.
void cmd_curate(RunConfig config, const GlobalOptions& options);
void cmd_distill(RunConfig config, const GlobalOptions& options, Gateway& gateway);
void cmd_train(RunConfig config, const GlobalOptions& options, Gateway& gateway);
void cmd_eval(RunConfig config, const GlobalOptions& options, Gateway& gateway);
void cmd_transfer(RunConfig config, const GlobalOptions& options, Gateway& gateway);

// Runs one command by name and returns its exit code.
int run_command(const std::string& command, const std::string& config_path, const GlobalOptions& options,
                Gateway& gateway);

int run_cli(int argc, char** argv);

} // namespace rubricrl
