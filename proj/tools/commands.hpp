#pragma once

#include <CLI11.hpp>

#include <functional>
#include <string>
#include <vector>

namespace modip::cli {

// Work selected by the parsed subcommand; returns the process exit code.
using Action = std::function<int()>;

// Registers every subcommand on app. The chosen one stores its work in action; argv is
// recorded verbatim in manifests.
void add_commands(CLI::App &app, Action &action, std::vector<std::string> const &argv);

} // namespace modip::cli
