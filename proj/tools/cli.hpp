#pragma once

#include <array>
#include <iosfwd>
#include <string>
#include <vector>

#include "ras/harness.hpp"

namespace ras::cli {

enum class ExitCode : int { ok = 0, not_converged = 1, config = 2, io = 3 };

struct Command {
  enum class Kind { run, sweep, help };

  Kind kind = Kind::help;
  ExperimentConfig config;
  // sweep only
  std::vector<Variant> variants;
  std::vector<ProcGrid> proc_grids;
  std::array<Index, 3> local{10, 10, 10};
  std::string help_text;
};

/// Parses argv-style arguments (without the program name). Throws
/// ConfigError with a usage message on any error, including unknown flags.
Command parse_cli(const std::vector<std::string> &args);

/// "NXxNYxNZ" -> three positive integers.
std::array<Index, 3> parse_triple(const std::string &text);

/// One-line echo of the effective configuration.
std::string describe(const ExperimentConfig &cfg);

/// Runs a parsed command; CSV goes to --csv or `out`, diagnostics to `err`.
ExitCode execute(const Command &cmd, std::ostream &out, std::ostream &err);

/// parse_cli + execute with error-to-exit-code mapping.
int main_entry(const std::vector<std::string> &args, std::ostream &out,
               std::ostream &err);

} // namespace ras::cli
