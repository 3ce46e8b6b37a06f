#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "orbctl/error.hpp"
#include "orbctl/scenario_io.hpp"

namespace orbctl {

struct RunConfig {
  std::string command;  // analyze | synthesize | lambert | simulate | compare | drift | response
  std::optional<std::string> scenario_path;  // built-in defaults when absent
  std::string output_dir = ".";
  SeriesFormat format = SeriesFormat::Csv;
  Overrides overrides;
};

/// 2 for input-side failures (parse, validation, I/O, bad arguments),
/// 1 for numerical and synthesis failures.
int exit_code_for(ErrorKind kind);

/// Single-line JSON diagnostic.
std::string diagnostic_line(const std::string& kind, const std::string& message, int exit_code);

/// Executes one command, writing result files into cfg.output_dir and the main
/// report to `out`. Never throws; returns 0, 1 or 2.
int dispatch(const RunConfig& cfg, std::ostream& out, std::ostream& err);

/// Parses argv and dispatches.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace orbctl
