#pragma once

#include "cfpgd/pgd.hpp"
#include "cfpgd/problems.hpp"

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace cfpgd::app {

/// Configuration file or override could not be parsed; the message names the
/// offending line or field.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raw `section.key -> value` entries with source lines, before typing.
struct RawConfig {
  struct Entry {
    std::string value;
    int line = 0;  // 0: command-line override
  };
  std::map<std::string, Entry> entries;
};

RawConfig parse_config_text(const std::string& text);
RawConfig parse_config_file(const std::string& path);

/// Applies one `section.key=value` assignment from the command line.
void apply_override(RawConfig& raw, const std::string& assignment);

/// Fully resolved run configuration.
struct RunConfig {
  ProblemSpec<double> problem;
  GreedyConfig<double> greedy;
  AlsConfig<double> als;
  DiagnosticsFlags diagnostics;
  std::string report_path = "report.csv";
  std::string summary_path = "summary.json";
  std::string modes_path = "modes.json";
};

/// Types and validates the raw entries; unknown keys are errors.
RunConfig make_run_config(const RawConfig& raw);

}  // namespace cfpgd::app
