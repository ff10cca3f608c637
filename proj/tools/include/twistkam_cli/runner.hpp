#pragma once

#include "twistkam_cli/config.hpp"

#include "json.hpp"

#include <optional>
#include <string>
#include <vector>

namespace twistkam::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_internal = 1,
  exit_invalid_config = 2,
  exit_no_convergence = 3,
  exit_property_failed = 4,
};

struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  std::string relation;  // "<=", ">=", "<", ">"
  bool passed = false;
};

struct FileEntry {
  std::string path;  // relative to the output directory
  std::string sha256;
};

struct RunReport {
  std::string command;
  std::optional<std::uint64_t> seed;
  double wall_time = 0.0;
  std::vector<Check> checks;
  std::vector<FileEntry> files;
  nlohmann::json summary = nlohmann::json::object();
  int exit_code = exit_ok;
  std::string error;

  nlohmann::json to_json() const;
};

/// Executes the configured command, writes data files, summary.json and
/// report.json into the output directory and returns the report. Errors are
/// folded into exit_code and error; nothing is thrown.
RunReport run(const ExperimentConfig& cfg);

/// Parses, validates and runs a config document; invalid configs yield a
/// report with exit code 2.
RunReport run_document(const nlohmann::json& doc);

}  // namespace twistkam::cli
