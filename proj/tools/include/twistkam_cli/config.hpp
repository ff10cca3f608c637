#pragma once

// Experiment configuration: one JSON document with top-level keys
// genfun, command, params, output and seed. Unknown keys are rejected.

#include "twistkam/genfun.hpp"
#include "twistkam/grid.hpp"
#include "twistkam/types.hpp"

#include "json.hpp"

#include <cstdint>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace twistkam::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OutputSpec {
  std::string dir = "out";
  std::string format = "csv";  // csv | json
};

struct ExperimentConfig {
  FamilySpec genfun;
  std::string command;
  nlohmann::json params = nlohmann::json::object();
  OutputSpec output;
  std::optional<std::uint64_t> seed;
};

const std::vector<std::string>& command_names();

FamilySpec parse_family(const nlohmann::json& j);
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);

/// Typed access to a command's params block. Every key read is recorded;
/// finish() rejects the keys nobody asked for.
class Params {
 public:
  Params(const nlohmann::json& j, int dim);

  bool has(const std::string& key) const;
  double number(const std::string& key, std::optional<double> fallback = std::nullopt);
  double positive(const std::string& key, std::optional<double> fallback = std::nullopt);
  std::optional<double> optional_number(const std::string& key);
  int integer(const std::string& key, std::optional<int> fallback = std::nullopt);
  bool flag(const std::string& key, bool fallback);
  std::optional<std::string> optional_string(const std::string& key);
  /// d-vector; a bare number is accepted when d == 1.
  Vec vec(const std::string& key, std::optional<Vec> fallback = std::nullopt);
  IVec ivec(const std::string& key, std::optional<IVec> fallback = std::nullopt);
  /// One integer or a list of integers.
  std::vector<int> int_list(const std::string& key);
  /// List of d-vectors (a flat list of numbers when d == 1).
  std::vector<Vec> vec_list(const std::string& key);
  /// Periodic torus grid from an integer (per axis) or an array of integers.
  TorusGrid grid(const std::string& key, std::optional<int> fallback = std::nullopt);
  void finish() const;

 private:
  const nlohmann::json* lookup(const std::string& key);

  nlohmann::json j_;
  int dim_;
  std::set<std::string> used_;
};

}  // namespace twistkam::cli
