#pragma once

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

namespace twistkam::cli {

using Cell = std::variant<double, long long, std::string>;

struct Table {
  std::vector<std::string> headers;
  std::vector<std::vector<Cell>> rows;

  void add(std::vector<Cell> row);
};

/// %.17g, so that values round-trip and outputs compare bit for bit.
std::string format_double(double v);

/// Writes `stem`.csv or `stem`.json (array of row objects) into dir and
/// returns the file name.
std::string write_table(const std::filesystem::path& dir, const std::string& stem, const Table& table,
                        const std::string& format);

std::string write_json(const std::filesystem::path& dir, const std::string& name, const nlohmann::json& j);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace twistkam::cli
