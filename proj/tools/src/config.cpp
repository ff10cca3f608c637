#include "twistkam_cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

namespace twistkam::cli {

using nlohmann::json;

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"audit",  "orbit", "conjugate-scan", "green", "minimize",
                                              "f-profile", "periodic", "graph", "alpha", "mane",
                                              "aubry", "foliation", "crosscheck"};
  return names;
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

double as_number(const json& v, const std::string& key) {
  if (!v.is_number()) throw ConfigError("'" + key + "' must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError("'" + key + "' must be finite");
  return x;
}

int as_integer(const json& v, const std::string& key) {
  if (!v.is_number_integer()) throw ConfigError("'" + key + "' must be an integer");
  return v.get<int>();
}

}  // namespace

FamilySpec parse_family(const json& j) {
  if (!j.is_object()) throw ConfigError("genfun must be an object");
  reject_unknown(j, {"family", "d", "M", "K", "eps", "fourier", "twist_constant"}, "genfun");
  if (!j.contains("family") || !j["family"].is_string()) throw ConfigError("genfun.family must be a string");
  FamilySpec spec;
  try {
    spec.family = family_from_string(j["family"].get<std::string>());
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  spec.dim = spec.family == Family::standard ? 1 : spec.family == Family::coupled_standard ? 2 : 1;
  if (j.contains("d")) spec.dim = as_integer(j["d"], "genfun.d");
  if (spec.dim < 1) throw ConfigError("genfun.d must be >= 1");
  if (j.contains("M")) {
    if (!j["M"].is_array()) throw ConfigError("genfun.M must be a row-major array");
    for (const auto& v : j["M"]) spec.M.push_back(as_number(v, "genfun.M"));
    if (spec.M.size() != static_cast<std::size_t>(spec.dim * spec.dim)) {
      throw ConfigError("genfun.M must have d*d entries");
    }
  }
  if (j.contains("K")) spec.K = as_number(j["K"], "genfun.K");
  if (j.contains("eps")) spec.eps = as_number(j["eps"], "genfun.eps");
  if (j.contains("twist_constant")) spec.twist_constant_hint = as_number(j["twist_constant"], "genfun.twist_constant");
  if (j.contains("fourier")) {
    if (!j["fourier"].is_array()) throw ConfigError("genfun.fourier must be a list of [index, cos, sin]");
    const bool convex = spec.family == Family::integrable_convex;
    const int idx_len = convex ? spec.dim : 2 * spec.dim;
    for (const auto& t : j["fourier"]) {
      if (!t.is_array() || t.size() != 3 || !t[0].is_array()) {
        throw ConfigError("each fourier term is [index-vector, cos, sin]");
      }
      if (t[0].size() != static_cast<std::size_t>(idx_len)) {
        throw ConfigError("fourier index must have " + std::to_string(idx_len) + " entries");
      }
      FourierTerm term;
      term.x_freq = IVec::Zero(spec.dim);
      term.v_freq = IVec::Zero(spec.dim);
      for (int i = 0; i < idx_len; ++i) {
        const int k = as_integer(t[0][static_cast<std::size_t>(i)], "fourier index");
        if (convex) {
          term.v_freq[i] = k;
        } else if (i < spec.dim) {
          term.x_freq[i] = k;
        } else {
          term.v_freq[i - spec.dim] = k;
        }
      }
      term.cos_coeff = as_number(t[1], "fourier cos");
      term.sin_coeff = as_number(t[2], "fourier sin");
      spec.fourier.push_back(term);
    }
  }
  return spec;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"genfun", "command", "params", "output", "seed"}, "config");
  ExperimentConfig cfg;
  if (!j.contains("genfun")) throw ConfigError("missing 'genfun'");
  cfg.genfun = parse_family(j["genfun"]);
  if (!j.contains("command") || !j["command"].is_string()) throw ConfigError("missing 'command'");
  cfg.command = j["command"].get<std::string>();
  const auto& names = command_names();
  if (std::find(names.begin(), names.end(), cfg.command) == names.end()) {
    throw ConfigError("unknown command '" + cfg.command + "'");
  }
  if (j.contains("params")) {
    if (!j["params"].is_object()) throw ConfigError("'params' must be an object");
    cfg.params = j["params"];
  }
  if (j.contains("output")) {
    const json& o = j["output"];
    if (!o.is_object()) throw ConfigError("'output' must be an object");
    reject_unknown(o, {"dir", "format"}, "output");
    if (o.contains("dir")) {
      if (!o["dir"].is_string() || o["dir"].get<std::string>().empty()) throw ConfigError("output.dir");
      cfg.output.dir = o["dir"].get<std::string>();
    }
    if (o.contains("format")) {
      if (!o["format"].is_string()) throw ConfigError("output.format must be csv or json");
      cfg.output.format = o["format"].get<std::string>();
      if (cfg.output.format != "csv" && cfg.output.format != "json") {
        throw ConfigError("output.format must be csv or json");
      }
    }
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j);
}

Params::Params(const json& j, int dim) : j_(j), dim_(dim) {}

bool Params::has(const std::string& key) const { return j_.contains(key); }

const json* Params::lookup(const std::string& key) {
  used_.insert(key);
  if (!j_.contains(key) || j_[key].is_null()) return nullptr;
  return &j_[key];
}

double Params::number(const std::string& key, std::optional<double> fallback) {
  const json* v = lookup(key);
  if (!v) {
    if (!fallback) throw ConfigError("params." + key + " is required");
    return *fallback;
  }
  return as_number(*v, "params." + key);
}

double Params::positive(const std::string& key, std::optional<double> fallback) {
  const double x = number(key, fallback);
  if (!(x > 0.0)) throw ConfigError("params." + key + " must be positive");
  return x;
}

std::optional<double> Params::optional_number(const std::string& key) {
  const json* v = lookup(key);
  if (!v) return std::nullopt;
  return as_number(*v, "params." + key);
}

int Params::integer(const std::string& key, std::optional<int> fallback) {
  const json* v = lookup(key);
  if (!v) {
    if (!fallback) throw ConfigError("params." + key + " is required");
    return *fallback;
  }
  return as_integer(*v, "params." + key);
}

bool Params::flag(const std::string& key, bool fallback) {
  const json* v = lookup(key);
  if (!v) return fallback;
  if (!v->is_boolean()) throw ConfigError("params." + key + " must be true or false");
  return v->get<bool>();
}

std::optional<std::string> Params::optional_string(const std::string& key) {
  const json* v = lookup(key);
  if (!v) return std::nullopt;
  if (!v->is_string()) throw ConfigError("params." + key + " must be a string");
  return v->get<std::string>();
}

Vec Params::vec(const std::string& key, std::optional<Vec> fallback) {
  const json* v = lookup(key);
  if (!v) {
    if (!fallback) throw ConfigError("params." + key + " is required");
    return *fallback;
  }
  if (v->is_number() && dim_ == 1) return Vec::Constant(1, as_number(*v, "params." + key));
  if (!v->is_array() || v->size() != static_cast<std::size_t>(dim_)) {
    throw ConfigError("params." + key + " must be an array of " + std::to_string(dim_) + " numbers");
  }
  Vec out(dim_);
  for (int i = 0; i < dim_; ++i) out[i] = as_number((*v)[static_cast<std::size_t>(i)], "params." + key);
  return out;
}

IVec Params::ivec(const std::string& key, std::optional<IVec> fallback) {
  const json* v = lookup(key);
  if (!v) {
    if (!fallback) throw ConfigError("params." + key + " is required");
    return *fallback;
  }
  if (v->is_number_integer() && dim_ == 1) return IVec::Constant(1, v->get<int>());
  if (!v->is_array() || v->size() != static_cast<std::size_t>(dim_)) {
    throw ConfigError("params." + key + " must be an array of " + std::to_string(dim_) + " integers");
  }
  IVec out(dim_);
  for (int i = 0; i < dim_; ++i) out[i] = as_integer((*v)[static_cast<std::size_t>(i)], "params." + key);
  return out;
}

std::vector<int> Params::int_list(const std::string& key) {
  const json* v = lookup(key);
  if (!v) throw ConfigError("params." + key + " is required");
  if (v->is_number_integer()) return {v->get<int>()};
  if (!v->is_array() || v->empty()) throw ConfigError("params." + key + " must be an integer or a list of integers");
  std::vector<int> out;
  for (const auto& item : *v) out.push_back(as_integer(item, "params." + key));
  return out;
}

std::vector<Vec> Params::vec_list(const std::string& key) {
  const json* v = lookup(key);
  if (!v) throw ConfigError("params." + key + " is required");
  if (!v->is_array() || v->empty()) throw ConfigError("params." + key + " must be a nonempty list");
  std::vector<Vec> out;
  for (const auto& item : *v) {
    if (item.is_number() && dim_ == 1) {
      out.push_back(Vec::Constant(1, as_number(item, "params." + key)));
      continue;
    }
    if (!item.is_array() || item.size() != static_cast<std::size_t>(dim_)) {
      throw ConfigError("params." + key + " entries must have " + std::to_string(dim_) + " components");
    }
    Vec c(dim_);
    for (int i = 0; i < dim_; ++i) c[i] = as_number(item[static_cast<std::size_t>(i)], "params." + key);
    out.push_back(c);
  }
  return out;
}

TorusGrid Params::grid(const std::string& key, std::optional<int> fallback) {
  const json* v = lookup(key);
  std::vector<int> res;
  if (!v) {
    if (!fallback) throw ConfigError("params." + key + " is required");
    res.assign(static_cast<std::size_t>(dim_), *fallback);
  } else if (v->is_number_integer()) {
    res.assign(static_cast<std::size_t>(dim_), v->get<int>());
  } else if (v->is_array() && v->size() == static_cast<std::size_t>(dim_)) {
    for (const auto& r : *v) res.push_back(as_integer(r, "params." + key));
  } else {
    throw ConfigError("params." + key + " must be an integer or one integer per axis");
  }
  for (int r : res) {
    if (r < 1) throw ConfigError("params." + key + " resolution must be >= 1");
  }
  return TorusGrid(res, Vec::Zero(dim_), Vec::Ones(dim_));
}

void Params::finish() const {
  for (const auto& [key, value] : j_.items()) {
    if (!used_.count(key)) throw ConfigError("unknown key '" + key + "' in params");
  }
}

}  // namespace twistkam::cli
