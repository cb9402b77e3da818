#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughlab/grid.hpp"
#include "roughlab/hashing.hpp"
#include "roughlab/hurst.hpp"
#include "roughlab/vector_fields.hpp"

namespace roughlab {

/// Fully resolved experiment description. Every field participates in the
/// config hash; output directory and worker count are runtime flags and do
/// not. Defaults are materialized before hashing, so an omitted key and an
/// explicit default hash identically.
struct ExperimentConfig {
  double H = 0.5;
  double T = 1.0;
  int K = 64;
  std::string vf_name = "additive";
  nlohmann::json vf_params = nlohmann::json::object();
  int d = 1;
  int e = 1;
  Eigen::VectorXd a;
  Eigen::VectorXd z;
  bool has_z = false;
  double t = 1.0;
  int N = 8;
  int N_sim = 64;
  std::vector<int> N_list{4, 8, 16, 32, 64};
  int n_samples = 500;
  int r = 2;
  std::uint64_t seed = 1;
  int starts = 8;
  int max_iterations = 60;
  double eps_res = -1.0;     // <= 0: resolved from z at run time
  double delta_rank = -1.0;  // <= 0: resolved from trace(C) at run time
  double rho_start = 1.0;
  double bandwidth = -1.0;  // <= 0: Scott's rule
  int substeps = 8;
  int max_depth = 6;
  double rank_tol = 1e-8;

  nlohmann::json canonical;  // normalized semantic content
  std::string config_hash;   // FNV-1a over canonical.dump()

  TimeGrid grid() const { return TimeGrid{T, K}; }
  HurstModel hurst() const { return HurstModel::make(H); }
  VectorFieldSystem fields() const { return catalog(vf_name, vf_params); }
};

namespace detail {

inline std::invalid_argument config_error(const std::string& field, const std::string& what) {
  return std::invalid_argument("config field '" + field + "': " + what);
}

inline double get_double(const nlohmann::json& j, const std::string& key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw config_error(key, "expected a number");
  return j.at(key).get<double>();
}

inline int get_int(const nlohmann::json& j, const std::string& key, int fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (!v.is_number_integer() && !v.is_number_unsigned()) throw config_error(key, "expected an integer");
  return v.get<int>();
}

inline std::uint64_t get_seed(const nlohmann::json& j, const std::string& key, std::uint64_t fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  if (v.is_number_unsigned() || v.is_number_integer()) return v.get<std::uint64_t>();
  if (v.is_string()) {
    try {
      return std::stoull(v.get<std::string>());
    } catch (const std::exception&) {
      throw config_error(key, "expected an unsigned integer");
    }
  }
  throw config_error(key, "expected an unsigned integer");
}

inline Eigen::VectorXd get_vector(const nlohmann::json& j, const std::string& key) {
  const auto& v = j.at(key);
  if (!v.is_array()) throw config_error(key, "expected an array of numbers");
  Eigen::VectorXd out(static_cast<int>(v.size()));
  for (int i = 0; i < out.size(); ++i) {
    if (!v[static_cast<std::size_t>(i)].is_number()) throw config_error(key, "expected an array of numbers");
    out[i] = v[static_cast<std::size_t>(i)].get<double>();
    if (!std::isfinite(out[i])) throw config_error(key, "entries must be finite");
  }
  return out;
}

inline nlohmann::json vector_to_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace detail

/// Applies one `--set path=value` override. The path may be dotted
/// (`vf.name=heisenberg`); the value is parsed as JSON when possible and kept
/// as a string otherwise.
inline void apply_override(nlohmann::json& j, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw std::invalid_argument("override '" + assignment + "': expected key=value");
  std::string path = assignment.substr(0, eq);
  std::string text = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  nlohmann::json* node = &j;
  std::size_t pos = 0;
  while (true) {
    auto dot = path.find('.', pos);
    std::string key = path.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
    if (key.empty()) throw std::invalid_argument("override '" + assignment + "': empty path segment");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    if (!node->contains(key) || !(*node)[key].is_object()) (*node)[key] = nlohmann::json::object();
    node = &(*node)[key];
    pos = dot + 1;
  }
}

/// Validates and normalizes a raw JSON config. Throws std::invalid_argument
/// with a field-level message on any violation.
inline ExperimentConfig parse_config(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const std::vector<std::string> known = {
      "H",    "T",       "K",         "vf",      "d",        "e",          "a",          "z",
      "t",    "N",       "N_sim",     "N_list",  "n_samples", "r",          "seed",       "starts",
      "max_iterations", "eps_res", "delta_rank", "rho_start", "bandwidth", "substeps", "max_depth", "rank_tol"};
  for (const auto& [key, value] : j.items()) {
    (void)value;
    bool ok = false;
    for (const auto& k : known)
      if (k == key) ok = true;
    if (!ok) throw detail::config_error(key, "unknown key");
  }

  ExperimentConfig c;
  c.H = detail::get_double(j, "H", c.H);
  try {
    (void)HurstModel::make(c.H);
  } catch (const std::invalid_argument& ex) {
    throw detail::config_error("H", ex.what());
  }
  c.T = detail::get_double(j, "T", c.T);
  if (!(c.T > 0.0) || !std::isfinite(c.T)) throw detail::config_error("T", "must be positive and finite");
  c.K = detail::get_int(j, "K", c.K);
  if (c.K < 1 || c.K > 100000) throw detail::config_error("K", "must be in [1, 100000]");

  if (j.contains("vf")) {
    const auto& vf = j.at("vf");
    if (!vf.is_object()) throw detail::config_error("vf", "expected an object {name, params}");
    for (const auto& [key, value] : vf.items()) {
      (void)value;
      if (key != "name" && key != "params") throw detail::config_error("vf." + key, "unknown key");
    }
    if (!vf.contains("name") || !vf.at("name").is_string())
      throw detail::config_error("vf.name", "expected a string");
    c.vf_name = vf.at("name").get<std::string>();
    if (vf.contains("params")) {
      if (!vf.at("params").is_object()) throw detail::config_error("vf.params", "expected an object");
      c.vf_params = vf.at("params");
    }
  }
  VectorFieldSystem sys;
  try {
    sys = catalog(c.vf_name, c.vf_params);
  } catch (const std::invalid_argument& ex) {
    throw detail::config_error("vf", ex.what());
  }
  c.d = detail::get_int(j, "d", sys.d);
  c.e = detail::get_int(j, "e", sys.e);
  if (c.d != sys.d) throw detail::config_error("d", "does not match the vector-field system");
  if (c.e != sys.e) throw detail::config_error("e", "does not match the vector-field system");

  if (j.contains("a")) {
    c.a = detail::get_vector(j, "a");
    if (c.a.size() != sys.e) throw detail::config_error("a", "length must equal the state dimension");
  } else {
    c.a = Eigen::VectorXd::Zero(sys.e);
  }
  if (j.contains("z")) {
    c.z = detail::get_vector(j, "z");
    if (c.z.size() != sys.e) throw detail::config_error("z", "length must equal the state dimension");
    c.has_z = true;
  }

  c.t = detail::get_double(j, "t", c.T);
  if (!(c.t > 0.0) || c.t > c.T) throw detail::config_error("t", "must lie in (0, T]");
  {
    double dt = c.T / c.K;
    double k = std::round(c.t / dt);
    if (std::abs(c.t - k * dt) > 1e-9 * c.T) throw detail::config_error("t", "must lie on the time grid");
  }

  c.N = detail::get_int(j, "N", c.N);
  if (c.N < 1) throw detail::config_error("N", "must be positive");
  c.N_sim = detail::get_int(j, "N_sim", c.N_sim);
  if (c.N_sim < 1) throw detail::config_error("N_sim", "must be positive");
  if (j.contains("N_list")) {
    const auto& v = j.at("N_list");
    if (!v.is_array() || v.empty()) throw detail::config_error("N_list", "expected a nonempty array of integers");
    c.N_list.clear();
    for (const auto& x : v) {
      if (!x.is_number_integer() && !x.is_number_unsigned())
        throw detail::config_error("N_list", "expected integers");
      c.N_list.push_back(x.get<int>());
    }
    for (std::size_t i = 0; i < c.N_list.size(); ++i) {
      if (c.N_list[i] < 1) throw detail::config_error("N_list", "entries must be positive");
      if (i > 0 && c.N_list[i] <= c.N_list[i - 1])
        throw detail::config_error("N_list", "entries must strictly increase");
    }
  }
  c.n_samples = detail::get_int(j, "n_samples", c.n_samples);
  if (c.n_samples < 1) throw detail::config_error("n_samples", "must be positive");
  c.r = detail::get_int(j, "r", c.r);
  if (c.r < 1 || c.r > 8) throw detail::config_error("r", "must be in [1, 8]");
  c.seed = detail::get_seed(j, "seed", c.seed);
  c.starts = detail::get_int(j, "starts", c.starts);
  if (c.starts < 1) throw detail::config_error("starts", "must be positive");
  c.max_iterations = detail::get_int(j, "max_iterations", c.max_iterations);
  if (c.max_iterations < 1) throw detail::config_error("max_iterations", "must be positive");
  c.eps_res = detail::get_double(j, "eps_res", c.eps_res);
  c.delta_rank = detail::get_double(j, "delta_rank", c.delta_rank);
  c.rho_start = detail::get_double(j, "rho_start", c.rho_start);
  if (!(c.rho_start > 0.0)) throw detail::config_error("rho_start", "must be positive");
  c.bandwidth = detail::get_double(j, "bandwidth", c.bandwidth);
  c.substeps = detail::get_int(j, "substeps", c.substeps);
  if (c.substeps < 1) throw detail::config_error("substeps", "must be positive");
  c.max_depth = detail::get_int(j, "max_depth", c.max_depth);
  if (c.max_depth < 1) throw detail::config_error("max_depth", "must be positive");
  c.rank_tol = detail::get_double(j, "rank_tol", c.rank_tol);
  if (!(c.rank_tol > 0.0)) throw detail::config_error("rank_tol", "must be positive");

  nlohmann::json canon;
  canon["H"] = c.H;
  canon["T"] = c.T;
  canon["K"] = c.K;
  canon["vf"] = {{"name", c.vf_name}, {"params", c.vf_params}};
  canon["d"] = c.d;
  canon["e"] = c.e;
  canon["a"] = detail::vector_to_json(c.a);
  if (c.has_z) canon["z"] = detail::vector_to_json(c.z);
  canon["t"] = c.t;
  canon["N"] = c.N;
  canon["N_sim"] = c.N_sim;
  canon["N_list"] = c.N_list;
  canon["n_samples"] = c.n_samples;
  canon["r"] = c.r;
  canon["seed"] = c.seed;
  canon["starts"] = c.starts;
  canon["max_iterations"] = c.max_iterations;
  canon["eps_res"] = c.eps_res;
  canon["delta_rank"] = c.delta_rank;
  canon["rho_start"] = c.rho_start;
  canon["bandwidth"] = c.bandwidth;
  canon["substeps"] = c.substeps;
  canon["max_depth"] = c.max_depth;
  canon["rank_tol"] = c.rank_tol;
  c.canonical = canon;
  c.config_hash = hash_hex(fnv1a64(canon.dump()));
  return c;
}

/// Loads a JSON config file (empty path means all defaults), applies
/// overrides in order, then validates.
inline ExperimentConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open '" + path + "'");
    j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw std::invalid_argument("config: '" + path + "' is not valid JSON");
  }
  for (const auto& s : overrides) apply_override(j, s);
  return parse_config(j);
}

}  // namespace roughlab
