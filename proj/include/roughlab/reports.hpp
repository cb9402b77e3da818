#pragma once

#include <cinttypes>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "roughlab/density.hpp"
#include "roughlab/malliavin.hpp"

namespace roughlab {

namespace detail {

inline std::string u64_string(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%" PRIu64, v);
  return std::string(buf);
}

inline nlohmann::json vector_json(const Eigen::VectorXd& v) {
  nlohmann::json arr = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

}  // namespace detail

inline nlohmann::json spectrum_to_json(const SpectrumStatistics& s) {
  nlohmann::json j;
  j["schema"] = "malliavin-spectrum/1";
  j["t"] = s.t;
  j["N"] = s.N;
  j["n_samples"] = s.n_samples;
  j["seed"] = detail::u64_string(s.seed);
  j["lambda_min"] = s.lambda_min;
  j["quantiles"] = {{"min", s.quantiles[0]}, {"q25", s.quantiles[1]}, {"median", s.quantiles[2]},
                    {"q75", s.quantiles[3]}, {"max", s.quantiles[4]}};
  nlohmann::json tail = nlohmann::json::array();
  for (const auto& [tau, frac] : s.tail) tail.push_back({{"tau", tau}, {"fraction_below", frac}});
  j["tail"] = tail;
  return j;
}

inline nlohmann::json density_to_json(const DensityEstimate& e) {
  nlohmann::json j;
  j["schema"] = "density-estimate/1";
  j["z"] = detail::vector_json(e.z);
  j["t"] = e.t;
  j["value"] = e.value;
  j["std_error"] = e.std_error;
  j["bandwidths"] = detail::vector_json(e.bandwidths);
  j["n_samples"] = e.n_samples;
  j["n_used"] = e.n_used;
  j["N_sim"] = e.N_sim;
  j["seed"] = detail::u64_string(e.seed);
  j["T"] = e.T;
  j["K"] = e.K;
  j["H"] = e.H;
  j["vf"] = {{"name", e.vf_name}, {"params", nlohmann::json::parse(e.vf_params.empty() ? "{}" : e.vf_params)}};
  j["a"] = detail::vector_json(e.a);
  return j;
}

inline nlohmann::json kl_report_to_json(const KLConvergenceReport& r) {
  nlohmann::json j;
  j["schema"] = "kl-convergence/1";
  j["H"] = r.H;
  j["p"] = r.p;
  j["level"] = r.level;
  j["r"] = r.r;
  j["d"] = r.d;
  j["n_samples"] = r.n_samples;
  j["seed"] = detail::u64_string(r.seed);
  j["eta"] = r.eta;
  j["T"] = r.grid.horizon;
  j["K"] = r.grid.intervals;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json jr;
    jr["N"] = row.N;
    jr["dist_mean"] = row.dist_mean;
    jr["dist_stderr"] = row.dist_stderr;
    jr["rem_mean"] = row.rem_mean;
    jr["rem_stderr"] = row.rem_stderr;
    jr["exp_proxy_mean"] = row.exp_proxy_mean;
    jr["exp_proxy_stderr"] = row.exp_proxy_stderr;
    jr["max_lemma_residual"] = row.max_lemma_residual;
    rows.push_back(jr);
  }
  j["rows"] = rows;
  return j;
}

/// Long-format CSV: one row per (truncation, level, metric).
inline void kl_report_to_csv(std::ostream& os, const KLConvergenceReport& r) {
  os << "N,level,metric,value,std_error\n";
  char buf[64];
  auto put = [&](double x) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    os << buf;
  };
  for (const auto& row : r.rows) {
    for (int i = 0; i < r.level; ++i) {
      os << row.N << "," << (i + 1) << ",distance,";
      put(row.dist_mean[static_cast<std::size_t>(i)]);
      os << ",";
      put(row.dist_stderr[static_cast<std::size_t>(i)]);
      os << "\n";
      os << row.N << "," << (i + 1) << ",remainder,";
      put(row.rem_mean[static_cast<std::size_t>(i)]);
      os << ",";
      put(row.rem_stderr[static_cast<std::size_t>(i)]);
      os << "\n";
    }
    os << row.N << ",0,exp_proxy,";
    put(row.exp_proxy_mean);
    os << ",";
    put(row.exp_proxy_stderr);
    os << "\n";
    os << row.N << ",0,lemma_residual,";
    put(row.max_lemma_residual);
    os << ",0\n";
  }
}

inline nlohmann::json cross_check_to_json(const CrossCheckReport& r) {
  nlohmann::json j;
  j["schema"] = "cross-check/1";
  j["status"] = r.status;
  j["certificate"] = {{"verdict", r.cert_verdict}, {"residual", r.residual}, {"lambda_min", r.lambda_min}};
  j["density"] = {{"value", r.f_hat}, {"std_error", r.std_error}, {"positive", r.density_positive}};
  j["note"] = r.note;
  return j;
}

}  // namespace roughlab
