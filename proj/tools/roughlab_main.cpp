#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <roughlab/roughlab.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunFlags {
  std::string config_path;
  std::vector<std::string> sets;
  std::string out_dir = ".";
  int workers = 1;
  std::string seed_override;
};

int emit_error(const std::string& type, const std::string& message, int code) {
  json err = {{"error", {{"type", type}, {"message", message}}}};
  std::cerr << err.dump() << "\n";
  return code;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write '" + p.string() + "'");
  os << text;
}

void write_json_file(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

std::string iso_utc(std::chrono::system_clock::time_point tp) {
  std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

json vector_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (int i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

struct SubcommandResult {
  int exit_code = 0;
  std::vector<std::string> outputs;
};

SubcommandResult run_lift(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  HurstModel hm = cfg.hurst();
  TimeGrid grid = cfg.grid();
  std::vector<GridPath> w = sample_paths(grid, cfg.H, 1, cfg.seed, cfg.d, flags.workers);
  GeometricRoughPath x = lift(w[0], hm.level, hm.p);

  std::ostringstream csv;
  write_rough_path_csv(csv, x);
  write_text(fs::path(flags.out_dir) / "rough_path.csv", csv.str());
  res.outputs.push_back("rough_path.csv");

  json summary;
  summary["schema"] = "lift-summary/1";
  summary["H"] = cfg.H;
  summary["T"] = cfg.T;
  summary["K"] = cfg.K;
  summary["d"] = cfg.d;
  summary["level"] = hm.level;
  summary["p"] = hm.p;
  json pv = json::array();
  for (int i = 1; i <= hm.level; ++i) pv.push_back(p_variation(x, i, hm.p));
  summary["p_variation"] = pv;
  summary["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "lift_summary.json", summary);
  res.outputs.push_back("lift_summary.json");
  return res;
}

SubcommandResult run_solve(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  HurstModel hm = cfg.hurst();
  TimeGrid grid = cfg.grid();
  VectorFieldSystem vf = cfg.fields();
  std::vector<GridPath> w = sample_paths(grid, cfg.H, 1, cfg.seed, cfg.d, flags.workers);
  GeometricRoughPath x = lift(w[0], hm.level, hm.p);
  SolutionPath y = solve_rde(x, vf, cfg.a);

  std::ostringstream csv;
  write_solution_csv(csv, y);
  write_text(fs::path(flags.out_dir) / "solution.csv", csv.str());
  res.outputs.push_back("solution.csv");

  json summary;
  summary["schema"] = "solve-summary/1";
  summary["method"] = y.method;
  summary["level"] = hm.level;
  summary["t"] = cfg.t;
  summary["state_at_t"] = vector_json(y.state(grid.index_of(cfg.t)));
  summary["terminal"] = vector_json(y.terminal());
  summary["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "solve_summary.json", summary);
  res.outputs.push_back("solve_summary.json");
  return res;
}

SubcommandResult run_deriv_check(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  TimeGrid grid = cfg.grid();
  VectorFieldSystem vf = cfg.fields();
  const int pairs = 20;
  const int at = grid.index_of(cfg.t);
  const double eps = 1e-3;
  std::vector<GridPath> samples = sample_paths(grid, cfg.H, 2 * pairs, cfg.seed, cfg.d, flags.workers);

  json rows = json::array();
  bool all_pass = true;
  double max_duhamel = 0.0;
  for (int i = 0; i < pairs; ++i) {
    const GridPath& h = samples[static_cast<std::size_t>(2 * i)];
    const GridPath& l = samples[static_cast<std::size_t>(2 * i + 1)];
    VariationBundle vb = solve_variation(h, l, vf, cfg.a, cfg.substeps);
    Eigen::VectorXd xi1 = vb.xi1.row(at).transpose();
    Eigen::VectorXd xi2 = vb.xi2.row(at).transpose();

    auto terminal = [&](double s) {
      return solve_young(h + l * s, vf, cfg.a, cfg.substeps).states.row(at).transpose().eval();
    };
    Eigen::VectorXd base = solve_young(h, vf, cfg.a, cfg.substeps).states.row(at).transpose();
    auto fd = [&](double s) {
      Eigen::VectorXd plus = terminal(s), minus = terminal(-s);
      Eigen::VectorXd d1 = (plus - minus) / (2.0 * s);
      Eigen::VectorXd d2 = (plus - 2.0 * base + minus) / (s * s);
      return std::pair<Eigen::VectorXd, Eigen::VectorXd>(d1, d2);
    };
    auto [d1a, d2a] = fd(eps);
    auto [d1b, d2b] = fd(eps / 2.0);

    double e1a = (d1a - xi1).norm(), e1b = (d1b - xi1).norm();
    double e2a = (d2a - xi2).norm(), e2b = (d2b - xi2).norm();
    // The ratio is meaningful only well above the quotient's rounding floor:
    // the solver returns states to ~1e-14 relative accuracy, and the second
    // difference divides that noise by eps^2 (~4e-8 at eps = 5e-4).
    bool inf1 = e1b > 1e-9 * (1.0 + xi1.norm() + base.norm());
    bool inf2 = e2b > 1e-6 * (1.0 + xi2.norm() + base.norm());
    double r1 = inf1 ? e1a / e1b : std::numeric_limits<double>::quiet_NaN();
    double r2 = inf2 ? e2a / e2b : std::numeric_limits<double>::quiet_NaN();
    if (inf1 && (r1 < 3.5 || r1 > 4.5)) all_pass = false;
    if (inf2 && (r2 < 3.5 || r2 > 4.5)) all_pass = false;

    JacobianFlow flow = jacobian_flow(h, vf, cfg.a, cfg.substeps % 2 == 0 ? cfg.substeps : cfg.substeps + 1);
    Eigen::MatrixXd duh = duhamel_first_variation(flow, l);
    double sup = (duh - vb.xi1).cwiseAbs().maxCoeff();
    max_duhamel = std::max(max_duhamel, sup);

    json row;
    row["ratio_xi1"] = inf1 ? json(r1) : json();
    row["ratio_xi2"] = inf2 ? json(r2) : json();
    row["duhamel_sup_diff"] = sup;
    rows.push_back(row);
  }

  json out;
  out["schema"] = "deriv-check/1";
  out["eps"] = eps;
  out["pairs"] = rows;
  out["max_duhamel_sup_diff"] = max_duhamel;
  out["pass"] = all_pass && max_duhamel < 1e-6;
  out["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "deriv_check.json", out);
  res.outputs.push_back("deriv_check.json");
  return res;
}

SubcommandResult run_kl_convergence(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  HurstModel hm = cfg.hurst();
  KLConvergenceReport report =
      kl_convergence_report(cfg.grid(), cfg.H, hm.p, cfg.N_list, cfg.n_samples, cfg.r, cfg.seed, cfg.d, flags.workers);
  std::ostringstream csv;
  kl_report_to_csv(csv, report);
  write_text(fs::path(flags.out_dir) / "kl_convergence.csv", csv.str());
  res.outputs.push_back("kl_convergence.csv");
  json j = kl_report_to_json(report);
  j["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "kl_convergence.json", j);
  res.outputs.push_back("kl_convergence.json");
  return res;
}

roughlab::PositivityCertificate certify_from_config(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  if (!cfg.has_z) throw std::invalid_argument("config field 'z': required for certification");
  VectorFieldSystem vf = cfg.fields();
  KLBasis basis = build_kl_basis(cfg.grid(), cfg.H, cfg.d);
  CertifyOptions opts;
  opts.starts = cfg.starts;
  opts.max_iterations = cfg.max_iterations;
  opts.eps_res = cfg.eps_res;
  opts.delta_rank = cfg.delta_rank;
  opts.rho_start = cfg.rho_start;
  opts.seed = cfg.seed;
  opts.substeps = cfg.substeps % 2 == 0 ? cfg.substeps : cfg.substeps + 1;
  opts.workers = flags.workers;
  return certify(cfg.z, cfg.t, vf, cfg.a, basis, cfg.N, opts);
}

SubcommandResult run_certify(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  PositivityCertificate cert = certify_from_config(cfg, flags);
  write_json_file(fs::path(flags.out_dir) / "certificate.json", certificate_to_json(cert));
  res.outputs.push_back("certificate.json");
  if (cert.verdict != "Certified") res.exit_code = 4;
  return res;
}

roughlab::DensityEstimate density_from_config(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  if (!cfg.has_z) throw std::invalid_argument("config field 'z': required for density estimation");
  VectorFieldSystem vf = cfg.fields();
  return estimate_density(cfg.grid(), cfg.z, cfg.t, vf, cfg.a, cfg.H, cfg.N_sim, cfg.n_samples, cfg.bandwidth,
                          cfg.seed, flags.workers, cfg.substeps);
}

SubcommandResult run_density(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  DensityEstimate est = density_from_config(cfg, flags);
  json j = density_to_json(est);
  j["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "density.json", j);
  res.outputs.push_back("density.json");
  return res;
}

SubcommandResult run_hormander(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  VectorFieldSystem vf = cfg.fields();
  HormanderResult hr = hormander_rank(vf, cfg.a, cfg.max_depth, cfg.rank_tol);
  json j;
  j["schema"] = "hormander/1";
  j["rank"] = hr.rank;
  j["depth"] = hr.depth_reached;
  j["e"] = vf.e;
  j["spans"] = hr.rank == vf.e;
  j["max_depth"] = cfg.max_depth;
  j["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "hormander.json", j);
  res.outputs.push_back("hormander.json");
  return res;
}

SubcommandResult run_cross_check(const roughlab::ExperimentConfig& cfg, const RunFlags& flags) {
  using namespace roughlab;
  SubcommandResult res;
  PositivityCertificate cert = certify_from_config(cfg, flags);
  write_json_file(fs::path(flags.out_dir) / "certificate.json", certificate_to_json(cert));
  res.outputs.push_back("certificate.json");
  DensityEstimate est = density_from_config(cfg, flags);
  json dj = density_to_json(est);
  dj["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "density.json", dj);
  res.outputs.push_back("density.json");
  CrossCheckReport rep = cross_check(cert, est);
  json j = cross_check_to_json(rep);
  j["config_hash"] = cfg.config_hash;
  write_json_file(fs::path(flags.out_dir) / "cross_check.json", j);
  res.outputs.push_back("cross_check.json");
  return res;
}

int run_subcommand(const std::string& name, const RunFlags& flags) {
  using namespace roughlab;
  ExperimentConfig cfg;
  try {
    std::vector<std::string> sets = flags.sets;
    if (!flags.seed_override.empty()) sets.push_back("seed=" + flags.seed_override);
    cfg = load_config(flags.config_path, sets);
    if (flags.workers < 1) throw std::invalid_argument("flag --workers: must be positive");
  } catch (const std::invalid_argument& ex) {
    return emit_error("invalid_config", ex.what(), 2);
  }

  auto started = std::chrono::system_clock::now();
  auto tick = std::chrono::steady_clock::now();
  SubcommandResult result;
  try {
    fs::create_directories(flags.out_dir);
    if (name == "lift") result = run_lift(cfg, flags);
    else if (name == "solve") result = run_solve(cfg, flags);
    else if (name == "deriv-check") result = run_deriv_check(cfg, flags);
    else if (name == "kl-convergence") result = run_kl_convergence(cfg, flags);
    else if (name == "certify") result = run_certify(cfg, flags);
    else if (name == "density") result = run_density(cfg, flags);
    else if (name == "hormander") result = run_hormander(cfg, flags);
    else if (name == "cross-check") result = run_cross_check(cfg, flags);
    else return emit_error("invalid_arguments", "unknown subcommand '" + name + "'", 2);
  } catch (const std::invalid_argument& ex) {
    return emit_error("invalid_config", ex.what(), 2);
  } catch (const divergence_error& ex) {
    return emit_error("divergence", ex.what(), 3);
  } catch (const not_elliptic_error& ex) {
    return emit_error("not_elliptic", ex.what(), 3);
  } catch (const estimation_failed_error& ex) {
    return emit_error("estimation_failed", ex.what(), 3);
  } catch (const numerical_error& ex) {
    return emit_error("numerical", ex.what(), 3);
  } catch (const std::exception& ex) {
    return emit_error("internal", ex.what(), 3);
  }

  auto finished = std::chrono::system_clock::now();
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - tick).count();
  json manifest;
  manifest["schema"] = "run-manifest/1";
  manifest["subcommand"] = name;
  manifest["config"] = cfg.canonical;
  manifest["config_hash"] = cfg.config_hash;
  manifest["workers"] = flags.workers;
  manifest["outputs"] = result.outputs;
  manifest["exit_code"] = result.exit_code;
  manifest["versions"] = {{"roughlab", "0.1.0"},
                          {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                        "." + std::to_string(EIGEN_MINOR_VERSION)}};
  manifest["started_at"] = iso_utc(started);
  manifest["finished_at"] = iso_utc(finished);
  manifest["wall_seconds"] = wall;
  try {
    write_json_file(fs::path(flags.out_dir) / "manifest.json", manifest);
  } catch (const std::exception& ex) {
    return emit_error("io", ex.what(), 3);
  }
  return result.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for rough differential equations driven by Gaussian rough paths"};
  app.require_subcommand(1);
  RunFlags flags;

  const std::map<std::string, std::string> subcommands = {
      {"lift", "sample a driver path and write its enriched (rough-path) increments"},
      {"solve", "run the rough-path solver on a sampled driver"},
      {"deriv-check", "finite-difference validation of the first and second variation solvers"},
      {"kl-convergence", "spectral-truncation convergence table for the driver"},
      {"certify", "search for a density-positivity certificate at the target point"},
      {"density", "Monte Carlo kernel density estimate at the target point"},
      {"hormander", "iterated-bracket rank of the vector fields at the start point"},
      {"cross-check", "run certify and density together and compare the conclusions"},
  };
  for (const auto& [name, desc] : subcommands) {
    CLI::App* sub = app.add_subcommand(name, desc);
    sub->add_option("--config", flags.config_path, "JSON config file (defaults apply when omitted)");
    sub->add_option("--set", flags.sets, "override a config key: key=value, dotted paths allowed");
    sub->add_option("--out-dir", flags.out_dir, "directory for output artifacts");
    sub->add_option("--workers", flags.workers, "worker thread count (never changes results)");
    sub->add_option("--seed", flags.seed_override, "override the config seed");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    json err = {{"error", {{"type", "invalid_arguments"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
  for (const auto& [name, desc] : subcommands) {
    (void)desc;
    if (app.got_subcommand(name)) return run_subcommand(name, flags);
  }
  return emit_error("invalid_arguments", "no subcommand given", 2);
}
