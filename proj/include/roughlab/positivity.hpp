#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roughlab/errors.hpp"
#include "roughlab/grid.hpp"
#include "roughlab/hashing.hpp"
#include "roughlab/kl.hpp"
#include "roughlab/malliavin.hpp"
#include "roughlab/parallel.hpp"
#include "roughlab/rng.hpp"
#include "roughlab/solvers.hpp"
#include "roughlab/vector_fields.hpp"

namespace roughlab {

struct CertifyOptions {
  int starts = 8;
  int max_iterations = 60;  // candidate evaluations per start
  double eps_res = -1.0;    // < 0: resolved to 1e-6 (1 + |z|)
  double delta_rank = -1.0;  // < 0: resolved to 1e-8 trace(C)/e at the optimum
  double rho_start = 1.0;    // norm bound for random starts
  std::uint64_t seed = 1;
  int substeps = 8;         // flow quadrature substeps (even)
  int rank_truncation = 0;  // 0: same as the control truncation
  int workers = 1;
};

struct OptimizerTrace {
  int start_index = 0;
  int iterations = 0;
  int accepted = 0;
  bool converged = false;
  std::vector<double> costs;  // after each accepted step; nonincreasing
};

/// Portable evidence for one target: the control found, its residual, and the
/// spectrum floor of the covariance at that control. Certified means both
/// thresholds were met at this truncation and budget; NotCertified means a
/// certificate was not found, never that the density vanishes.
struct PositivityCertificate {
  double T = 1.0;
  int K = 0;
  double H = 0.5;
  std::string vf_name;
  std::string vf_params;
  Eigen::VectorXd a;
  Eigen::VectorXd z;
  double t = 1.0;
  int N = 0;
  int N_rank = 0;
  int substeps = 8;
  std::uint64_t seed = 1;
  int starts = 8;
  int max_iterations = 60;
  double eps_res = 0.0;             // resolved threshold actually applied
  double delta_rank = 0.0;          // resolved threshold actually applied
  double delta_rank_request = -1.0;  // as requested (< 0: relative default)

  Eigen::MatrixXd coefficients;  // N x d control in mode coordinates
  Eigen::MatrixXd realization;   // (K+1) x d grid values of the control
  double residual = 0.0;
  double lambda_min = 0.0;
  double h_norm = 0.0;
  std::string verdict;  // Certified | NotCertified
  OptimizerTrace trace;
  std::uint64_t config_hash = 0;
};

inline std::uint64_t certificate_config_hash(const PositivityCertificate& c) {
  std::string s;
  s += "T=" + canonical_double(c.T);
  s += ";K=" + std::to_string(c.K);
  s += ";H=" + canonical_double(c.H);
  s += ";vf=" + c.vf_name + "#" + c.vf_params;
  s += ";a=" + canonical_vector(c.a);
  s += ";z=" + canonical_vector(c.z);
  s += ";t=" + canonical_double(c.t);
  s += ";N=" + std::to_string(c.N);
  s += ";Nrank=" + std::to_string(c.N_rank);
  s += ";substeps=" + std::to_string(c.substeps);
  s += ";seed=" + std::to_string(c.seed);
  s += ";starts=" + std::to_string(c.starts);
  s += ";maxit=" + std::to_string(c.max_iterations);
  s += ";eps=" + canonical_double(c.eps_res);
  s += ";delta=" + canonical_double(c.delta_rank_request);
  return fnv1a64(s);
}

namespace detail {

struct StartResult {
  Eigen::MatrixXd coefficients;
  double residual = 0.0;
  OptimizerTrace trace;
};

// Damped Gauss-Newton on J(c) = |Psi(h(c))_t - z|^2 / 2 over mode
// coefficients. The residual Jacobian columns are the first variations in the
// mode directions, shared with the covariance assembly.
inline StartResult gauss_newton_start(int start_index, const Eigen::MatrixXd& c0, const Eigen::VectorXd& z, int at,
                                      const VectorFieldSystem& vf, const Eigen::VectorXd& a, const KLBasis& basis,
                                      int N, double eps_res, int substeps, int max_iterations) {
  const int e = vf.e;
  const int d = vf.d;
  StartResult res;
  res.trace.start_index = start_index;

  Eigen::MatrixXd c = c0;
  auto eval = [&](const Eigen::MatrixXd& coeffs, Eigen::VectorXd& r, Eigen::MatrixXd& G) {
    CameronMartinElement h(basis, coeffs);
    JacobianFlow flow = jacobian_flow(h.realization, vf, a, substeps);
    r = flow.states.row(at).transpose() - z;
    G = first_variation_matrix(flow, basis, N, at);
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd G;
  eval(c, r, G);
  double cost = 0.5 * r.squaredNorm();
  res.trace.costs.push_back(cost);
  double lambda = 1e-3;
  int rejects_at_cap = 0;

  for (int it = 0; it < max_iterations; ++it) {
    res.trace.iterations = it + 1;
    if (r.norm() < eps_res) {
      res.trace.converged = true;
      break;
    }
    Eigen::MatrixXd A = G * G.transpose() + lambda * Eigen::MatrixXd::Identity(e, e);
    Eigen::VectorXd dual = A.ldlt().solve(r);
    Eigen::VectorXd step = G.transpose() * dual;  // = (G^T G + lambda I)^{-1} G^T r
    if (step.norm() < 1e-15 * (1.0 + c.norm())) break;
    Eigen::VectorXd r_model = lambda * dual;  // r + G (-step)
    double pred = 0.5 * (r.squaredNorm() - r_model.squaredNorm());

    Eigen::MatrixXd c_new = c;
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < d; ++j) c_new(i, j) -= step[i * d + j];
    Eigen::VectorXd r_new;
    Eigen::MatrixXd G_new;
    eval(c_new, r_new, G_new);
    double cost_new = 0.5 * r_new.squaredNorm();

    if (cost_new < cost) {
      double gain = pred > 0.0 ? (cost - cost_new) / pred : 1.0;
      c = std::move(c_new);
      r = std::move(r_new);
      G = std::move(G_new);
      cost = cost_new;
      res.trace.costs.push_back(cost);
      ++res.trace.accepted;
      if (gain > 0.75)
        lambda = std::max(lambda / 3.0, 1e-8);
      else if (gain < 0.25)
        lambda = std::min(lambda * 2.0, 1e4);
      rejects_at_cap = 0;
    } else {
      if (lambda >= 1e4) {
        if (++rejects_at_cap >= 3) break;
      }
      lambda = std::min(lambda * 10.0, 1e4);
    }
  }
  if (r.norm() < eps_res) res.trace.converged = true;
  res.coefficients = std::move(c);
  res.residual = r.norm();
  return res;
}

}  // namespace detail

/// Searches the first N mode coefficients for a control h with
/// Psi(h)_t = z and full-rank derivative evidence. Deterministic given the
/// seed; multistarts are index-seeded, so the result is worker-independent.
inline PositivityCertificate certify(const Eigen::VectorXd& z, double t, const VectorFieldSystem& vf,
                                     const Eigen::VectorXd& a, const KLBasis& basis, int N,
                                     const CertifyOptions& opts = {}) {
  if (N < vf.e) throw std::invalid_argument("certify: control truncation must be at least the state dimension");
  if (N > basis.n_max()) throw std::invalid_argument("certify: N exceeds the basis size");
  if (basis.d != vf.d) throw std::invalid_argument("certify: driver dimension mismatch");
  if (a.size() != vf.e || z.size() != vf.e) throw std::invalid_argument("certify: point dimension mismatch");
  if (opts.starts < 1) throw std::invalid_argument("certify: need at least one start");
  const int at = basis.grid.index_of(t);
  if (at < 1) throw std::invalid_argument("certify: t must be positive");

  const double eps_res = opts.eps_res < 0.0 ? 1e-6 * (1.0 + z.norm()) : opts.eps_res;
  const int n_rank = opts.rank_truncation > 0 ? opts.rank_truncation : N;
  if (n_rank > basis.n_max()) throw std::invalid_argument("certify: rank truncation exceeds the basis size");

  std::vector<detail::StartResult> results(static_cast<std::size_t>(opts.starts));
  parallel_for(static_cast<std::size_t>(opts.starts), opts.workers, [&](std::size_t s) {
    Eigen::MatrixXd c0 = Eigen::MatrixXd::Zero(N, vf.d);
    if (s > 0) {
      NormalSampler gen(stream_seed(opts.seed, s));
      for (int i = 0; i < N; ++i)
        for (int j = 0; j < vf.d; ++j) c0(i, j) = gen();
      double nrm = c0.norm();
      if (nrm > 0.0) c0 *= opts.rho_start * gen.uniform01() / nrm;
    }
    results[s] = detail::gauss_newton_start(static_cast<int>(s), c0, z, at, vf, a, basis, N, eps_res, opts.substeps,
                                            opts.max_iterations);
  });

  // Rank evidence for every start that met the residual threshold; verdicts
  // then order Certified < NotCertified, residual, start index.
  struct Scored {
    int verdict_rank = 1;
    double residual = 0.0;
    int index = 0;
    double lambda_min = 0.0;
    double delta = 0.0;
    bool have_rank = false;
  };
  std::vector<Scored> scored(results.size());
  for (std::size_t s = 0; s < results.size(); ++s) {
    Scored sc;
    sc.index = static_cast<int>(s);
    sc.residual = results[s].residual;
    if (results[s].residual < eps_res) {
      CameronMartinElement h(basis, results[s].coefficients);
      MalliavinMatrix C = skeleton_malliavin(h, basis, n_rank, vf, a, t, opts.substeps);
      sc.lambda_min = C.lambda_min();
      sc.delta = opts.delta_rank < 0.0 ? 1e-8 * C.C.trace() / vf.e : opts.delta_rank;
      sc.have_rank = true;
      if (sc.lambda_min > 0.0 && sc.lambda_min >= sc.delta) sc.verdict_rank = 0;
    }
    scored[s] = sc;
  }
  std::size_t best = 0;
  for (std::size_t s = 1; s < scored.size(); ++s) {
    const Scored &b = scored[best], &c = scored[s];
    if (c.verdict_rank != b.verdict_rank ? c.verdict_rank < b.verdict_rank : c.residual < b.residual) best = s;
  }

  PositivityCertificate cert;
  cert.T = basis.grid.horizon;
  cert.K = basis.grid.intervals;
  cert.H = basis.H;
  cert.vf_name = vf.name;
  cert.vf_params = vf.params;
  cert.a = a;
  cert.z = z;
  cert.t = t;
  cert.N = N;
  cert.N_rank = n_rank;
  cert.substeps = opts.substeps;
  cert.seed = opts.seed;
  cert.starts = opts.starts;
  cert.max_iterations = opts.max_iterations;
  cert.eps_res = eps_res;
  cert.delta_rank_request = opts.delta_rank;
  cert.coefficients = results[best].coefficients;
  CameronMartinElement h_best(basis, cert.coefficients);
  cert.realization = h_best.realization.values;
  cert.h_norm = cm_norm(h_best);
  cert.residual = results[best].residual;
  if (scored[best].have_rank) {
    cert.lambda_min = scored[best].lambda_min;
    cert.delta_rank = scored[best].delta;
  } else {
    MalliavinMatrix C = skeleton_malliavin(h_best, basis, n_rank, vf, a, t, opts.substeps);
    cert.lambda_min = C.lambda_min();
    cert.delta_rank = opts.delta_rank < 0.0 ? 1e-8 * C.C.trace() / vf.e : opts.delta_rank;
  }
  cert.verdict = scored[best].verdict_rank == 0 ? "Certified" : "NotCertified";
  cert.trace = results[best].trace;
  cert.config_hash = certificate_config_hash(cert);
  return cert;
}

/// Independent re-check of a certificate. On the certificate's own grid the
/// residual and spectrum floor are recomputed from the stored coefficients and
/// must meet the thresholds and match the stored values to 1e-8. On a finer
/// grid whose interval count is a multiple of the original, the stored control
/// is replayed by refinement and only the residual is checked, against
/// 10 eps_res (grid-consistency mode). Any other configuration difference is
/// an error.
inline bool verify(const PositivityCertificate& cert, const VectorFieldSystem& vf, const Eigen::VectorXd& a,
                   const KLBasis& basis) {
  if (vf.name != cert.vf_name || vf.params != cert.vf_params)
    throw std::invalid_argument("verify: field system differs from the certificate");
  if (basis.H != cert.H || basis.grid.horizon != cert.T)
    throw std::invalid_argument("verify: driver configuration differs from the certificate");
  if (a.size() != cert.a.size() || (a - cert.a).norm() != 0.0)
    throw std::invalid_argument("verify: starting point differs from the certificate");
  if (basis.d != vf.d) throw std::invalid_argument("verify: driver dimension mismatch");

  if (basis.grid.intervals == cert.K) {
    PositivityCertificate probe = cert;
    probe.config_hash = certificate_config_hash(probe);
    if (probe.config_hash != cert.config_hash)
      throw std::invalid_argument("verify: configuration hash does not match the certificate fields");
    CameronMartinElement h(basis, cert.coefficients);
    const int at = basis.grid.index_of(cert.t);
    SolutionPath y = solve_young(h.realization, vf, a, cert.substeps);
    double r = (y.state(at) - cert.z).norm();
    MalliavinMatrix C = skeleton_malliavin(h, basis, cert.N_rank, vf, a, cert.t, cert.substeps);
    double lam = C.lambda_min();
    bool matches = std::abs(r - cert.residual) <= 1e-8 * std::max(1.0, cert.residual) &&
                   std::abs(lam - cert.lambda_min) <= 1e-8 * std::max(1.0, std::abs(cert.lambda_min));
    bool thresholds = r < cert.eps_res && lam > 0.0 && lam >= cert.delta_rank;
    return matches && thresholds;
  }
  if (basis.grid.intervals > cert.K && basis.grid.intervals % cert.K == 0) {
    TimeGrid coarse(cert.T, cert.K);
    GridPath stored(coarse, cert.realization);
    GridPath fine = stored.refine(basis.grid);
    const int at = basis.grid.index_of(cert.t);
    SolutionPath y = solve_young(fine, vf, a, cert.substeps);
    double r = (y.state(at) - cert.z).norm();
    return r < 10.0 * cert.eps_res;
  }
  throw std::invalid_argument("verify: grid differs from the certificate and is not a refinement");
}

/// Direct steering for elliptic systems: per interval the control rate is the
/// pseudoinverse image of the drift-corrected velocity toward the target,
/// re-aimed by a few outer corrections until the forward solve hits z. The
/// control is constant after t.
inline GridPath elliptic_reach(const Eigen::VectorXd& z, double t, const VectorFieldSystem& vf,
                               const Eigen::VectorXd& a, const TimeGrid& grid, int substeps = 8, double tol = 1e-6,
                               int max_outer = 50) {
  if (a.size() != vf.e || z.size() != vf.e) throw std::invalid_argument("elliptic_reach: point dimension mismatch");
  const int at = grid.index_of(t);
  if (at < 1) throw std::invalid_argument("elliptic_reach: t must be positive");
  const double dt = grid.dt();

  Eigen::VectorXd aim = z;
  GridPath h = GridPath::zero(grid, vf.d);
  for (int outer = 0; outer < max_outer; ++outer) {
    Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(grid.num_points(), vf.d);
    Eigen::VectorXd y = a;
    for (int k = 0; k < at; ++k) {
      Eigen::MatrixXd sig = vf.sigma(y);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(sig, Eigen::ComputeThinU | Eigen::ComputeThinV);
      const auto& sv = svd.singularValues();
      if (sv.size() < vf.e || sv(vf.e - 1) <= 1e-10 * std::max(sv(0), 1e-300))
        throw not_elliptic_error("elliptic_reach: diffusion matrix lost full row rank at t = " +
                                 std::to_string(grid.point(k)));
      double remaining = t - grid.point(k);
      Eigen::VectorXd v_des = (aim - y) / remaining;
      Eigen::VectorXd rate = svd.solve(v_des - vf.drift(y));
      auto f = [&](const Eigen::VectorXd& s) { return Eigen::VectorXd(vf.sigma(s) * rate + vf.drift(s)); };
      double sub = dt / substeps;
      for (int n = 0; n < substeps; ++n) y = detail::rk4_step(f, y, sub);
      detail::check_state(y, grid.point(k + 1), "elliptic_reach");
      vals.row(k + 1) = vals.row(k) + rate.transpose() * dt;
    }
    for (int k = at; k < grid.intervals; ++k) vals.row(k + 1) = vals.row(k);
    h = GridPath(grid, std::move(vals));
    Eigen::VectorXd hit = solve_young(h, vf, a, substeps).state(at);
    Eigen::VectorXd err = z - hit;
    if (err.norm() <= tol) return h;
    aim += err;
  }
  throw numerical_error("elliptic_reach: steering corrections did not converge");
}

inline nlohmann::json certificate_to_json(const PositivityCertificate& c) {
  nlohmann::json j;
  j["schema"] = "positivity-certificate/1";
  j["T"] = c.T;
  j["K"] = c.K;
  j["H"] = c.H;
  j["vf"] = {{"name", c.vf_name}, {"params", nlohmann::json::parse(c.vf_params.empty() ? "{}" : c.vf_params)}};
  j["a"] = std::vector<double>(c.a.data(), c.a.data() + c.a.size());
  j["z"] = std::vector<double>(c.z.data(), c.z.data() + c.z.size());
  j["t"] = c.t;
  j["N"] = c.N;
  j["N_rank"] = c.N_rank;
  j["substeps"] = c.substeps;
  j["seed"] = std::to_string(c.seed);
  j["starts"] = c.starts;
  j["max_iterations"] = c.max_iterations;
  j["eps_res"] = c.eps_res;
  j["delta_rank"] = c.delta_rank;
  j["delta_rank_request"] = c.delta_rank_request;
  auto matrix_rows = [](const Eigen::MatrixXd& m) {
    std::vector<std::vector<double>> rows;
    rows.reserve(static_cast<std::size_t>(m.rows()));
    for (int r = 0; r < m.rows(); ++r) {
      std::vector<double> row(static_cast<std::size_t>(m.cols()));
      for (int cc = 0; cc < m.cols(); ++cc) row[static_cast<std::size_t>(cc)] = m(r, cc);
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["coefficients"] = matrix_rows(c.coefficients);
  j["realization"] = matrix_rows(c.realization);
  j["residual"] = c.residual;
  j["lambda_min"] = c.lambda_min;
  j["h_norm"] = c.h_norm;
  j["verdict"] = c.verdict;
  j["trace"] = {{"start_index", c.trace.start_index},
                {"iterations", c.trace.iterations},
                {"accepted", c.trace.accepted},
                {"converged", c.trace.converged},
                {"costs", c.trace.costs}};
  j["config_hash"] = hash_hex(c.config_hash);
  return j;
}

inline PositivityCertificate certificate_from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != "positivity-certificate/1")
    throw std::invalid_argument("certificate_from_json: not a certificate document");
  PositivityCertificate c;
  c.T = j.at("T").get<double>();
  c.K = j.at("K").get<int>();
  c.H = j.at("H").get<double>();
  c.vf_name = j.at("vf").at("name").get<std::string>();
  c.vf_params = j.at("vf").at("params").dump();
  auto vec = [](const nlohmann::json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<int>(i)] = arr[i].get<double>();
    return v;
  };
  auto mat = [](const nlohmann::json& arr) {
    if (arr.empty()) return Eigen::MatrixXd(0, 0);
    Eigen::MatrixXd m(arr.size(), arr[0].size());
    for (std::size_t r = 0; r < arr.size(); ++r)
      for (std::size_t cc = 0; cc < arr[r].size(); ++cc) m(static_cast<int>(r), static_cast<int>(cc)) = arr[r][cc].get<double>();
    return m;
  };
  c.a = vec(j.at("a"));
  c.z = vec(j.at("z"));
  c.t = j.at("t").get<double>();
  c.N = j.at("N").get<int>();
  c.N_rank = j.at("N_rank").get<int>();
  c.substeps = j.at("substeps").get<int>();
  c.seed = std::stoull(j.at("seed").get<std::string>());
  c.starts = j.at("starts").get<int>();
  c.max_iterations = j.at("max_iterations").get<int>();
  c.eps_res = j.at("eps_res").get<double>();
  c.delta_rank = j.at("delta_rank").get<double>();
  c.delta_rank_request = j.at("delta_rank_request").get<double>();
  c.coefficients = mat(j.at("coefficients"));
  c.realization = mat(j.at("realization"));
  c.residual = j.at("residual").get<double>();
  c.lambda_min = j.at("lambda_min").get<double>();
  c.h_norm = j.at("h_norm").get<double>();
  c.verdict = j.at("verdict").get<std::string>();
  c.trace.start_index = j.at("trace").at("start_index").get<int>();
  c.trace.iterations = j.at("trace").at("iterations").get<int>();
  c.trace.accepted = j.at("trace").at("accepted").get<int>();
  c.trace.converged = j.at("trace").at("converged").get<bool>();
  c.trace.costs = j.at("trace").at("costs").get<std::vector<double>>();
  c.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
  return c;
}

}  // namespace roughlab
