#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "roughlab/fbm.hpp"
#include "roughlab/grid.hpp"
#include "roughlab/kl.hpp"
#include "roughlab/parallel.hpp"
#include "roughlab/solvers.hpp"
#include "roughlab/vector_fields.hpp"

namespace roughlab {

/// Gram matrix of the first variations against the mode directions at one
/// time, with its spectrum.
struct MalliavinMatrix {
  Eigen::MatrixXd C;  // e x e, symmetric PSD
  int N = 0;
  Eigen::VectorXd eigenvalues;  // ascending
  double t = 0.0;

  double lambda_min() const { return eigenvalues[0]; }
};

/// First variations at grid index `at` against every mode direction (i, j)
/// with i < N, as columns ordered i * d + j. Column (i,j) is the
/// variation-of-constants value J_t int_0^t J_s^{-1} sigma(y_s) d(h_i e_j)_s;
/// the per-interval Simpson integrals of the kernel are shared across
/// directions, which is the same quadrature as duhamel_first_variation.
inline Eigen::MatrixXd first_variation_matrix(const JacobianFlow& flow, const KLBasis& basis, int N, int at) {
  if (N < 1 || N > basis.n_max()) throw std::invalid_argument("first_variation_matrix: N out of range");
  if (!(basis.grid == flow.grid)) throw std::invalid_argument("first_variation_matrix: grid mismatch");
  if (at < 1 || at > flow.grid.intervals) throw std::invalid_argument("first_variation_matrix: index out of range");
  const int d = static_cast<int>(flow.kernel[0][0].cols());
  const int e = static_cast<int>(flow.J[0].rows());
  const double dt = flow.grid.dt();
  const int n = flow.substeps;
  const double sub = dt / n;
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(e, N * d);
  for (int k = 0; k < at; ++k) {
    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(e, d);
    for (int m = 0; m <= n; ++m) {
      double w = (m == 0 || m == n) ? 1.0 : (m % 2 == 1 ? 4.0 : 2.0);
      Q += w * flow.kernel[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)];
    }
    Q *= sub / 3.0;
    for (int i = 0; i < N; ++i) {
      double rate = (basis.basis_paths(k + 1, i) - basis.basis_paths(k, i)) / dt;
      if (rate != 0.0) S.middleCols(i * d, d) += rate * Q;
    }
  }
  return flow.J[static_cast<std::size_t>(at)] * S;
}

/// Covariance of the solution derivative at the skeleton control h:
/// C = sum over modes i <= N and components j of the outer square of the
/// first variation in direction h_i e_j at time t.
inline MalliavinMatrix skeleton_malliavin(const CameronMartinElement& h, const KLBasis& basis, int N,
                                          const VectorFieldSystem& vf, const Eigen::VectorXd& a, double t,
                                          int substeps = 8) {
  if (h.basis == nullptr) throw std::invalid_argument("skeleton_malliavin: control has no basis");
  if (!(h.basis->grid == basis.grid) || h.basis->d != basis.d)
    throw std::invalid_argument("skeleton_malliavin: control basis does not match");
  if (basis.d != vf.d) throw std::invalid_argument("skeleton_malliavin: driver dimension mismatch");
  const int at = basis.grid.index_of(t);
  if (at < 1) throw std::invalid_argument("skeleton_malliavin: t must be positive");
  JacobianFlow flow = jacobian_flow(h.realization, vf, a, substeps);
  Eigen::MatrixXd G = first_variation_matrix(flow, basis, N, at);
  MalliavinMatrix out;
  out.C = G * G.transpose();
  out.C = 0.5 * (out.C + out.C.transpose()).eval();
  out.N = N;
  out.t = t;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(out.C);
  if (es.info() != Eigen::Success) throw numerical_error("skeleton_malliavin: eigendecomposition failed");
  out.eigenvalues = es.eigenvalues();
  return out;
}

/// Empirical distribution of the smallest covariance eigenvalue over sampled
/// drivers. Finite-truncation, finite-grid evidence only: a diagnostic for
/// the non-degeneracy hypothesis, never a proof of it.
struct SpectrumStatistics {
  double t = 0.0;
  int N = 0;
  int n_samples = 0;
  std::uint64_t seed = 0;
  std::vector<double> lambda_min;            // per sample, sample order
  std::vector<double> quantiles;             // at 0, 0.25, 0.5, 0.75, 1
  std::vector<std::pair<double, double>> tail;  // (tau, fraction below tau)
};

inline SpectrumStatistics sampled_malliavin_spectrum(const TimeGrid& grid, double H, const VectorFieldSystem& vf,
                                                     const Eigen::VectorXd& a, double t, int N, int n_samples,
                                                     std::uint64_t seed, int workers = 1, int substeps = 4,
                                                     const std::vector<double>& tau_grid = {1e-10, 1e-8, 1e-6,
                                                                                            1e-4}) {
  if (n_samples < 1) throw std::invalid_argument("sampled_malliavin_spectrum: need n_samples >= 1");
  const int at = grid.index_of(t);
  if (at < 1) throw std::invalid_argument("sampled_malliavin_spectrum: t must be positive");
  KLBasis basis = build_kl_basis(grid, H, vf.d);
  if (N < 1 || N > basis.n_max()) throw std::invalid_argument("sampled_malliavin_spectrum: N out of range");
  std::vector<GridPath> w = sample_paths(grid, H, n_samples, seed, vf.d, workers);

  SpectrumStatistics out;
  out.t = t;
  out.N = N;
  out.n_samples = n_samples;
  out.seed = seed;
  out.lambda_min.assign(static_cast<std::size_t>(n_samples), 0.0);
  parallel_for(static_cast<std::size_t>(n_samples), workers, [&](std::size_t s) {
    auto [wn, rest] = project(w[s], basis, N);
    (void)rest;
    Eigen::MatrixXd C = Eigen::MatrixXd::Zero(vf.e, vf.e);
    for (int i = 0; i < N; ++i)
      for (int j = 0; j < vf.d; ++j) {
        VariationBundle vb = solve_variation(wn.realization, basis.direction(i, j), vf, a, substeps);
        Eigen::VectorXd v = vb.xi1.row(at).transpose();
        C += v * v.transpose();
      }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(C);
    out.lambda_min[s] = es.eigenvalues()(0);
  });

  std::vector<double> sorted = out.lambda_min;
  std::sort(sorted.begin(), sorted.end());
  auto q = [&](double f) {
    double pos = f * (static_cast<double>(sorted.size()) - 1.0);
    return sorted[static_cast<std::size_t>(std::lround(pos))];
  };
  out.quantiles = {q(0.0), q(0.25), q(0.5), q(0.75), q(1.0)};
  for (double tau : tau_grid) {
    auto below = std::lower_bound(sorted.begin(), sorted.end(), tau) - sorted.begin();
    out.tail.emplace_back(tau, static_cast<double>(below) / static_cast<double>(n_samples));
  }
  return out;
}

}  // namespace roughlab
