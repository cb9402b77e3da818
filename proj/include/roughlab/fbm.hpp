#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "roughlab/errors.hpp"
#include "roughlab/grid.hpp"
#include "roughlab/parallel.hpp"
#include "roughlab/rng.hpp"

namespace roughlab {

/// Fractional Brownian covariance R(s,t) = (s^2H + t^2H - |t-s|^2H)/2.
inline double fbm_covariance(double s, double t, double H) {
  if (!(H > 0.0) || !(H < 1.0)) throw std::invalid_argument("fbm_covariance: H must lie in (0,1)");
  if (s < 0.0 || t < 0.0) throw std::invalid_argument("fbm_covariance: times must be nonnegative");
  double h2 = 2.0 * H;
  return 0.5 * (std::pow(s, h2) + std::pow(t, h2) - std::pow(std::abs(t - s), h2));
}

/// Covariance matrix of (w_{t_1}, ..., w_{t_K}) on the grid (t_0 = 0 is not random).
inline Eigen::MatrixXd fbm_grid_covariance(const TimeGrid& grid, double H) {
  const int K = grid.intervals;
  Eigen::MatrixXd R(K, K);
  for (int i = 0; i < K; ++i)
    for (int j = 0; j <= i; ++j) {
      double v = fbm_covariance(grid.point(i + 1), grid.point(j + 1), H);
      R(i, j) = v;
      R(j, i) = v;
    }
  return R;
}

/// Symmetric factor F with F F^T = R, via spectral decomposition.
/// Throws numerical_error when R fails positive semidefiniteness beyond jitter.
inline Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& R) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  if (es.info() != Eigen::Success) throw numerical_error("covariance_factor: eigendecomposition failed");
  const Eigen::VectorXd& lam = es.eigenvalues();
  double lmax = lam.maxCoeff();
  double jitter = 1e-12 * R.trace();
  if (lam.minCoeff() < -jitter)
    throw numerical_error("covariance_factor: covariance not positive semidefinite, smallest eigenvalue " +
                          std::to_string(lam.minCoeff()));
  Eigen::VectorXd sq = lam.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * sq.asDiagonal() * es.eigenvectors().transpose();
}

/// n i.i.d. d-dimensional fBM sample paths on the grid. Deterministic in
/// (grid, H, n, seed, d) and independent of the worker count: sample i draws
/// from its own stream keyed by (seed, i).
inline std::vector<GridPath> sample_paths(const TimeGrid& grid, double H, int n, std::uint64_t seed, int d,
                                          int workers = 1) {
  if (n < 1) throw std::invalid_argument("sample_paths: need n >= 1");
  if (d < 1) throw std::invalid_argument("sample_paths: need d >= 1");
  const int K = grid.intervals;
  const Eigen::MatrixXd F = covariance_factor(fbm_grid_covariance(grid, H));
  std::vector<GridPath> out(static_cast<std::size_t>(n));
  parallel_for(static_cast<std::size_t>(n), workers, [&](std::size_t i) {
    NormalSampler normal(stream_seed(seed, i));
    Eigen::MatrixXd z(K, d);
    for (int c = 0; c < d; ++c)
      for (int r = 0; r < K; ++r) z(r, c) = normal();
    Eigen::MatrixXd vals(K + 1, d);
    vals.row(0).setZero();
    vals.bottomRows(K) = F * z;
    out[i] = GridPath(grid, std::move(vals));
  });
  return out;
}

}  // namespace roughlab
