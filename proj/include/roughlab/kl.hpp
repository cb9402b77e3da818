#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "roughlab/errors.hpp"
#include "roughlab/fbm.hpp"
#include "roughlab/grid.hpp"

namespace roughlab {

/// Grid Karhunen-Loeve eigensystem of the driver covariance. Mode i carries an
/// eigenvalue lam_i of the grid covariance matrix and the scalar basis path
/// h_i(t_k) = sqrt(lam_i) u_i[k]; the Cameron-Martin basis elements are
/// h_{i,j} = h_i e_j, living in driver component j only. The dual pairing
/// <h_i, w> = u_i^T w / sqrt(lam_i) turns samples into i.i.d. standard normals.
struct KLBasis {
  TimeGrid grid;
  double H = 0.5;
  int d = 1;
  Eigen::VectorXd eigenvalues;   // nonincreasing, size N_max
  Eigen::MatrixXd basis_paths;   // (K+1) x N_max, column i = h_i at grid points
  Eigen::MatrixXd dual_vectors;  // K x N_max, column i = u_i / sqrt(lam_i)

  int n_max() const { return static_cast<int>(eigenvalues.size()); }

  /// Scalar coefficients <h_i, w_j> for one grid path, all modes x components.
  Eigen::MatrixXd coefficients(const GridPath& w) const {
    if (!(w.grid == grid) || w.dimension() != d) throw std::invalid_argument("KLBasis: path does not match basis");
    return dual_vectors.transpose() * w.values.bottomRows(grid.intervals);
  }

  /// Grid realization of sum_{i<=N, j} c(i,j) h_i e_j.
  GridPath realize(const Eigen::MatrixXd& coeffs) const {
    if (coeffs.rows() > n_max() || coeffs.cols() != d) throw std::invalid_argument("KLBasis: bad coefficient shape");
    Eigen::MatrixXd vals = basis_paths.leftCols(coeffs.rows()) * coeffs;
    return GridPath(grid, std::move(vals));
  }

  /// The direction path h_{i,j} (mode index i, component j), as a GridPath.
  GridPath direction(int i, int j) const {
    if (i < 0 || i >= n_max() || j < 0 || j >= d) throw std::invalid_argument("KLBasis: mode index out of range");
    Eigen::MatrixXd vals = Eigen::MatrixXd::Zero(grid.num_points(), d);
    vals.col(j) = basis_paths.col(i);
    return GridPath(grid, std::move(vals));
  }
};

/// An element of the Cameron-Martin space expressed in the first N KL modes.
struct CameronMartinElement {
  const KLBasis* basis = nullptr;
  Eigen::MatrixXd coefficients;  // N x d
  GridPath realization;

  CameronMartinElement() = default;
  CameronMartinElement(const KLBasis& b, Eigen::MatrixXd coeffs)
      : basis(&b), coefficients(std::move(coeffs)), realization(b.realize(coefficients)) {}
};

/// H-norm: Euclidean norm of the KL coefficient array.
inline double cm_norm(const CameronMartinElement& h) { return h.coefficients.norm(); }

/// Eigensystem of the grid covariance, modes sorted by decreasing eigenvalue.
/// Modes with eigenvalue below 1e-14 * lambda_max are dropped.
inline KLBasis build_kl_basis(const TimeGrid& grid, double H, int d) {
  if (d < 1) throw std::invalid_argument("build_kl_basis: need d >= 1");
  const int K = grid.intervals;
  Eigen::MatrixXd R = fbm_grid_covariance(grid, H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
  if (es.info() != Eigen::Success) throw numerical_error("build_kl_basis: eigendecomposition failed");
  // Eigen sorts ascending; flip to nonincreasing.
  Eigen::VectorXd lam(K);
  Eigen::MatrixXd U(K, K);
  for (int i = 0; i < K; ++i) {
    lam[i] = es.eigenvalues()[K - 1 - i];
    U.col(i) = es.eigenvectors().col(K - 1 - i);
  }
  double lmax = lam[0];
  if (!(lmax > 0.0)) throw numerical_error("build_kl_basis: covariance has no positive eigenvalues");
  int n = 0;
  while (n < K && lam[n] > 1e-14 * lmax) ++n;

  KLBasis basis;
  basis.grid = grid;
  basis.H = H;
  basis.d = d;
  basis.eigenvalues = lam.head(n);
  basis.basis_paths = Eigen::MatrixXd::Zero(K + 1, n);
  basis.dual_vectors = Eigen::MatrixXd(K, n);
  for (int i = 0; i < n; ++i) {
    double s = std::sqrt(lam[i]);
    basis.basis_paths.col(i).tail(K) = s * U.col(i);
    basis.dual_vectors.col(i) = U.col(i) / s;
  }
  return basis;
}

/// KL splitting w = w^[N] + w^*N: the first-N-modes projection as a
/// CameronMartinElement plus the grid remainder.
inline std::pair<CameronMartinElement, GridPath> project(const GridPath& w, const KLBasis& basis, int N) {
  if (N < 1 || N > basis.n_max()) throw std::invalid_argument("project: N out of range");
  Eigen::MatrixXd coeffs = basis.coefficients(w).topRows(N);
  CameronMartinElement wn(basis, std::move(coeffs));
  GridPath remainder = w - wn.realization;
  return {std::move(wn), std::move(remainder)};
}

}  // namespace roughlab
