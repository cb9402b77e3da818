#include <gtest/gtest.h>

#include <cmath>

#include <roughlab/fbm.hpp>
#include <roughlab/kl.hpp>
#include <roughlab/rng.hpp>

#include "test_util.hpp"

using namespace roughlab;

TEST(Covariance, PointValues) {
  // Brownian case reduces to min(s, t).
  EXPECT_NEAR(fbm_covariance(0.3, 0.7, 0.5), 0.3, 1e-15);
  EXPECT_NEAR(fbm_covariance(0.9, 0.2, 0.5), 0.2, 1e-15);
  // Hand-evaluated at H = 0.4.
  EXPECT_NEAR(fbm_covariance(0.3, 0.7, 0.4), 0.32649338200964534, 1e-12);
  // Variance on the diagonal is t^{2H}.
  for (double H : {0.3, 0.4, 0.5})
    for (double t : {0.25, 0.5, 1.0, 1.75}) EXPECT_NEAR(fbm_covariance(t, t, H), std::pow(t, 2.0 * H), 1e-14);
  EXPECT_NEAR(fbm_covariance(0.5, 0.5, 0.3), 0.6597539553864471, 1e-12);
  // Symmetry.
  EXPECT_DOUBLE_EQ(fbm_covariance(0.2, 0.9, 0.35), fbm_covariance(0.9, 0.2, 0.35));
}

TEST(Covariance, GridMatrixIsPSD) {
  for (double H : {0.28, 0.4, 0.5}) {
    TimeGrid grid(1.5, 24);
    Eigen::MatrixXd R = fbm_grid_covariance(grid, H);
    ASSERT_EQ(R.rows(), 24);
    EXPECT_NEAR((R - R.transpose()).norm(), 0.0, 1e-14);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(R);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-12 * R.trace());
    // Entries match the kernel at grid points t_1..t_K.
    EXPECT_NEAR(R(2, 5), fbm_covariance(grid.point(3), grid.point(6), H), 1e-15);
  }
}

TEST(Covariance, FactorReproducesMatrix) {
  TimeGrid grid(1.0, 16);
  Eigen::MatrixXd R = fbm_grid_covariance(grid, 0.35);
  Eigen::MatrixXd L = covariance_factor(R);
  EXPECT_LT((L * L.transpose() - R).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Sampling, DeterministicAndWorkerInvariant) {
  TimeGrid grid(1.0, 16);
  auto a = sample_paths(grid, 0.4, 5, 77, 2, 1);
  auto b = sample_paths(grid, 0.4, 5, 77, 2, 1);
  auto c = sample_paths(grid, 0.4, 5, 77, 2, 4);
  ASSERT_EQ(a.size(), 5u);
  for (int s = 0; s < 5; ++s) {
    EXPECT_EQ(a[s].values, b[s].values);
    EXPECT_EQ(a[s].values, c[s].values);
    EXPECT_EQ(a[s].values.row(0).norm(), 0.0);
  }
  auto d = sample_paths(grid, 0.4, 5, 78, 2, 1);
  EXPECT_GT((a[0].values - d[0].values).norm(), 1e-8);
  // Per-sample streams: sample s does not depend on the batch size.
  auto first = sample_paths(grid, 0.4, 3, 77, 2, 1);
  EXPECT_EQ(first[2].values, a[2].values);
}

TEST(Sampling, BrownianIncrementStatistics) {
  TimeGrid grid(1.0, 8);
  const int n = 4000;
  auto paths = sample_paths(grid, 0.5, n, 11, 1, 1);
  double dt = grid.dt();
  // Variance of one increment and covariance of disjoint increments.
  double var = 0.0, cov = 0.0;
  for (const auto& w : paths) {
    double d2 = w.values(3, 0) - w.values(2, 0);
    double d5 = w.values(6, 0) - w.values(5, 0);
    var += d2 * d2;
    cov += d2 * d5;
  }
  var /= n;
  cov /= n;
  double se_var = dt * std::sqrt(2.0 / n);
  EXPECT_NEAR(var, dt, 4.0 * se_var);
  EXPECT_NEAR(cov, 0.0, 4.0 * dt / std::sqrt(static_cast<double>(n)));
}

TEST(Sampling, MatchesKernelAtPairs) {
  TimeGrid grid(1.0, 8);
  const int n = 6000;
  const double H = 0.35;
  auto paths = sample_paths(grid, H, n, 5, 1, 1);
  double acc = 0.0, acc2 = 0.0;
  for (const auto& w : paths) {
    double prod = w.values(2, 0) * w.values(6, 0);
    acc += prod;
    acc2 += prod * prod;
  }
  double mean = acc / n;
  double se = std::sqrt((acc2 / n - mean * mean) / n);
  EXPECT_NEAR(mean, fbm_covariance(grid.point(2), grid.point(6), H), 4.0 * se);
}

TEST(KL, BrownianSpectrumOracle) {
  // Eigenvalues of the grid covariance approximate K/T times the integral
  // operator spectrum lambda_k = ((k - 1/2) pi)^{-2}.
  const int K = 256;
  TimeGrid grid(1.0, K);
  KLBasis basis = build_kl_basis(grid, 0.5, 1);
  ASSERT_GE(basis.n_max(), 5);
  for (int k = 1; k <= 5; ++k) {
    double lam = 1.0 / std::pow((k - 0.5) * M_PI, 2.0);
    EXPECT_NEAR(basis.eigenvalues[static_cast<std::size_t>(k - 1)], K * lam, 0.01 * K * lam);
  }
  // First basis path has the sine profile with Cameron-Martin scaling:
  // |h_1(T)| = sqrt(lambda_1) * sqrt(2).
  double h1T = std::abs(basis.basis_paths(K, 0));
  EXPECT_NEAR(h1T, 0.90031631615710617, 5e-3);
  // Basis paths start at zero.
  EXPECT_EQ(basis.basis_paths.row(0).norm(), 0.0);
  // Eigenvalues are sorted nonincreasing.
  for (std::size_t i = 1; i < basis.eigenvalues.size(); ++i)
    EXPECT_LE(basis.eigenvalues[i], basis.eigenvalues[i - 1] + 1e-15);
}

TEST(KL, ReproducingKernelIdentityAtFullTruncation) {
  for (double H : {0.3, 0.4, 0.5}) {
    TimeGrid grid(1.0, 32);
    KLBasis basis = build_kl_basis(grid, H, 1);
    const int N = basis.n_max();
    double worst = 0.0;
    for (int k = 1; k <= 32; ++k) {
      for (int l = 1; l <= 32; ++l) {
        double acc = 0.0;
        for (int i = 0; i < N; ++i) acc += basis.basis_paths(k, i) * basis.basis_paths(l, i);
        worst = std::max(worst, std::abs(acc - fbm_covariance(grid.point(k), grid.point(l), H)));
      }
    }
    EXPECT_LT(worst, 1e-10);
    // Diagonal: sum_i h_i(t)^2 = t^{2H}.
    for (int k = 1; k <= 32; ++k) {
      double acc = 0.0;
      for (int i = 0; i < N; ++i) acc += basis.basis_paths(k, i) * basis.basis_paths(k, i);
      EXPECT_NEAR(acc, std::pow(grid.point(k), 2.0 * H), 1e-10);
    }
  }
}

TEST(KL, ProjectionRoundTrip) {
  TimeGrid grid(1.0, 24);
  KLBasis basis = build_kl_basis(grid, 0.4, 2);
  GridPath w = sample_paths(grid, 0.4, 1, 42, 2, 1)[0];

  // Full truncation reproduces the path.
  auto [full, rest_full] = project(w, basis, basis.n_max());
  EXPECT_LT(rest_full.values.cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT((full.realization.values - w.values).cwiseAbs().maxCoeff(), 1e-8);

  // Partial truncation: exact additive split.
  auto [part, rest] = project(w, basis, 3);
  EXPECT_LT((part.realization.values + rest.values - w.values).cwiseAbs().maxCoeff(), 1e-12);
  ASSERT_EQ(part.coefficients.rows(), 3);
  ASSERT_EQ(part.coefficients.cols(), 2);

  // Coefficients of a pure basis combination come back exactly.
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(4, 2);
  c << 1.0, -0.5, 0.25, 2.0, 0.0, 1.5, -1.0, 0.75;
  GridPath combo = basis.realize(c);
  Eigen::MatrixXd back = basis.coefficients(combo);
  EXPECT_LT((back.topRows(4) - c).cwiseAbs().maxCoeff(), 1e-8);
  EXPECT_LT(back.bottomRows(back.rows() - 4).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(KL, NormAndDirections) {
  TimeGrid grid(1.0, 16);
  KLBasis basis = build_kl_basis(grid, 0.45, 2);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(2, 2);
  c(0, 0) = 3.0;
  c(1, 1) = 4.0;
  CameronMartinElement h(basis, c);
  EXPECT_NEAR(cm_norm(h), 5.0, 1e-12);

  // direction(i, j) realizes mode i in driver component j only.
  GridPath dir = basis.direction(1, 0);
  ASSERT_EQ(dir.dimension(), 2);
  EXPECT_EQ(dir.values.col(1).norm(), 0.0);
  for (int k = 0; k <= 16; ++k) EXPECT_DOUBLE_EQ(dir.values(k, 0), basis.basis_paths(k, 1));
}

TEST(KL, CoefficientsOfSamplesAreStandardGaussian) {
  // The dual pairing applied to samples recovers iid standard normals; this
  // couples the sampler and the spectral basis through an independent
  // statistical oracle.
  TimeGrid grid(1.0, 16);
  const double H = 0.3;
  KLBasis basis = build_kl_basis(grid, H, 1);
  const int n = 3000;
  auto paths = sample_paths(grid, H, n, 9, 1, 1);
  double m1 = 0.0, v1 = 0.0, cross = 0.0, m2 = 0.0, v2 = 0.0;
  for (const auto& w : paths) {
    Eigen::MatrixXd xi = basis.coefficients(w);
    m1 += xi(0, 0);
    v1 += xi(0, 0) * xi(0, 0);
    m2 += xi(1, 0);
    v2 += xi(1, 0) * xi(1, 0);
    cross += xi(0, 0) * xi(1, 0);
  }
  m1 /= n;
  v1 = v1 / n - m1 * m1;
  m2 /= n;
  v2 = v2 / n - m2 * m2;
  cross = cross / n - m1 * m2;
  double se_mean = 1.0 / std::sqrt(static_cast<double>(n));
  EXPECT_NEAR(m1, 0.0, 4.0 * se_mean);
  EXPECT_NEAR(m2, 0.0, 4.0 * se_mean);
  EXPECT_NEAR(v1, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(v2, 1.0, 4.0 * std::sqrt(2.0 / n));
  EXPECT_NEAR(cross, 0.0, 4.0 * se_mean);
}

TEST(KL, ProjectRejectsBadTruncation) {
  TimeGrid grid(1.0, 8);
  KLBasis basis = build_kl_basis(grid, 0.4, 1);
  GridPath w = sample_paths(grid, 0.4, 1, 1, 1, 1)[0];
  EXPECT_THROW(project(w, basis, 0), std::invalid_argument);
  EXPECT_THROW(project(w, basis, basis.n_max() + 1), std::invalid_argument);
}

TEST(Rng, StreamsAndDeterminism) {
  NormalSampler g1(stream_seed(7, 0));
  NormalSampler g2(stream_seed(7, 0));
  for (int i = 0; i < 10; ++i) EXPECT_DOUBLE_EQ(g1(), g2());
  NormalSampler g3(stream_seed(7, 1));
  bool differs = false;
  NormalSampler g4(stream_seed(7, 0));
  for (int i = 0; i < 10; ++i)
    if (g3() != g4()) differs = true;
  EXPECT_TRUE(differs);
  NormalSampler u(3);
  for (int i = 0; i < 100; ++i) {
    double x = u.uniform01();
    EXPECT_GE(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}
