#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>

#include "roughlab/errors.hpp"

namespace roughlab {

/// Uniform grid 0 = t_0 < t_1 < ... < t_K = T.
struct TimeGrid {
  double horizon = 1.0;
  int intervals = 2;

  TimeGrid() = default;
  TimeGrid(double T, int K) : horizon(T), intervals(K) {
    if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    if (K < 1) throw std::invalid_argument("TimeGrid: need at least 1 interval");
  }

  double dt() const { return horizon / intervals; }
  double point(int k) const { return horizon * static_cast<double>(k) / intervals; }
  int num_points() const { return intervals + 1; }

  /// Index of the grid point matching time t; t must lie on the grid.
  int index_of(double t, double rel_tol = 1e-9) const {
    double x = t / dt();
    int k = static_cast<int>(std::lround(x));
    if (k < 0 || k > intervals || std::abs(t - point(k)) > rel_tol * horizon)
      throw std::invalid_argument("TimeGrid: time does not lie on the grid");
    return k;
  }

  bool operator==(const TimeGrid& o) const {
    return intervals == o.intervals && horizon == o.horizon;
  }
};

/// A d-dimensional continuous path sampled at the grid points, starting at 0.
/// Interpreted as piecewise linear between grid points.
struct GridPath {
  TimeGrid grid;
  Eigen::MatrixXd values;  // (K+1) x d, row k = path value at t_k

  GridPath() = default;
  GridPath(const TimeGrid& g, Eigen::MatrixXd v) : grid(g), values(std::move(v)) {
    if (values.rows() != grid.num_points())
      throw std::invalid_argument("GridPath: value count does not match grid");
    if (values.cols() < 1) throw std::invalid_argument("GridPath: dimension must be >= 1");
    if (!values.allFinite()) throw std::invalid_argument("GridPath: non-finite entries");
    if (values.row(0).cwiseAbs().maxCoeff() > 0.0)
      throw std::invalid_argument("GridPath: paths start at 0");
  }

  static GridPath zero(const TimeGrid& g, int d) {
    return GridPath(g, Eigen::MatrixXd::Zero(g.num_points(), d));
  }

  int dimension() const { return static_cast<int>(values.cols()); }

  Eigen::VectorXd increment(int k) const { return (values.row(k + 1) - values.row(k)).transpose(); }

  GridPath operator+(const GridPath& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("GridPath: grid mismatch");
    return GridPath(grid, values + o.values);
  }
  GridPath operator-(const GridPath& o) const {
    if (!(grid == o.grid)) throw std::invalid_argument("GridPath: grid mismatch");
    return GridPath(grid, values - o.values);
  }
  GridPath operator*(double s) const { return GridPath(grid, values * s); }
  GridPath operator-() const { return GridPath(grid, -values); }

  /// Piecewise-linear refinement onto a grid with an integer multiple of intervals.
  GridPath refine(const TimeGrid& fine) const {
    if (fine.horizon != grid.horizon || fine.intervals % grid.intervals != 0)
      throw std::invalid_argument("GridPath: refinement grid must subdivide the original");
    int m = fine.intervals / grid.intervals;
    Eigen::MatrixXd out(fine.num_points(), values.cols());
    for (int k = 0; k < grid.intervals; ++k) {
      for (int j = 0; j < m; ++j) {
        double a = static_cast<double>(j) / m;
        out.row(k * m + j) = (1.0 - a) * values.row(k) + a * values.row(k + 1);
      }
    }
    out.row(fine.intervals) = values.row(grid.intervals);
    return GridPath(fine, std::move(out));
  }
};

}  // namespace roughlab
