#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "roughlab/grid.hpp"
#include "roughlab/tensor.hpp"

namespace roughlab {

/// Levels 1..L of iterated-integral increments over consecutive grid intervals.
/// Increments over unions of intervals are reconstructed with the Chen product.
struct GeometricRoughPath {
  TimeGrid grid;
  int level = 2;
  double p = 2.1;
  std::vector<IncrementTriple> intervals;  // one per grid interval

  int dimension() const { return intervals.empty() ? 0 : intervals.front().dim(); }

  /// Increment over [t_a, t_b] by composing the interval atoms.
  IncrementTriple increment(int a, int b) const {
    if (a < 0 || b > grid.intervals || a > b) throw std::invalid_argument("GeometricRoughPath: bad interval");
    IncrementTriple acc(level, dimension());
    for (int k = a; k < b; ++k) acc = chen_compose(acc, intervals[k]);
    return acc;
  }
};

inline GeometricRoughPath zero_rough_path(const TimeGrid& grid, int level, int d, double p = 0.0) {
  GeometricRoughPath x;
  x.grid = grid;
  x.level = level;
  x.p = (p > 0.0) ? p : (level == 2 ? 2.1 : 3.1);
  x.intervals.assign(static_cast<std::size_t>(grid.intervals), IncrementTriple(level, d));
  return x;
}

/// Signature lift of a piecewise-linear grid path: per interval, the exponential
/// of the segment displacement; exact up to rounding.
inline GeometricRoughPath lift(const GridPath& h, int level, double p = 0.0) {
  if (level != 2 && level != 3) throw std::invalid_argument("lift: level must be 2 or 3");
  GeometricRoughPath x;
  x.grid = h.grid;
  x.level = level;
  x.p = (p > 0.0) ? p : (level == 2 ? 2.1 : 3.1);
  x.intervals.reserve(static_cast<std::size_t>(h.grid.intervals));
  for (int k = 0; k < h.grid.intervals; ++k)
    x.intervals.push_back(IncrementTriple::segment(h.increment(k), level));
  return x;
}

/// Young translation T_h x. Per interval the increment is translated in
/// log-coordinates: the segment displacement of h is added to the level-1 part
/// of the log-signature and the result re-exponentiated. For lifted
/// piecewise-linear paths this realizes T_h(L(k)) = L(h+k) exactly on the grid.
inline GeometricRoughPath young_translate(const GeometricRoughPath& x, const GridPath& h) {
  if (!(h.grid == x.grid)) throw std::invalid_argument("young_translate: grid mismatch");
  if (h.dimension() != x.dimension()) throw std::invalid_argument("young_translate: dimension mismatch");
  GeometricRoughPath y = x;
  for (int k = 0; k < x.grid.intervals; ++k) {
    IncrementTriple l = tensor_log(x.intervals[static_cast<std::size_t>(k)]);
    l.x1 += h.increment(k);
    y.intervals[static_cast<std::size_t>(k)] = tensor_exp(l);
  }
  return y;
}

namespace detail {

/// p/i-variation over partitions with points on the grid, by O(K^2) dynamic
/// programming. `edge_power` returns |increment over [t_a,t_b]|^(p/i).
template <typename EdgePower>
double pvar_dp(int K, const EdgePower& edge_power) {
  std::vector<double> best(static_cast<std::size_t>(K) + 1, 0.0);
  for (int b = 1; b <= K; ++b) {
    double v = -1.0;
    for (int a = 0; a < b; ++a) v = std::max(v, best[static_cast<std::size_t>(a)] + edge_power(a, b));
    best[static_cast<std::size_t>(b)] = v;
  }
  return best[static_cast<std::size_t>(K)];
}

}  // namespace detail

/// Grid p-variation of level i: the exact supremum over partitions whose points
/// lie on the grid (a lower bound of the continuum norm).
inline double p_variation(const GeometricRoughPath& x, int level_index, double p) {
  if (level_index < 1 || level_index > x.level) throw std::invalid_argument("p_variation: level index out of range");
  if (p < static_cast<double>(level_index)) throw std::invalid_argument("p_variation: need p >= level index");
  const int K = x.grid.intervals;
  const double expo = p / level_index;
  // Row-by-row increments: for fixed a, extend over b by one Chen step each.
  std::vector<std::vector<double>> pw(static_cast<std::size_t>(K) + 1,
                                      std::vector<double>(static_cast<std::size_t>(K) + 1, 0.0));
  for (int a = 0; a < K; ++a) {
    IncrementTriple acc(x.level, x.dimension());
    for (int b = a + 1; b <= K; ++b) {
      acc = chen_compose(acc, x.intervals[static_cast<std::size_t>(b - 1)]);
      pw[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = std::pow(level_norm(acc, level_index), expo);
    }
  }
  double sup = detail::pvar_dp(K, [&](int a, int b) { return pw[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; });
  return std::pow(sup, static_cast<double>(level_index) / p);
}

/// Level-i p/i-variation distance between two rough paths on the same grid:
/// the variation functional applied to the difference of level-i increments.
inline double p_variation_distance(const GeometricRoughPath& x, const GeometricRoughPath& y, int level_index,
                                   double p) {
  if (!(x.grid == y.grid)) throw std::invalid_argument("p_variation_distance: grid mismatch");
  if (x.level != y.level || x.dimension() != y.dimension())
    throw std::invalid_argument("p_variation_distance: level or dimension mismatch");
  if (level_index < 1 || level_index > x.level)
    throw std::invalid_argument("p_variation_distance: level index out of range");
  const int K = x.grid.intervals;
  const double expo = p / level_index;
  std::vector<std::vector<double>> pw(static_cast<std::size_t>(K) + 1,
                                      std::vector<double>(static_cast<std::size_t>(K) + 1, 0.0));
  for (int a = 0; a < K; ++a) {
    IncrementTriple ax(x.level, x.dimension());
    IncrementTriple ay(y.level, y.dimension());
    for (int b = a + 1; b <= K; ++b) {
      ax = chen_compose(ax, x.intervals[static_cast<std::size_t>(b - 1)]);
      ay = chen_compose(ay, y.intervals[static_cast<std::size_t>(b - 1)]);
      double diff = 0.0;
      switch (level_index) {
        case 1: diff = (ax.x1 - ay.x1).norm(); break;
        case 2: diff = (ax.x2 - ay.x2).norm(); break;
        default: diff = (ax.x3 - ay.x3).norm(); break;
      }
      pw[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)] = std::pow(diff, expo);
    }
  }
  double sup = detail::pvar_dp(K, [&](int a, int b) { return pw[static_cast<std::size_t>(a)][static_cast<std::size_t>(b)]; });
  return std::pow(sup, static_cast<double>(level_index) / p);
}

/// Columnar CSV: one row per interval, flattened level entries.
inline void write_rough_path_csv(std::ostream& os, const GeometricRoughPath& x) {
  const int d = x.dimension();
  os << "interval";
  for (int i = 0; i < d; ++i) os << ",x1_" << i;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) os << ",x2_" << i << "_" << j;
  if (x.level >= 3)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) os << ",x3_" << i << "_" << j << "_" << k;
  os << "\n";
  char buf[32];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << ',' << buf;
  };
  for (int kk = 0; kk < x.grid.intervals; ++kk) {
    const auto& t = x.intervals[static_cast<std::size_t>(kk)];
    os << kk;
    for (int i = 0; i < d; ++i) put(t.x1[i]);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) put(t.x2(i, j));
    if (x.level >= 3)
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
          for (int k = 0; k < d; ++k) put(t.x3(i, j, k));
    os << "\n";
  }
}

}  // namespace roughlab
