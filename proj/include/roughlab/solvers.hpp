#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "roughlab/errors.hpp"
#include "roughlab/grid.hpp"
#include "roughlab/rough_path.hpp"
#include "roughlab/tensor.hpp"
#include "roughlab/vector_fields.hpp"

namespace roughlab {

// Escape past this radius means the truncated dynamics blew up numerically.
inline constexpr double kDivergenceRadius = 1e6;

/// States of a driven system at the grid points.
struct SolutionPath {
  TimeGrid grid;
  Eigen::MatrixXd states;  // (K+1) x e
  Eigen::VectorXd start;
  std::string method;  // young | rough-euler
  int substeps = 1;

  int dimension() const { return static_cast<int>(states.cols()); }
  Eigen::VectorXd state(int k) const { return states.row(k).transpose(); }
  Eigen::VectorXd terminal() const { return states.row(states.rows() - 1).transpose(); }
};

/// Solution together with first and second directional variations in a
/// direction l; both variations start at 0.
struct VariationBundle {
  TimeGrid grid;
  SolutionPath y;
  Eigen::MatrixXd xi1;  // (K+1) x e
  Eigen::MatrixXd xi2;  // (K+1) x e
  GridPath l;

  Eigen::VectorXd xi1_terminal() const { return xi1.row(xi1.rows() - 1).transpose(); }
  Eigen::VectorXd xi2_terminal() const { return xi2.row(xi2.rows() - 1).transpose(); }
};

/// Flow derivative in the starting point along a driven trajectory, with
/// inverses and an integrand record for variation-of-constants quadrature.
struct JacobianFlow {
  TimeGrid grid;
  Eigen::MatrixXd states;             // (K+1) x e, the underlying solution
  std::vector<Eigen::MatrixXd> J;     // K+1, J[0] = I
  std::vector<Eigen::MatrixXd> Jinv;  // K+1
  int substeps = 2;
  // kernel[k][n] = J(s)^{-1} sigma(y_s) at substep node n of interval k
  std::vector<std::vector<Eigen::MatrixXd>> kernel;
};

namespace detail {

template <class F>
inline Eigen::VectorXd rk4_step(const F& f, const Eigen::VectorXd& y, double dt) {
  Eigen::VectorXd k1 = f(y);
  Eigen::VectorXd k2 = f(y + (0.5 * dt) * k1);
  Eigen::VectorXd k3 = f(y + (0.5 * dt) * k2);
  Eigen::VectorXd k4 = f(y + dt * k3);
  return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline void check_state(const Eigen::VectorXd& y, double t, const char* who) {
  if (!y.allFinite() || y.norm() > kDivergenceRadius)
    throw divergence_error(std::string(who) + ": state escaped", t);
}

inline void check_young_args(const GridPath& h, const VectorFieldSystem& vf, const Eigen::VectorXd& a, int substeps) {
  if (h.dimension() != vf.d) throw std::invalid_argument("driver dimension does not match the field system");
  if (a.size() != vf.e) throw std::invalid_argument("start dimension does not match the field system");
  if (substeps < 1) throw std::invalid_argument("substeps must be >= 1");
}

}  // namespace detail

/// Controlled ODE dy = sigma(y) dh + b(y) dt for piecewise-linear h: per grid
/// interval the velocity is constant, so each interval is integrated with
/// `substeps` classical 4th-order steps.
inline SolutionPath solve_young(const GridPath& h, const VectorFieldSystem& vf, const Eigen::VectorXd& a,
                                int substeps) {
  detail::check_young_args(h, vf, a, substeps);
  const int K = h.grid.intervals;
  const double dt = h.grid.dt();
  SolutionPath out;
  out.grid = h.grid;
  out.start = a;
  out.method = "young";
  out.substeps = substeps;
  out.states.resize(K + 1, vf.e);
  Eigen::VectorXd y = a;
  out.states.row(0) = y.transpose();
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd v = h.increment(k) / dt;
    auto f = [&](const Eigen::VectorXd& s) { return Eigen::VectorXd(vf.sigma(s) * v + vf.drift(s)); };
    double sub = dt / substeps;
    for (int n = 0; n < substeps; ++n) y = detail::rk4_step(f, y, sub);
    detail::check_state(y, h.grid.point(k + 1), "solve_young");
    out.states.row(k + 1) = y.transpose();
  }
  return out;
}

/// Step-L Euler scheme: per interval the state advances by the level-1..L
/// action of the increment on the fields, plus drift and first-order mixed
/// drift corrections.
inline SolutionPath solve_rde(const GeometricRoughPath& x, const VectorFieldSystem& vf, const Eigen::VectorXd& a) {
  if (x.dimension() != vf.d) throw std::invalid_argument("driver dimension does not match the field system");
  if (a.size() != vf.e) throw std::invalid_argument("start dimension does not match the field system");
  const int K = x.grid.intervals;
  const double dt = x.grid.dt();
  SolutionPath out;
  out.grid = x.grid;
  out.start = a;
  out.method = "rough-euler";
  out.substeps = 1;
  out.states.resize(K + 1, vf.e);
  Eigen::VectorXd y = a;
  out.states.row(0) = y.transpose();
  std::vector<Eigen::MatrixXd> jac(vf.d);
  for (int k = 0; k < K; ++k) {
    const IncrementTriple& g = x.intervals[static_cast<std::size_t>(k)];
    Eigen::MatrixXd sig = vf.sigma(y);
    Eigen::VectorXd b = vf.drift(y);
    for (int j = 0; j < vf.d; ++j) jac[j] = vf.jac_sigma(y, j);

    Eigen::VectorXd step = sig * g.x1 + b * dt;
    for (int i = 0; i < vf.d; ++i)
      for (int j = 0; j < vf.d; ++j)
        if (g.x2(i, j) != 0.0) step += g.x2(i, j) * (jac[j] * sig.col(i));
    if (x.level >= 3) {
      for (int kk = 0; kk < vf.d; ++kk)
        for (int i = 0; i < vf.d; ++i)
          for (int j = 0; j < vf.d; ++j) {
            double w = g.x3(i, j, kk);
            if (w == 0.0) continue;
            step += w * (vf.hess_sigma_apply(y, kk, sig.col(i), sig.col(j)) + jac[kk] * (jac[j] * sig.col(i)));
          }
    }
    Eigen::VectorXd cross = vf.jac_drift(y) * (sig * g.x1);
    for (int j = 0; j < vf.d; ++j) cross += g.x1[j] * (jac[j] * b);
    step += (0.5 * dt) * cross;

    y += step;
    detail::check_state(y, x.grid.point(k + 1), "solve_rde");
    out.states.row(k + 1) = y.transpose();
  }
  return out;
}

namespace detail {

// Right-hand side of the coupled (y, xi1, xi2) system for constant driver
// velocities vh and vl over one segment.
inline Eigen::VectorXd variation_rhs(const VectorFieldSystem& vf, const Eigen::VectorXd& Y, const Eigen::VectorXd& vh,
                                     const Eigen::VectorXd& vl) {
  const int e = vf.e;
  Eigen::VectorXd y = Y.segment(0, e);
  Eigen::VectorXd xi1 = Y.segment(e, e);
  Eigen::VectorXd xi2 = Y.segment(2 * e, e);
  Eigen::MatrixXd sig = vf.sigma(y);
  Eigen::MatrixXd jb = vf.jac_drift(y);
  Eigen::VectorXd out(3 * e);
  out.segment(0, e) = sig * vh + vf.drift(y);
  Eigen::VectorXd d1 = jb * xi1 + sig * vl;
  Eigen::VectorXd d2 = jb * xi2 + vf.hess_drift_apply(y, xi1, xi1);
  for (int j = 0; j < vf.d; ++j) {
    Eigen::MatrixXd A = vf.jac_sigma(y, j);
    d1 += vh[j] * (A * xi1);
    d2 += vh[j] * (A * xi2 + vf.hess_sigma_apply(y, j, xi1, xi1)) + 2.0 * vl[j] * (A * xi1);
  }
  out.segment(e, e) = d1;
  out.segment(2 * e, e) = d2;
  return out;
}

}  // namespace detail

/// First and second variation along direction l for a Young driver: the
/// coupled system is integrated with the same per-segment scheme as
/// solve_young.
inline VariationBundle solve_variation(const GridPath& h, const GridPath& l, const VectorFieldSystem& vf,
                                       const Eigen::VectorXd& a, int substeps) {
  detail::check_young_args(h, vf, a, substeps);
  if (!(l.grid == h.grid) || l.dimension() != vf.d)
    throw std::invalid_argument("direction must share the driver grid and dimension");
  const int K = h.grid.intervals;
  const double dt = h.grid.dt();
  const int e = vf.e;
  VariationBundle out;
  out.grid = h.grid;
  out.l = l;
  out.xi1 = Eigen::MatrixXd::Zero(K + 1, e);
  out.xi2 = Eigen::MatrixXd::Zero(K + 1, e);
  out.y.grid = h.grid;
  out.y.start = a;
  out.y.method = "young";
  out.y.substeps = substeps;
  out.y.states.resize(K + 1, e);
  Eigen::VectorXd Y = Eigen::VectorXd::Zero(3 * e);
  Y.segment(0, e) = a;
  out.y.states.row(0) = a.transpose();
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd vh = h.increment(k) / dt;
    Eigen::VectorXd vl = l.increment(k) / dt;
    auto f = [&](const Eigen::VectorXd& s) { return detail::variation_rhs(vf, s, vh, vl); };
    double sub = dt / substeps;
    for (int n = 0; n < substeps; ++n) Y = detail::rk4_step(f, Y, sub);
    detail::check_state(Y, h.grid.point(k + 1), "solve_variation");
    out.y.states.row(k + 1) = Y.segment(0, e).transpose();
    out.xi1.row(k + 1) = Y.segment(e, e).transpose();
    out.xi2.row(k + 1) = Y.segment(2 * e, e).transpose();
  }
  return out;
}

namespace detail {

// The (y, xi1, xi2) dynamics as a driven system over the doubled driver
// (x, l), so the rough variation equations reuse the step-L Euler scheme.
// Driving columns j < d act against dx^j, columns d + j against dl^j.
inline VectorFieldSystem extend_variation_fields(const VectorFieldSystem& vf) {
  const int e = vf.e;
  const int d = vf.d;
  auto col = [vf, e, d](const Eigen::VectorXd& Y, int j) {
    Eigen::VectorXd y = Y.segment(0, e);
    Eigen::VectorXd xi1 = Y.segment(e, e);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(3 * e);
    if (j < d) {
      Eigen::VectorXd xi2 = Y.segment(2 * e, e);
      Eigen::MatrixXd A = vf.jac_sigma(y, j);
      out.segment(0, e) = vf.sigma(y).col(j);
      out.segment(e, e) = A * xi1;
      out.segment(2 * e, e) = A * xi2 + vf.hess_sigma_apply(y, j, xi1, xi1);
    } else {
      Eigen::MatrixXd A = vf.jac_sigma(y, j - d);
      out.segment(e, e) = vf.sigma(y).col(j - d);
      out.segment(2 * e, e) = 2.0 * (A * xi1);
    }
    return out;
  };
  VectorFieldSystem ext;
  ext.e = 3 * e;
  ext.d = 2 * d;
  ext.name = vf.name + "-variation";
  ext.smoothness = vf.smoothness;
  ext.sigma = [col, e, d](const Eigen::VectorXd& Y) {
    Eigen::MatrixXd s(3 * e, 2 * d);
    for (int j = 0; j < 2 * d; ++j) s.col(j) = col(Y, j);
    return s;
  };
  ext.drift = [vf, e](const Eigen::VectorXd& Y) {
    Eigen::VectorXd y = Y.segment(0, e);
    Eigen::VectorXd xi1 = Y.segment(e, e);
    Eigen::VectorXd xi2 = Y.segment(2 * e, e);
    Eigen::MatrixXd jb = vf.jac_drift(y);
    Eigen::VectorXd out(3 * e);
    out.segment(0, e) = vf.drift(y);
    out.segment(e, e) = jb * xi1;
    out.segment(2 * e, e) = jb * xi2 + vf.hess_drift_apply(y, xi1, xi1);
    return out;
  };
  ext.jac_sigma = [col, e](const Eigen::VectorXd& Y, int j) {
    const double s = 1e-5 * std::max(1.0, Y.lpNorm<Eigen::Infinity>());
    Eigen::MatrixXd J(3 * e, 3 * e);
    Eigen::VectorXd Yp = Y, Ym = Y;
    for (int c = 0; c < 3 * e; ++c) {
      Yp[c] += s;
      Ym[c] -= s;
      J.col(c) = (col(Yp, j) - col(Ym, j)) / (2.0 * s);
      Yp[c] = Y[c];
      Ym[c] = Y[c];
    }
    return J;
  };
  {
    auto dr = ext.drift;
    ext.jac_drift = [dr, e](const Eigen::VectorXd& Y) {
      const double s = 1e-5 * std::max(1.0, Y.lpNorm<Eigen::Infinity>());
      Eigen::MatrixXd J(3 * e, 3 * e);
      Eigen::VectorXd Yp = Y, Ym = Y;
      for (int c = 0; c < 3 * e; ++c) {
        Yp[c] += s;
        Ym[c] -= s;
        J.col(c) = (dr(Yp) - dr(Ym)) / (2.0 * s);
        Yp[c] = Y[c];
        Ym[c] = Y[c];
      }
      return J;
    };
  }
  ext.hess_sigma_apply = [col](const Eigen::VectorXd& Y, int j, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    const double s = 1e-4;
    Eigen::VectorXd su = s * u / std::max(1.0, u.norm());
    Eigen::VectorXd sv = s * v / std::max(1.0, v.norm());
    double scale = (su.norm() > 0 ? u.norm() / su.norm() : 0.0) * (sv.norm() > 0 ? v.norm() / sv.norm() : 0.0);
    Eigen::VectorXd r =
        col(Y + su + sv, j) - col(Y + su - sv, j) - col(Y - su + sv, j) + col(Y - su - sv, j);
    return Eigen::VectorXd(0.25 * scale * r);
  };
  {
    auto dr = ext.drift;
    ext.hess_drift_apply = [dr](const Eigen::VectorXd& Y, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
      const double s = 1e-4;
      Eigen::VectorXd su = s * u / std::max(1.0, u.norm());
      Eigen::VectorXd sv = s * v / std::max(1.0, v.norm());
      double scale = (su.norm() > 0 ? u.norm() / su.norm() : 0.0) * (sv.norm() > 0 ? v.norm() / sv.norm() : 0.0);
      Eigen::VectorXd r = dr(Y + su + sv) - dr(Y + su - sv) - dr(Y - su + sv) + dr(Y - su - sv);
      return Eigen::VectorXd(0.25 * scale * r);
    };
  }
  return ext;
}

// Joint increment of (x, l) over one interval: the log-signature of x and the
// straight-line displacement of l are embedded side by side and
// re-exponentiated, the geodesic interpolation of the pair.
inline IncrementTriple joint_increment(const IncrementTriple& gx, const Eigen::VectorXd& u) {
  const int d = gx.dim();
  IncrementTriple lx = tensor_log(gx);
  IncrementTriple L(gx.level, 2 * d);
  L.x1.head(d) = lx.x1;
  L.x1.tail(d) = u;
  L.x2.topLeftCorner(d, d) = lx.x2;
  if (gx.level >= 3)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int k = 0; k < d; ++k) L.x3(i, j, k) = lx.x3(i, j, k);
  return tensor_exp(L);
}

}  // namespace detail

/// Rough-driver variation: the coupled (y, xi1, xi2) system is itself an RDE
/// over the doubled driver (x, l) and is solved with the step-L Euler scheme.
inline VariationBundle solve_variation(const GeometricRoughPath& x, const GridPath& l, const VectorFieldSystem& vf,
                                       const Eigen::VectorXd& a) {
  if (x.dimension() != vf.d) throw std::invalid_argument("driver dimension does not match the field system");
  if (a.size() != vf.e) throw std::invalid_argument("start dimension does not match the field system");
  if (!(l.grid == x.grid) || l.dimension() != vf.d)
    throw std::invalid_argument("direction must share the driver grid and dimension");
  GeometricRoughPath joint;
  joint.grid = x.grid;
  joint.level = x.level;
  joint.p = x.p;
  joint.intervals.reserve(x.intervals.size());
  for (int k = 0; k < x.grid.intervals; ++k)
    joint.intervals.push_back(detail::joint_increment(x.intervals[static_cast<std::size_t>(k)], l.increment(k)));
  VectorFieldSystem ext = detail::extend_variation_fields(vf);
  Eigen::VectorXd Y0 = Eigen::VectorXd::Zero(3 * vf.e);
  Y0.segment(0, vf.e) = a;
  SolutionPath joint_sol = solve_rde(joint, ext, Y0);

  VariationBundle out;
  out.grid = x.grid;
  out.l = l;
  out.y.grid = x.grid;
  out.y.start = a;
  out.y.method = "rough-euler";
  out.y.substeps = 1;
  out.y.states = joint_sol.states.leftCols(vf.e);
  out.xi1 = joint_sol.states.middleCols(vf.e, vf.e);
  out.xi2 = joint_sol.states.rightCols(vf.e);
  return out;
}

/// Homogeneous linearization J' = (sum_j grad V_j dh^j/dt + grad b) J along
/// the Young solution, J_0 = I, with the inverse and the Duhamel integrand
/// J^{-1} sigma(y) recorded at substep nodes. substeps must be even so the
/// node set supports composite Simpson quadrature.
inline JacobianFlow jacobian_flow(const GridPath& h, const VectorFieldSystem& vf, const Eigen::VectorXd& a,
                                  int substeps = 8) {
  detail::check_young_args(h, vf, a, substeps);
  if (substeps % 2 != 0) throw std::invalid_argument("jacobian_flow: substeps must be even");
  const int K = h.grid.intervals;
  const double dt = h.grid.dt();
  const int e = vf.e;
  JacobianFlow out;
  out.grid = h.grid;
  out.substeps = substeps;
  out.states.resize(K + 1, e);
  out.J.reserve(K + 1);
  out.Jinv.reserve(K + 1);
  out.kernel.assign(K, {});

  // state: [y; vec(J)]
  Eigen::VectorXd Y(e + e * e);
  Y.segment(0, e) = a;
  out.states.row(0) = a.transpose();
  Eigen::Map<Eigen::MatrixXd>(Y.data() + e, e, e) = Eigen::MatrixXd::Identity(e, e);

  auto record = [&](const Eigen::VectorXd& s, int k) {
    Eigen::VectorXd y = s.segment(0, e);
    Eigen::MatrixXd J = Eigen::Map<const Eigen::MatrixXd>(s.data() + e, e, e);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) throw numerical_error("jacobian_flow: flow derivative is singular");
    Eigen::MatrixXd Jinv = lu.inverse();
    out.kernel[static_cast<std::size_t>(k)].push_back(Jinv * vf.sigma(y));
    return std::pair<Eigen::MatrixXd, Eigen::MatrixXd>(J, Jinv);
  };

  auto check_grid_point = [&](const Eigen::MatrixXd& J, const Eigen::MatrixXd& Jinv, double t) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    double smax = svd.singularValues()(0);
    double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0) || smax / smin > 1e12)
      throw numerical_error("jacobian_flow: flow derivative ill-conditioned at t = " + std::to_string(t));
    out.J.push_back(J);
    out.Jinv.push_back(Jinv);
  };

  {
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(e, e);
    out.J.push_back(I);
    out.Jinv.push_back(I);
  }

  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd vh = h.increment(k) / dt;
    auto f = [&](const Eigen::VectorXd& s) {
      Eigen::VectorXd y = s.segment(0, e);
      Eigen::MatrixXd J = Eigen::Map<const Eigen::MatrixXd>(s.data() + e, e, e);
      Eigen::MatrixXd A = vf.jac_drift(y);
      for (int j = 0; j < vf.d; ++j) A += vh[j] * vf.jac_sigma(y, j);
      Eigen::VectorXd ds(e + e * e);
      ds.segment(0, e) = vf.sigma(y) * vh + vf.drift(y);
      Eigen::Map<Eigen::MatrixXd>(ds.data() + e, e, e) = A * J;
      return ds;
    };
    double sub = dt / substeps;
    record(Y, k);
    std::pair<Eigen::MatrixXd, Eigen::MatrixXd> last;
    for (int n = 0; n < substeps; ++n) {
      Y = detail::rk4_step(f, Y, sub);
      last = record(Y, k);
    }
    detail::check_state(Y.segment(0, e), h.grid.point(k + 1), "jacobian_flow");
    out.states.row(k + 1) = Y.segment(0, e).transpose();
    check_grid_point(last.first, last.second, h.grid.point(k + 1));
  }
  return out;
}

/// First variation in direction l reconstructed from the flow derivative:
/// xi1_t = J_t int_0^t J_s^{-1} sigma(y_s) dl_s, composite Simpson per interval.
inline Eigen::MatrixXd duhamel_first_variation(const JacobianFlow& flow, const GridPath& l) {
  if (!(l.grid == flow.grid)) throw std::invalid_argument("duhamel_first_variation: grid mismatch");
  const int K = flow.grid.intervals;
  const double dt = flow.grid.dt();
  const int e = static_cast<int>(flow.J[0].rows());
  if (flow.kernel.empty() || flow.kernel[0].empty() || flow.kernel[0][0].cols() != l.dimension())
    throw std::invalid_argument("duhamel_first_variation: direction dimension mismatch");
  const int n = flow.substeps;
  const double sub = dt / n;
  Eigen::MatrixXd xi1 = Eigen::MatrixXd::Zero(K + 1, e);
  Eigen::VectorXd S = Eigen::VectorXd::Zero(e);
  for (int k = 0; k < K; ++k) {
    Eigen::VectorXd vl = l.increment(k) / dt;
    Eigen::VectorXd quad = Eigen::VectorXd::Zero(e);
    for (int m = 0; m <= n; ++m) {
      double w = (m == 0 || m == n) ? 1.0 : (m % 2 == 1 ? 4.0 : 2.0);
      quad += w * (flow.kernel[static_cast<std::size_t>(k)][static_cast<std::size_t>(m)] * vl);
    }
    S += (sub / 3.0) * quad;
    xi1.row(k + 1) = (flow.J[static_cast<std::size_t>(k + 1)] * S).transpose();
  }
  return xi1;
}

inline void write_solution_csv(std::ostream& os, const SolutionPath& y) {
  os << "t";
  for (int c = 0; c < y.dimension(); ++c) os << ",y_" << c;
  os << "\n";
  char buf[64];
  for (int k = 0; k < y.grid.num_points(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", y.grid.point(k));
    os << buf;
    for (int c = 0; c < y.dimension(); ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", y.states(k, c));
      os << buf;
    }
    os << "\n";
  }
}

inline void write_variation_csv(std::ostream& os, const VariationBundle& vb) {
  const int e = vb.y.dimension();
  os << "t";
  for (int c = 0; c < e; ++c) os << ",y_" << c;
  for (int c = 0; c < e; ++c) os << ",xi1_" << c;
  for (int c = 0; c < e; ++c) os << ",xi2_" << c;
  os << "\n";
  char buf[64];
  for (int k = 0; k < vb.grid.num_points(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", vb.grid.point(k));
    os << buf;
    for (int c = 0; c < e; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", vb.y.states(k, c));
      os << buf;
    }
    for (int c = 0; c < e; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", vb.xi1(k, c));
      os << buf;
    }
    for (int c = 0; c < e; ++c) {
      std::snprintf(buf, sizeof buf, ",%.17g", vb.xi2(k, c));
      os << buf;
    }
    os << "\n";
  }
}

}  // namespace roughlab
