#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "roughlab/errors.hpp"

namespace roughlab {

/// Radial cutoff: 1 on |y| <= radius, 0 past radius + width, quintic C^2
/// blend between. Keeps polynomial fields globally bounded with two bounded
/// derivatives while leaving them untouched where solutions actually live.
struct RadialTruncation {
  double radius = 1e3;
  double width = 1e2;

  double value(double u) const {
    if (u <= radius) return 1.0;
    if (u >= radius + width) return 0.0;
    double s = (u - radius) / width;
    return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
  }
  double deriv1(double u) const {
    if (u <= radius || u >= radius + width) return 0.0;
    double s = (u - radius) / width;
    return -30.0 * s * s * (1.0 + s * (-2.0 + s)) / width;
  }
  double deriv2(double u) const {
    if (u <= radius || u >= radius + width) return 0.0;
    double s = (u - radius) / width;
    return -60.0 * s * (1.0 + s * (-3.0 + 2.0 * s)) / (width * width);
  }

  double g(const Eigen::VectorXd& y) const { return value(y.norm()); }
  Eigen::VectorXd grad(const Eigen::VectorXd& y) const {
    double u = y.norm();
    double c1 = deriv1(u);
    if (c1 == 0.0) return Eigen::VectorXd::Zero(y.size());
    return (c1 / u) * y;
  }
  Eigen::MatrixXd hess(const Eigen::VectorXd& y) const {
    int n = static_cast<int>(y.size());
    double u = y.norm();
    double c1 = deriv1(u);
    double c2 = deriv2(u);
    if (c1 == 0.0 && c2 == 0.0) return Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd yh = y / u;
    Eigen::MatrixXd P = yh * yh.transpose();
    return c2 * P + (c1 / u) * (Eigen::MatrixXd::Identity(n, n) - P);
  }
};

struct Monomial {
  double coef = 0.0;
  std::vector<int> powers;  // one exponent per state coordinate
};
using Poly = std::vector<Monomial>;

inline double poly_value(const Poly& p, const Eigen::VectorXd& y) {
  double acc = 0.0;
  for (const auto& m : p) {
    double v = m.coef;
    for (size_t c = 0; c < m.powers.size(); ++c)
      for (int k = 0; k < m.powers[c]; ++k) v *= y[static_cast<int>(c)];
    acc += v;
  }
  return acc;
}

inline Eigen::VectorXd poly_gradient(const Poly& p, const Eigen::VectorXd& y) {
  int e = static_cast<int>(y.size());
  Eigen::VectorXd g = Eigen::VectorXd::Zero(e);
  for (const auto& m : p)
    for (int c = 0; c < e; ++c) {
      if (m.powers[c] == 0) continue;
      double v = m.coef * m.powers[c];
      for (int a = 0; a < e; ++a) {
        int pw = m.powers[a] - (a == c ? 1 : 0);
        for (int k = 0; k < pw; ++k) v *= y[a];
      }
      g[c] += v;
    }
  return g;
}

inline Eigen::MatrixXd poly_hessian(const Poly& p, const Eigen::VectorXd& y) {
  int e = static_cast<int>(y.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(e, e);
  for (const auto& m : p)
    for (int c1 = 0; c1 < e; ++c1) {
      if (m.powers[c1] == 0) continue;
      for (int c2 = c1; c2 < e; ++c2) {
        int p2 = m.powers[c2] - (c1 == c2 ? 1 : 0);
        if (p2 <= 0) continue;
        double v = m.coef * m.powers[c1] * p2;
        for (int a = 0; a < e; ++a) {
          int pw = m.powers[a] - (a == c1 ? 1 : 0) - (a == c2 ? 1 : 0);
          for (int k = 0; k < pw; ++k) v *= y[a];
        }
        h(c1, c2) += v;
        if (c1 != c2) h(c2, c1) += v;
      }
    }
  return h;
}

/// A driftful driven system: sigma(y) = [V_1,...,V_d] (e x d) and b = V_0,
/// with exact first and second derivatives. Evaluators are pure; the struct
/// copies freely and is safe to share across threads.
struct VectorFieldSystem {
  int e = 0;
  int d = 0;
  std::string name;
  std::string params;   // canonical dump of the catalog parameters
  int smoothness = 99;  // claimed global C_b order

  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> sigma;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
  // jac_sigma(y, j)(r, c) = d V_{j+1}^r / d y^c
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&, int)> jac_sigma;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jac_drift;
  // component r of D^2 V_{j+1} <u, v>
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, int, const Eigen::VectorXd&, const Eigen::VectorXd&)>
      hess_sigma_apply;
  std::function<Eigen::VectorXd(const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&)>
      hess_drift_apply;
};

namespace detail {

struct PolySystemData {
  int e = 0;
  int d = 0;
  std::vector<std::vector<Poly>> cols;  // [j][r], driving column j, component r
  std::vector<Poly> drift;              // [r]
  Eigen::MatrixXd sigma_const;          // values at 0, preserved by truncation
  Eigen::VectorXd drift_const;
  RadialTruncation trunc;
};

inline Eigen::VectorXd poly_col_value(const std::vector<Poly>& col, const Eigen::VectorXd& y) {
  Eigen::VectorXd v(col.size());
  for (size_t r = 0; r < col.size(); ++r) v[static_cast<int>(r)] = poly_value(col[r], y);
  return v;
}

inline Eigen::MatrixXd poly_col_jac(const std::vector<Poly>& col, const Eigen::VectorXd& y) {
  Eigen::MatrixXd J(col.size(), y.size());
  for (size_t r = 0; r < col.size(); ++r) J.row(static_cast<int>(r)) = poly_gradient(col[r], y).transpose();
  return J;
}

// Truncated field c + g(y)(V(y) - c) and its first two derivatives.
struct TruncatedEval {
  static Eigen::VectorXd value(const PolySystemData& dat, const std::vector<Poly>& col, const Eigen::VectorXd& cst,
                               const Eigen::VectorXd& y) {
    double g = dat.trunc.g(y);
    if (g == 0.0) return cst;
    return cst + g * (poly_col_value(col, y) - cst);
  }
  static Eigen::MatrixXd jac(const PolySystemData& dat, const std::vector<Poly>& col, const Eigen::VectorXd& cst,
                             const Eigen::VectorXd& y) {
    double g = dat.trunc.g(y);
    if (g == 0.0) return Eigen::MatrixXd::Zero(dat.e, dat.e);
    Eigen::MatrixXd J = g * poly_col_jac(col, y);
    Eigen::VectorXd gg = dat.trunc.grad(y);
    if (!gg.isZero(0.0)) J += (poly_col_value(col, y) - cst) * gg.transpose();
    return J;
  }
  static Eigen::VectorXd hess_apply(const PolySystemData& dat, const std::vector<Poly>& col,
                                    const Eigen::VectorXd& cst, const Eigen::VectorXd& y, const Eigen::VectorXd& u,
                                    const Eigen::VectorXd& v) {
    double g = dat.trunc.g(y);
    Eigen::VectorXd out = Eigen::VectorXd::Zero(dat.e);
    if (g == 0.0) return out;
    for (int r = 0; r < dat.e; ++r) out[r] = g * (u.transpose() * poly_hessian(col[r], y) * v).value();
    Eigen::VectorXd gg = dat.trunc.grad(y);
    if (!gg.isZero(0.0)) {
      Eigen::MatrixXd JP = poly_col_jac(col, y);
      Eigen::VectorXd P = poly_col_value(col, y) - cst;
      double gu = gg.dot(u), gv = gg.dot(v);
      double uhv = (u.transpose() * dat.trunc.hess(y) * v).value();
      out += (JP * u) * gv + (JP * v) * gu + P * uhv;
    } else {
      double uhv = (u.transpose() * dat.trunc.hess(y) * v).value();
      if (uhv != 0.0) out += (poly_col_value(col, y) - cst) * uhv;
    }
    return out;
  }
};

inline VectorFieldSystem make_poly_system(std::shared_ptr<PolySystemData> dat, std::string name, int smoothness) {
  VectorFieldSystem vf;
  vf.e = dat->e;
  vf.d = dat->d;
  vf.name = std::move(name);
  vf.smoothness = smoothness;
  vf.sigma = [dat](const Eigen::VectorXd& y) {
    Eigen::MatrixXd s(dat->e, dat->d);
    for (int j = 0; j < dat->d; ++j) s.col(j) = TruncatedEval::value(*dat, dat->cols[j], dat->sigma_const.col(j), y);
    return s;
  };
  vf.drift = [dat](const Eigen::VectorXd& y) { return TruncatedEval::value(*dat, dat->drift, dat->drift_const, y); };
  vf.jac_sigma = [dat](const Eigen::VectorXd& y, int j) {
    if (j < 0 || j >= dat->d) throw std::invalid_argument("jac_sigma: column out of range");
    return TruncatedEval::jac(*dat, dat->cols[j], dat->sigma_const.col(j), y);
  };
  vf.jac_drift = [dat](const Eigen::VectorXd& y) { return TruncatedEval::jac(*dat, dat->drift, dat->drift_const, y); };
  vf.hess_sigma_apply = [dat](const Eigen::VectorXd& y, int j, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    if (j < 0 || j >= dat->d) throw std::invalid_argument("hess_sigma_apply: column out of range");
    return TruncatedEval::hess_apply(*dat, dat->cols[j], dat->sigma_const.col(j), y, u, v);
  };
  vf.hess_drift_apply = [dat](const Eigen::VectorXd& y, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    return TruncatedEval::hess_apply(*dat, dat->drift, dat->drift_const, y, u, v);
  };
  return vf;
}

inline Poly parse_poly_json(const nlohmann::json& comp, int e) {
  if (!comp.is_object()) throw std::invalid_argument("polynomial: component must map multi-indices to coefficients");
  Poly p;
  for (auto it = comp.begin(); it != comp.end(); ++it) {
    Monomial m;
    m.powers.assign(e, 0);
    std::stringstream ss(it.key());
    std::string tok;
    int c = 0, total = 0;
    while (std::getline(ss, tok, ',')) {
      if (c >= e) throw std::invalid_argument("polynomial: multi-index longer than state dimension");
      int pw = 0;
      try {
        size_t used = 0;
        pw = std::stoi(tok, &used);
        if (used != tok.size()) throw std::invalid_argument("");
      } catch (...) {
        throw std::invalid_argument("polynomial: bad multi-index '" + it.key() + "'");
      }
      if (pw < 0) throw std::invalid_argument("polynomial: negative exponent");
      m.powers[c++] = pw;
      total += pw;
    }
    if (c != e) throw std::invalid_argument("polynomial: multi-index must have one exponent per state coordinate");
    if (total > 3) throw std::invalid_argument("polynomial: total degree above 3");
    if (!it.value().is_number()) throw std::invalid_argument("polynomial: coefficient must be a number");
    m.coef = it.value().get<double>();
    if (!std::isfinite(m.coef)) throw std::invalid_argument("polynomial: non-finite coefficient");
    if (m.coef != 0.0) p.push_back(std::move(m));
  }
  return p;
}

inline std::shared_ptr<PolySystemData> finish_poly_data(std::shared_ptr<PolySystemData> dat) {
  Eigen::VectorXd zero = Eigen::VectorXd::Zero(dat->e);
  dat->sigma_const.resize(dat->e, dat->d);
  for (int j = 0; j < dat->d; ++j) dat->sigma_const.col(j) = poly_col_value(dat->cols[j], zero);
  dat->drift_const = poly_col_value(dat->drift, zero);
  return dat;
}

}  // namespace detail

/// Named systems with exact analytic derivatives. `polynomial` takes user
/// coefficient arrays (total degree <= 3) indexed params["sigma"][j][r] and
/// params["drift"][r], each an object mapping comma-separated multi-indices
/// to coefficients, truncated outside a ball (params "radius", "width").
inline VectorFieldSystem catalog(const std::string& name, const nlohmann::json& params = nlohmann::json::object()) {
  auto stamp = [&params](VectorFieldSystem vf) {
    vf.params = params.dump();
    return vf;
  };
  if (name == "additive") {
    int n = params.value("dim", 1);
    if (n < 1) throw std::invalid_argument("additive: dim must be >= 1");
    VectorFieldSystem vf;
    vf.e = vf.d = n;
    vf.name = "additive";
    vf.smoothness = 99;
    vf.sigma = [n](const Eigen::VectorXd&) { return Eigen::MatrixXd::Identity(n, n); };
    vf.drift = [n](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(n); };
    vf.jac_sigma = [n](const Eigen::VectorXd&, int) { return Eigen::MatrixXd::Zero(n, n); };
    vf.jac_drift = [n](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(n, n); };
    vf.hess_sigma_apply = [n](const Eigen::VectorXd&, int, const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::VectorXd::Zero(n);
    };
    vf.hess_drift_apply = [n](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::VectorXd::Zero(n);
    };
    return stamp(std::move(vf));
  }
  if (name == "elliptic-rot2d") {
    VectorFieldSystem vf;
    vf.e = vf.d = 2;
    vf.name = "elliptic-rot2d";
    vf.smoothness = 99;
    vf.sigma = [](const Eigen::VectorXd& y) {
      double c = std::cos(y[1]), s = std::sin(y[1]);
      Eigen::MatrixXd m(2, 2);
      m << c, -s, s, c;
      return m;
    };
    vf.drift = [](const Eigen::VectorXd&) { return Eigen::VectorXd::Zero(2); };
    vf.jac_sigma = [](const Eigen::VectorXd& y, int j) {
      if (j < 0 || j > 1) throw std::invalid_argument("jac_sigma: column out of range");
      double c = std::cos(y[1]), s = std::sin(y[1]);
      Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2, 2);
      if (j == 0) {
        m(0, 1) = -s;
        m(1, 1) = c;
      } else {
        m(0, 1) = -c;
        m(1, 1) = -s;
      }
      return m;
    };
    vf.jac_drift = [](const Eigen::VectorXd&) { return Eigen::MatrixXd::Zero(2, 2); };
    vf.hess_sigma_apply = [](const Eigen::VectorXd& y, int j, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
      if (j < 0 || j > 1) throw std::invalid_argument("hess_sigma_apply: column out of range");
      double c = std::cos(y[1]), s = std::sin(y[1]);
      Eigen::VectorXd out(2);
      if (j == 0) {
        out << -c, -s;
      } else {
        out << s, -c;
      }
      return Eigen::VectorXd(out * (u[1] * v[1]));
    };
    vf.hess_drift_apply = [](const Eigen::VectorXd&, const Eigen::VectorXd&, const Eigen::VectorXd&) {
      return Eigen::VectorXd::Zero(2);
    };
    return stamp(std::move(vf));
  }
  if (name == "scalar-linear") {
    auto dat = std::make_shared<detail::PolySystemData>();
    dat->e = dat->d = 1;
    dat->cols = {{Poly{Monomial{1.0, {1}}}}};
    dat->drift = {Poly{}};
    dat->trunc.radius = params.value("radius", 1e3);
    dat->trunc.width = params.value("width", 1e2);
    return stamp(detail::make_poly_system(detail::finish_poly_data(std::move(dat)), "scalar-linear", 2));
  }
  if (name == "heisenberg") {
    auto dat = std::make_shared<detail::PolySystemData>();
    dat->e = 3;
    dat->d = 2;
    dat->cols = {{Poly{Monomial{1.0, {0, 0, 0}}}, Poly{}, Poly{}},
                 {Poly{}, Poly{Monomial{1.0, {0, 0, 0}}}, Poly{Monomial{1.0, {1, 0, 0}}}}};
    dat->drift = {Poly{}, Poly{}, Poly{}};
    dat->trunc.radius = params.value("radius", 1e3);
    dat->trunc.width = params.value("width", 1e2);
    return stamp(detail::make_poly_system(detail::finish_poly_data(std::move(dat)), "heisenberg", 2));
  }
  if (name == "polynomial") {
    if (!params.contains("e") || !params.contains("d"))
      throw std::invalid_argument("polynomial: params must give state dimension e and driver dimension d");
    int e = params.at("e").get<int>();
    int d = params.at("d").get<int>();
    if (e < 1 || d < 1) throw std::invalid_argument("polynomial: dimensions must be >= 1");
    auto dat = std::make_shared<detail::PolySystemData>();
    dat->e = e;
    dat->d = d;
    dat->cols.assign(d, std::vector<Poly>(e));
    dat->drift.assign(e, Poly{});
    if (params.contains("sigma")) {
      const auto& sg = params.at("sigma");
      if (!sg.is_array() || static_cast<int>(sg.size()) != d)
        throw std::invalid_argument("polynomial: sigma must be an array with one entry per driving field");
      for (int j = 0; j < d; ++j) {
        if (!sg[j].is_array() || static_cast<int>(sg[j].size()) != e)
          throw std::invalid_argument("polynomial: sigma[j] must be an array with one entry per state component");
        for (int r = 0; r < e; ++r) dat->cols[j][r] = detail::parse_poly_json(sg[j][r], e);
      }
    }
    if (params.contains("drift")) {
      const auto& dr = params.at("drift");
      if (!dr.is_array() || static_cast<int>(dr.size()) != e)
        throw std::invalid_argument("polynomial: drift must be an array with one entry per state component");
      for (int r = 0; r < e; ++r) dat->drift[r] = detail::parse_poly_json(dr[r], e);
    }
    dat->trunc.radius = params.value("radius", 1e3);
    dat->trunc.width = params.value("width", 1e2);
    if (!(dat->trunc.radius > 0.0) || !(dat->trunc.width > 0.0))
      throw std::invalid_argument("polynomial: radius and width must be positive");
    return stamp(detail::make_poly_system(detail::finish_poly_data(std::move(dat)), "polynomial", 2));
  }
  throw std::invalid_argument("catalog: unknown system '" + name + "'");
}

/// A single vector field with a Jacobian evaluator.
struct Field {
  std::function<Eigen::VectorXd(const Eigen::VectorXd&)> eval;
  std::function<Eigen::MatrixXd(const Eigen::VectorXd&)> jac;
};

///// Field i of a system: 0 is the drift, 1..d the driving columns.
inline Field system_field(const VectorFieldSystem& vf, int i) {
  if (i < 0 || i > vf.d) throw std::invalid_argument("system_field: index out of range");
  Field f;
  if (i == 0) {
    f.eval = [vf](const Eigen::VectorXd& y) { return vf.drift(y); };
    f.jac = [vf](const Eigen::VectorXd& y) { return vf.jac_drift(y); };
  } else {
    int j = i - 1;
    f.eval = [vf, j](const Eigen::VectorXd& y) { return Eigen::VectorXd(vf.sigma(y).col(j)); };
    f.jac = [vf, j](const Eigen::VectorXd& y) { return vf.jac_sigma(y, j); };
  }
  return f;
}

inline Eigen::VectorXd lie_bracket(const Field& V, const Field& W, const Eigen::VectorXd& y) {
  return W.jac(y) * V.eval(y) - V.jac(y) * W.eval(y);
}

/// [V, W] as a Field. Its own Jacobian is central finite differences of the
/// bracket values, so nesting never needs derivatives above those supplied.
inline Field bracket_field(const Field& V, const Field& W, double fd_step = 1e-5) {
  Field f;
  f.eval = [V, W](const Eigen::VectorXd& y) { return lie_bracket(V, W, y); };
  auto ev = f.eval;
  f.jac = [ev, fd_step](const Eigen::VectorXd& y) {
    int e = static_cast<int>(y.size());
    Eigen::MatrixXd J(e, e);
    Eigen::VectorXd yp = y, ym = y;
    for (int c = 0; c < e; ++c) {
      yp[c] += fd_step;
      ym[c] -= fd_step;
      J.col(c) = (ev(yp) - ev(ym)) / (2.0 * fd_step);
      yp[c] = y[c];
      ym[c] = y[c];
    }
    return J;
  };
  return f;
}

struct HormanderResult {
  int rank = 0;
  int depth_reached = 0;
};

/// Bracket-spanning rank at a point: generation 1 holds the driving fields
/// only, later generations bracket every field (drift included) against the
/// previous generation. Stops at the first depth whose collected span has
/// full rank; rank below e at max_depth is a valid outcome.
inline HormanderResult hormander_rank(const VectorFieldSystem& vf, const Eigen::VectorXd& a, int max_depth,
                                      double tol = 1e-8) {
  if (max_depth < 1) throw std::invalid_argument("hormander_rank: max_depth must be >= 1");
  if (a.size() != vf.e) throw std::invalid_argument("hormander_rank: point dimension mismatch");
  std::vector<Field> generators;
  for (int i = 0; i <= vf.d; ++i) generators.push_back(system_field(vf, i));

  std::vector<Field> gen(generators.begin() + 1, generators.end());
  std::vector<Eigen::VectorXd> collected;
  auto rank_of = [&]() {
    Eigen::MatrixXd M(vf.e, collected.size());
    for (size_t c = 0; c < collected.size(); ++c) M.col(static_cast<int>(c)) = collected[c];
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv[0] <= 0.0) return 0;
    int r = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv[i] > tol * sv[0]) ++r;
    return r;
  };

  int depth = 0;
  int rank = 0;
  for (int k = 1; k <= max_depth; ++k) {
    if (k > 1) {
      std::vector<Field> next;
      next.reserve(gen.size() * generators.size());
      for (const auto& g : generators)
        for (const auto& w : gen) next.push_back(bracket_field(g, w));
      gen = std::move(next);
    }
    for (const auto& f : gen) collected.push_back(f.eval(a));
    rank = rank_of();
    depth = k;
    if (rank == vf.e) break;
  }
  return {rank, depth};
}

/// Replace the driving fields by constant linear combinations, sigma -> sigma M.
inline VectorFieldSystem remix_driving_fields(const VectorFieldSystem& vf, const Eigen::MatrixXd& M) {
  if (M.rows() != vf.d || M.cols() != vf.d) throw std::invalid_argument("remix_driving_fields: mix must be d x d");
  VectorFieldSystem out;
  out.e = vf.e;
  out.d = vf.d;
  out.name = vf.name + "-remix";
  out.params = vf.params;
  out.smoothness = vf.smoothness;
  out.sigma = [vf, M](const Eigen::VectorXd& y) { return Eigen::MatrixXd(vf.sigma(y) * M); };
  out.drift = vf.drift;
  out.jac_sigma = [vf, M](const Eigen::VectorXd& y, int j) {
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(vf.e, vf.e);
    for (int i = 0; i < vf.d; ++i)
      if (M(i, j) != 0.0) J += M(i, j) * vf.jac_sigma(y, i);
    return J;
  };
  out.jac_drift = vf.jac_drift;
  out.hess_sigma_apply = [vf, M](const Eigen::VectorXd& y, int j, const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
    Eigen::VectorXd out_v = Eigen::VectorXd::Zero(vf.e);
    for (int i = 0; i < vf.d; ++i)
      if (M(i, j) != 0.0) out_v += M(i, j) * vf.hess_sigma_apply(y, i, u, v);
    return out_v;
  };
  out.hess_drift_apply = vf.hess_drift_apply;
  return out;
}

}  // namespace roughlab
