#pragma once

#include <Eigen/Dense>
#include <stdexcept>

namespace roughlab {

/// Dense order-3 tensor over R^d, flat row-major storage.
class Tensor3 {
public:
  Tensor3() : d_(0) {}
  explicit Tensor3(int d) : d_(d), v_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d) * d * d)) {}

  int dim() const { return d_; }
  double& operator()(int i, int j, int k) { return v_[(static_cast<Eigen::Index>(i) * d_ + j) * d_ + k]; }
  double operator()(int i, int j, int k) const { return v_[(static_cast<Eigen::Index>(i) * d_ + j) * d_ + k]; }

  Eigen::VectorXd& flat() { return v_; }
  const Eigen::VectorXd& flat() const { return v_; }

  Tensor3& operator+=(const Tensor3& o) { v_ += o.v_; return *this; }
  Tensor3& operator-=(const Tensor3& o) { v_ -= o.v_; return *this; }
  Tensor3& operator*=(double s) { v_ *= s; return *this; }
  Tensor3 operator+(const Tensor3& o) const { Tensor3 r(*this); r += o; return r; }
  Tensor3 operator-(const Tensor3& o) const { Tensor3 r(*this); r -= o; return r; }
  Tensor3 operator*(double s) const { Tensor3 r(*this); r *= s; return r; }

  double norm() const { return v_.norm(); }

  /// (u otimes M)_{ijk} = u_i M_{jk}
  static Tensor3 outer_vm(const Eigen::VectorXd& u, const Eigen::MatrixXd& m) {
    Tensor3 t(static_cast<int>(u.size()));
    for (int i = 0; i < t.d_; ++i)
      for (int j = 0; j < t.d_; ++j)
        for (int k = 0; k < t.d_; ++k) t(i, j, k) = u[i] * m(j, k);
    return t;
  }
  /// (M otimes u)_{ijk} = M_{ij} u_k
  static Tensor3 outer_mv(const Eigen::MatrixXd& m, const Eigen::VectorXd& u) {
    Tensor3 t(static_cast<int>(u.size()));
    for (int i = 0; i < t.d_; ++i)
      for (int j = 0; j < t.d_; ++j)
        for (int k = 0; k < t.d_; ++k) t(i, j, k) = m(i, j) * u[k];
    return t;
  }
  static Tensor3 outer3(const Eigen::VectorXd& a, const Eigen::VectorXd& b, const Eigen::VectorXd& c) {
    Tensor3 t(static_cast<int>(a.size()));
    for (int i = 0; i < t.d_; ++i)
      for (int j = 0; j < t.d_; ++j)
        for (int k = 0; k < t.d_; ++k) t(i, j, k) = a[i] * b[j] * c[k];
    return t;
  }

private:
  int d_;
  Eigen::VectorXd v_;
};

/// Levels 1..L of a signature-type increment over one time interval.
/// Level 3 is carried only when level == 3.
struct IncrementTriple {
  int level = 2;
  Eigen::VectorXd x1;
  Eigen::MatrixXd x2;
  Tensor3 x3;

  IncrementTriple() = default;
  IncrementTriple(int lvl, int d)
      : level(lvl),
        x1(Eigen::VectorXd::Zero(d)),
        x2(Eigen::MatrixXd::Zero(d, d)),
        x3(lvl >= 3 ? Tensor3(d) : Tensor3()) {
    if (lvl != 2 && lvl != 3) throw std::invalid_argument("IncrementTriple: level must be 2 or 3");
  }

  int dim() const { return static_cast<int>(x1.size()); }

  /// Signature of a single linear segment with displacement v: exp(v).
  static IncrementTriple segment(const Eigen::VectorXd& v, int lvl) {
    IncrementTriple t(lvl, static_cast<int>(v.size()));
    t.x1 = v;
    t.x2 = 0.5 * v * v.transpose();
    if (lvl >= 3) t.x3 = Tensor3::outer3(v, v, v) * (1.0 / 6.0);
    return t;
  }
};

/// Chen product of contiguous increments: [s,t] * [t,u] -> [s,u].
inline IncrementTriple chen_compose(const IncrementTriple& a, const IncrementTriple& b) {
  if (a.level != b.level || a.dim() != b.dim())
    throw std::invalid_argument("chen_compose: level or dimension mismatch");
  IncrementTriple c(a.level, a.dim());
  c.x1 = a.x1 + b.x1;
  c.x2 = a.x2 + b.x2 + a.x1 * b.x1.transpose();
  if (a.level >= 3) {
    c.x3 = a.x3 + b.x3 + Tensor3::outer_vm(a.x1, b.x2) + Tensor3::outer_mv(a.x2, b.x1);
  }
  return c;
}

/// Tensor-algebra logarithm of a group-like increment (gradewise log(1 + g)).
inline IncrementTriple tensor_log(const IncrementTriple& g) {
  IncrementTriple l(g.level, g.dim());
  l.x1 = g.x1;
  l.x2 = g.x2 - 0.5 * g.x1 * g.x1.transpose();
  if (g.level >= 3) {
    l.x3 = g.x3 - (Tensor3::outer_vm(g.x1, g.x2) + Tensor3::outer_mv(g.x2, g.x1)) * 0.5 +
           Tensor3::outer3(g.x1, g.x1, g.x1) * (1.0 / 3.0);
  }
  return l;
}

/// Tensor-algebra exponential of a Lie-algebra increment.
inline IncrementTriple tensor_exp(const IncrementTriple& l) {
  IncrementTriple g(l.level, l.dim());
  g.x1 = l.x1;
  g.x2 = l.x2 + 0.5 * l.x1 * l.x1.transpose();
  if (l.level >= 3) {
    g.x3 = l.x3 + (Tensor3::outer_vm(l.x1, l.x2) + Tensor3::outer_mv(l.x2, l.x1)) * 0.5 +
           Tensor3::outer3(l.x1, l.x1, l.x1) * (1.0 / 6.0);
  }
  return g;
}

inline double level_norm(const IncrementTriple& t, int level_index) {
  switch (level_index) {
    case 1: return t.x1.norm();
    case 2: return t.x2.norm();
    case 3: return t.level >= 3 ? t.x3.norm() : 0.0;
    default: throw std::invalid_argument("level_norm: level index out of range");
  }
}

}  // namespace roughlab
