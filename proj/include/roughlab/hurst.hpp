#pragma once

#include <cmath>
#include <stdexcept>

namespace roughlab {

/// Variation exponents attached to a Hurst parameter H in (1/4, 1/2].
///
/// rho = 1/(2H) is the 2D-variation exponent of the covariance, p the rough-path
/// exponent with p in (2*rho, 4), q a Young exponent with 1/p + 1/q > 1, and
/// L = floor(p) in {2, 3} the number of tensor levels carried by lifts.
struct HurstModel {
  double H;
  double rho;
  double p;
  double q;
  int level;

  static HurstModel make(double H_) {
    if (!(H_ > 0.25) || !(H_ <= 0.5)) throw std::invalid_argument("HurstModel: H must lie in (1/4, 1/2]");
    double rho_ = 1.0 / (2.0 * H_);
    // Midpoint-ish defaults: p just above 2*rho, q the Cameron-Martin embedding exponent.
    double p_ = 2.0 * rho_ + 0.1;
    double q_ = 1.0 / (H_ + 0.5);
    return HurstModel(H_, p_, q_);
  }

  HurstModel(double H_, double p_, double q_) : H(H_), rho(1.0 / (2.0 * H_)), p(p_), q(q_) {
    if (!(H > 0.25) || !(H <= 0.5)) throw std::invalid_argument("HurstModel: H must lie in (1/4, 1/2]");
    if (!(p > 2.0 * rho) || !(p < 4.0)) throw std::invalid_argument("HurstModel: need 2*rho < p < 4");
    if (!(q >= 1.0) || !(q < 2.0)) throw std::invalid_argument("HurstModel: need 1 <= q < 2");
    if (!(1.0 / p + 1.0 / q > 1.0)) throw std::invalid_argument("HurstModel: need 1/p + 1/q > 1");
    level = static_cast<int>(std::floor(p));
    if (level != 2 && level != 3) throw std::invalid_argument("HurstModel: floor(p) must be 2 or 3");
  }
};

}  // namespace roughlab
