#pragma once

#include <stdexcept>
#include <string>

namespace roughlab {

// Failure of a numerical procedure (factorization breakdown, singular flow, ...),
// as opposed to a malformed input, which is reported as std::invalid_argument.
class numerical_error : public std::runtime_error {
public:
  explicit numerical_error(const std::string& what) : std::runtime_error(what) {}
};

// A trajectory left the region where the (truncated) vector fields are trusted.
class divergence_error : public numerical_error {
public:
  divergence_error(const std::string& what, double first_bad_time)
      : numerical_error(what), first_bad_time_(first_bad_time) {}
  double first_bad_time() const { return first_bad_time_; }

private:
  double first_bad_time_;
};

// The diffusion matrix lost full row rank along a constructed trajectory.
class not_elliptic_error : public numerical_error {
public:
  explicit not_elliptic_error(const std::string& what) : numerical_error(what) {}
};

// A Monte Carlo estimator ended up with no usable samples.
class estimation_failed_error : public numerical_error {
public:
  explicit estimation_failed_error(const std::string& what) : numerical_error(what) {}
};

}  // namespace roughlab
