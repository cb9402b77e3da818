#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstdio>
#include <string>

namespace roughlab {

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Shortest exact decimal form, so hashes are stable across platforms.
inline std::string canonical_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string canonical_vector(const Eigen::VectorXd& v) {
  std::string s;
  for (int i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += canonical_double(v[i]);
  }
  return s;
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace roughlab
