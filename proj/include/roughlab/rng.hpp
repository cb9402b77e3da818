#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace roughlab {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream seed for (seed, index) pairs; sample i always sees the same stream
/// no matter how work is split across threads.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x51ab2cd4f1e9ULL));
}

/// Deterministic standard-normal generator. Box-Muller on top of mt19937_64;
/// std::normal_distribution is implementation-defined, this is not.
class NormalSampler {
public:
  explicit NormalSampler(std::uint64_t seed) : eng_(seed) {}

  double operator()() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  double uniform01() {
    // 53-bit mantissa uniform in [0,1)
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

private:
  std::mt19937_64 eng_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace roughlab
