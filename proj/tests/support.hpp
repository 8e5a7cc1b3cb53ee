#pragma once

// Shared test helpers: seeded random generators for property tests and
// independent oracles that do not reuse library code paths.

#include <cmath>
#include <functional>
#include <random>

#include "finsler_cloak/finsler_cloak.hpp"

namespace fc_test {

using finsler_cloak::Mat;
using finsler_cloak::Vec;
using finsler_cloak::vec2;

inline constexpr double kPi = 3.14159265358979323846;

class Rng {
 public:
  explicit Rng(unsigned long seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Vec unit2() {
    const double a = uniform(0.0, 2.0 * kPi);
    return vec2(std::cos(a), std::sin(a));
  }
  /// Direction with log-uniform length in [lo, hi].
  Vec direction2(double lo = 0.1, double hi = 10.0) { return log_uniform(lo, hi) * unit2(); }
  /// Point with |x| uniform in [r_lo, r_hi].
  Vec point2(double r_lo, double r_hi) { return uniform(r_lo, r_hi) * unit2(); }
  /// Direction at an angle drawn from [lo, hi].
  Vec heading(double lo, double hi) {
    const double a = uniform(lo, hi);
    return vec2(std::cos(a), std::sin(a));
  }

 private:
  std::mt19937_64 engine_;
};

/// Central-difference Jacobian with a fixed step, written independently of
/// the library's map_jacobian.
inline Mat fd_jacobian(const std::function<Vec(const Vec&)>& f, const Vec& x, double h = 1e-6) {
  const auto n = x.size();
  Mat J(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Vec xp = x, xm = x;
    xp[k] += h;
    xm[k] -= h;
    J.col(k) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return J;
}

/// Closed-form fundamental tensor of F = |y| + b.y:
/// g = (yhat + b)(yhat + b)^T + (F / |y|)(I - yhat yhat^T).
inline Mat randers_tensor(const Vec& b, const Vec& y) {
  const Vec yhat = y.normalized();
  const double F = y.norm() + b.dot(y);
  const Mat I = Mat::Identity(y.size(), y.size());
  return (yhat + b) * (yhat + b).transpose() + (F / y.norm()) * (I - yhat * yhat.transpose());
}

/// The cloak's explicit Cartesian map x -> r'(|x|) x/|x|.
inline Vec point_expansion_map(double R1, double R2, const Vec& x) {
  const double r = x.norm();
  return x * (R2 * (r - R1) / (R2 - R1) / r);
}

/// The cosh transform's explicit Cartesian map, unclamped formula.
inline Vec cosh_map(double r0, const Vec& x) {
  const double r = x.norm();
  double theta = std::atan2(x[1], x[0]);
  if (theta < 0.0) theta += 2.0 * kPi;
  const double t = (2.0 / kPi) * (theta - kPi);
  const double rp = (r + r0) / std::sqrt(1.0 - t * t);
  return vec2(rp * std::cos(theta), rp * std::sin(theta));
}

inline double relative_error(double got, double want) { return std::abs(got - want) / std::abs(want); }

}  // namespace fc_test
