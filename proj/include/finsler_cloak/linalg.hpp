#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

namespace finsler_cloak {

// Dimension is 2 or 3; the fixed upper bound keeps these off the heap.
using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, 3, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, 3, 3>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

inline Vec vec3(double a, double b, double c) {
  Vec v(3);
  v << a, b, c;
  return v;
}

inline std::string to_string(const Vec& v) {
  std::ostringstream os;
  os.precision(17);
  os << "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) os << ", ";
    os << v[i];
  }
  os << ")";
  return os.str();
}

inline bool all_finite(const Vec& v) { return v.allFinite(); }

/// Leading principal minors of a d x d matrix, d <= 3.
inline std::vector<double> leading_minors(const Mat& g) {
  std::vector<double> minors;
  for (Eigen::Index k = 1; k <= g.rows(); ++k) {
    minors.push_back(g.topLeftCorner(k, k).determinant());
  }
  return minors;
}

/// Sylvester's criterion.
inline bool is_positive_definite(const Mat& g) {
  for (double m : leading_minors(g)) {
    if (!(m > 0.0)) return false;
  }
  return true;
}

inline std::vector<double> symmetric_eigenvalues(const Mat& g) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  std::vector<double> out;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    out.push_back(es.eigenvalues()[i]);
  }
  return out;
}

/// Orthonormal polar frame (r-hat, theta-hat) at a 2-D point, as columns.
inline Mat polar_frame(const Vec& x) {
  const double r = x.head<2>().norm();
  Mat frame(2, 2);
  const double c = x[0] / r;
  const double s = x[1] / r;
  frame << c, -s, s, c;
  return frame;
}

/// Cartesian components of a tensor given in the orthonormal polar frame.
inline Mat polar_to_cartesian(const Mat& orthonormal_polar, const Vec& x) {
  const Mat frame = polar_frame(x);
  return frame * orthonormal_polar * frame.transpose();
}

}  // namespace finsler_cloak
