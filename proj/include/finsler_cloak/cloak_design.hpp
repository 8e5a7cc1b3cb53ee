#pragma once

// Directional shield metric: regime metrics (flat, point-expansion cloak,
// cosh radial transform) blended by a direction weight f(theta).
//
// Every tensor is returned in Cartesian components. Polar tensors are
// conjugated by the local orthonormal polar frame.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "finsler_cloak/errors.hpp"
#include "finsler_cloak/linalg.hpp"
#include "finsler_cloak/metric_field.hpp"

namespace finsler_cloak {

/// Direction angle measured counterclockwise from +x, in [0, 2 pi).
inline double angle_of(const Vec& y) {
  if (y.head<2>().norm() < kMinDirectionNorm) {
    throw EvaluationError("angle of a vanishing direction", Vec::Zero(y.size()), y);
  }
  double theta = std::atan2(y[1], y[0]);
  if (theta < 0.0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;
  return theta;
}

inline double wrap_angle(double theta) {
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0.0) theta += kTwoPi;
  if (theta >= kTwoPi) theta = 0.0;
  return theta;
}

enum class WeightProfile {
  step,    // exact half-open step: 0 on [pi/2, 3pi/2)
  smooth,  // cubic smoothstep over bands centred at pi/2 and 3pi/2
  zero,    // f == 0: every direction sees the flat regime
  one,     // f == 1: every direction sees the cloak regime
};

struct DirectionWeight {
  WeightProfile profile = WeightProfile::smooth;
  double transition_width = 0.2;  // radians, smooth profile only

  void validate() const {
    if (profile == WeightProfile::smooth && !(transition_width > 0.0 && transition_width < kPi)) {
      throw DomainError("transition_width must lie in (0, pi)");
    }
  }
};

namespace detail {

inline double smoothstep(double s) {
  s = std::clamp(s, 0.0, 1.0);
  return s * s * (3.0 - 2.0 * s);
}

}  // namespace detail

/// f(theta) in [0, 1]. Outside the transition bands the smooth profile is
/// bitwise equal to the step profile.
inline double direction_weight(const DirectionWeight& f, double theta) {
  theta = wrap_angle(theta);
  switch (f.profile) {
    case WeightProfile::zero:
      return 0.0;
    case WeightProfile::one:
      return 1.0;
    case WeightProfile::smooth: {
      const double half = 0.5 * f.transition_width;
      const double up = 0.5 * kPi;
      const double down = 1.5 * kPi;
      if (std::abs(theta - up) < half) return detail::smoothstep((up + half - theta) / f.transition_width);
      if (std::abs(theta - down) < half) return detail::smoothstep((theta - (down - half)) / f.transition_width);
      [[fallthrough]];
    }
    case WeightProfile::step:
      return (theta >= 0.5 * kPi && theta < 1.5 * kPi) ? 0.0 : 1.0;
  }
  return 0.0;
}

/// r' = (r + r0) cosh(alpha(theta)), tanh(alpha) = (2/pi)(theta - pi), with
/// |tanh(alpha)| capped at alpha_clamp.
struct RadialCoshTransform {
  double r0 = 0.5;
  double alpha_clamp = 1.0 - 1e-3;

  void validate() const {
    if (!(r0 > 0.0)) throw DomainError("r0 must be positive");
    if (!(alpha_clamp > 0.0 && alpha_clamp < 1.0)) throw DomainError("alpha_clamp must lie in (0, 1)");
  }

  struct Radial {
    double value;  // r'
    double d_dr;   // dr'/dr
    double d_dtheta;
  };

  /// Clamped evaluation valid for any polar angle; alpha is constant where
  /// the clamp is active.
  Radial radial(double r, double theta) const {
    theta = wrap_angle(theta);
    const double raw = (2.0 / kPi) * (theta - kPi);
    const double c = std::clamp(raw, -alpha_clamp, alpha_clamp);
    const double sech_inv = 1.0 / std::sqrt(1.0 - c * c);  // cosh(atanh c)
    const double cosh_a = sech_inv;
    const double sinh_a = c * sech_inv;
    const double dalpha = std::abs(raw) < alpha_clamp ? (2.0 / kPi) / (1.0 - c * c) : 0.0;
    return {(r + r0) * cosh_a, cosh_a, (r + r0) * sinh_a * dalpha};
  }
};

/// Throws DomainError outside theta in (pi/2, 3pi/2).
inline double cosh_transform(const RadialCoshTransform& t, double r, double theta) {
  if (!(theta > 0.5 * kPi && theta < 1.5 * kPi)) {
    throw DomainError("cosh transform defined for theta in (pi/2, 3pi/2), got " + std::to_string(theta));
  }
  if (!(r >= 0.0)) throw DomainError("radius must be non-negative");
  return t.radial(r, theta).value;
}

/// Linear point expansion: virtual radius r' in [0, R2] is mapped to the
/// physical annulus r = R1 + r' (R2 - R1) / R2.
struct PointExpansionMap {
  double R1 = 1.0;
  double R2 = 2.0;

  void validate() const {
    if (!(R1 > 0.0 && R2 > R1)) throw DomainError("point expansion needs 0 < R1 < R2");
  }

  double physical_radius(double r_virtual) const { return R1 + r_virtual * (R2 - R1) / R2; }
  double virtual_radius(double r) const { return R2 * (r - R1) / (R2 - R1); }
  /// dr'/dr, constant for the linear map.
  double stretch() const { return R2 / (R2 - R1); }
};

/// A coordinate map x -> x' with the metric G of the target chart. The
/// Jacobian is optional; when absent it is taken by central differences.
struct CoordinateMap {
  int dimension = 2;
  std::function<Vec(const Vec&)> forward;
  std::function<Mat(const Vec&)> jacobian;
  std::function<Mat(const Vec&)> base_metric;
};

inline Mat map_jacobian(const CoordinateMap& map, const Vec& x, const FDConfig& fd = {}) {
  if (map.jacobian) return map.jacobian(x);
  const double h = fd.position_step(x);
  Mat J(map.dimension, map.dimension);
  for (int k = 0; k < map.dimension; ++k) {
    J.col(k) = detail::central_first(
        [&](double s) {
          Vec xs = x;
          xs[k] += s;
          return Vec(map.forward(xs));
        },
        h, fd.order);
  }
  return J;
}

/// g = J^T G(x') J: the metric of the target chart expressed in source
/// coordinates.
inline Mat pullback_metric(const CoordinateMap& map, const Vec& x, const FDConfig& fd = {}) {
  const Mat J = map_jacobian(map, x, fd);
  if (!J.allFinite()) throw SingularMapError("non-finite Jacobian at x=" + to_string(x));
  const double scale = std::max(1.0, J.cwiseAbs().maxCoeff());
  if (std::abs(J.determinant()) < 1e-14 * std::pow(scale, map.dimension)) {
    throw SingularMapError("singular Jacobian at x=" + to_string(x));
  }
  const Mat g = J.transpose() * map.base_metric(map.forward(x)) * J;
  if (!g.allFinite()) throw SingularMapError("non-finite pulled-back metric at x=" + to_string(x));
  return g;
}

/// Flat metric in polar coordinates (r, theta): diag(1, r^2).
inline std::function<Mat(const Vec&)> polar_flat_metric() {
  return [](const Vec& q) {
    Mat g = Mat::Identity(2, 2);
    g(1, 1) = q[0] * q[0];
    return g;
  };
}

/// (r, theta) -> (r', theta) of the point expansion, analytic Jacobian.
inline CoordinateMap point_expansion_polar_map(const PointExpansionMap& pem) {
  CoordinateMap m;
  m.forward = [pem](const Vec& q) { return vec2(pem.virtual_radius(q[0]), q[1]); };
  m.jacobian = [pem](const Vec&) {
    Mat J = Mat::Identity(2, 2);
    J(0, 0) = pem.stretch();
    return J;
  };
  m.base_metric = polar_flat_metric();
  return m;
}

/// Cartesian x -> r'(|x|) x/|x| with no analytic Jacobian; the pullback then
/// runs on central differences.
inline CoordinateMap point_expansion_cartesian_map(const PointExpansionMap& pem) {
  CoordinateMap m;
  m.forward = [pem](const Vec& x) {
    const double r = x.norm();
    return Vec(x * (pem.virtual_radius(r) / r));
  };
  m.base_metric = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  return m;
}

/// Cartesian x -> r'(r, theta) (cos theta, sin theta) of the cosh transform.
inline CoordinateMap cosh_cartesian_map(const RadialCoshTransform& t) {
  CoordinateMap m;
  m.forward = [t](const Vec& x) {
    const double r = x.norm();
    const double theta = angle_of(x);
    return Vec(x * (t.radial(r, theta).value / r));
  };
  m.base_metric = [](const Vec&) { return Mat(Mat::Identity(2, 2)); };
  return m;
}

namespace detail {

/// Cloak tensor from the point expansion, valid for any r > 0 (the annulus
/// formula continued smoothly past R1 and R2).
inline Mat cloak_tensor_extended(const PointExpansionMap& pem, const Vec& x) {
  const double r = x.head<2>().norm();
  if (!(r > 0.0)) throw SingularMapError("cloak tensor undefined at the origin");
  const double angular = pem.virtual_radius(r) / r;
  Mat polar = Mat::Zero(2, 2);
  polar(0, 0) = pem.stretch() * pem.stretch();
  polar(1, 1) = angular * angular;
  return polar_to_cartesian(polar, x.head<2>());
}

}  // namespace detail

/// Point-expansion cloak metric. Identity outside R2; undefined inside R1.
inline Mat regime_metric_L1(const PointExpansionMap& pem, const Vec& x) {
  const double r = x.head<2>().norm();
  if (r < pem.R1) throw ShieldInteriorError(r, pem.R1);
  if (r > pem.R2) return Mat::Identity(2, 2);
  return detail::cloak_tensor_extended(pem, x);
}

/// Pullback of the flat polar metric under (r, theta) -> (r', theta),
/// r' = (r + r0) cosh alpha(theta), in Cartesian components.
inline Mat regime_metric_L2(const RadialCoshTransform& t, const Vec& x) {
  const double r = x.head<2>().norm();
  if (!(r > 0.0)) throw SingularMapError("cosh transform metric undefined at the origin");
  const auto rad = t.radial(r, angle_of(x));

  // Coordinate-basis polar tensor J^T diag(1, r'^2) J.
  Mat J(2, 2);
  J << rad.d_dr, rad.d_dtheta, 0.0, 1.0;
  Mat base = Mat::Identity(2, 2);
  base(1, 1) = rad.value * rad.value;
  const Mat coord = J.transpose() * base * J;

  // d/dtheta = r theta-hat, so rescale to the orthonormal frame.
  Mat polar = coord;
  polar(0, 1) /= r;
  polar(1, 0) /= r;
  polar(1, 1) /= r * r;
  const Mat g = polar_to_cartesian(polar, x.head<2>());
  if (!g.allFinite()) throw SingularMapError("non-finite cosh transform metric at x=" + to_string(x));
  return g;
}

/// Direction-blended shield metric:
///   g(x, theta) = f(theta) g^L(x) + (1 - f(theta)) g^R
/// with g^R flat and g^L = L2 inside |x| < device_radius, L1 outside.
class BlendedShieldMetric {
 public:
  enum class Regime { flat, cloak, emitter };

  BlendedShieldMetric(PointExpansionMap cloak, RadialCoshTransform emitter, DirectionWeight weight,
                      double device_radius)
      : cloak_(cloak), emitter_(emitter), weight_(weight), device_radius_(device_radius) {
    cloak_.validate();
    emitter_.validate();
    weight_.validate();
    if (!(device_radius_ > 0.0)) throw DomainError("device radius must be positive");
    radii_ = {cloak_.R1, cloak_.R2, device_radius_};
    std::sort(radii_.begin(), radii_.end());
    radii_.erase(std::unique(radii_.begin(), radii_.end()), radii_.end());
  }

  const PointExpansionMap& cloak() const { return cloak_; }
  const RadialCoshTransform& emitter() const { return emitter_; }
  const DirectionWeight& weight() const { return weight_; }
  double device_radius() const { return device_radius_; }
  const std::vector<double>& interface_radii() const { return radii_; }

  int region_of(const Vec& x) const {
    const double r = x.head<2>().norm();
    return static_cast<int>(std::upper_bound(radii_.begin(), radii_.end(), r) - radii_.begin());
  }

  double weight_at(const Vec& y) const { return direction_weight(weight_, angle_of(y)); }

  /// Which regime the L-branch uses in a region.
  Regime directional_regime(int region) const {
    const double rep = representative_radius(region);
    if (rep < device_radius_) return Regime::emitter;
    return Regime::cloak;
  }

  /// g^L for the region, continued smoothly across the region's boundaries.
  Mat directional_tensor(int region, const Vec& x) const {
    const double rep = representative_radius(region);
    if (rep < device_radius_) return regime_metric_L2(emitter_, x);
    if (rep < cloak_.R1) throw ShieldInteriorError(x.head<2>().norm(), cloak_.R1);
    if (rep < cloak_.R2) return detail::cloak_tensor_extended(cloak_, x);
    return Mat::Identity(2, 2);
  }

  /// The Riemann metric seen by light travelling at angle theta.
  Mat slice_tensor(int region, const Vec& x, double theta) const {
    const double f = direction_weight(weight_, theta);
    if (f == 0.0) return Mat::Identity(2, 2);
    const Mat gl = directional_tensor(region, x);
    if (f == 1.0) return gl;
    return f * gl + (1.0 - f) * Mat::Identity(2, 2);
  }

  /// F(x, y) within one region. f == 0 and f == 1 take the pure-regime code
  /// paths so plateau values are exact.
  double evaluate(int region, const Vec& x, const Vec& y) const {
    const double f = weight_at(y);
    if (f == 0.0) return y.norm();
    const Mat gl = directional_tensor(region, x);
    const Mat g = (f == 1.0) ? gl : Mat(f * gl + (1.0 - f) * Mat::Identity(2, 2));
    if (!is_positive_definite(g)) {
      throw PositiveDefinitenessError(x, y, leading_minors(g), symmetric_eigenvalues(g));
    }
    return std::sqrt(y.dot(g * y));
  }

  double operator()(const Vec& x, const Vec& y) const { return evaluate(region_of(x), x, y); }

  MetricField field(std::string label = "asymmetric-shield") const {
    return MetricField(2, std::move(label), radii_,
                       [self = *this](int region, const Vec& x, const Vec& y) {
                         return self.evaluate(region, x, y);
                       });
  }

 private:
  double representative_radius(int region) const {
    if (radii_.empty()) return 1.0;
    if (region <= 0) return 0.5 * radii_.front();
    if (region >= static_cast<int>(radii_.size())) return radii_.back() + 1.0;
    return 0.5 * (radii_[region - 1] + radii_[region]);
  }

  PointExpansionMap cloak_;
  RadialCoshTransform emitter_;
  DirectionWeight weight_;
  double device_radius_;
  std::vector<double> radii_;
};

inline double blended_finsler(const BlendedShieldMetric& m, const Vec& x, const Vec& y) {
  if (y.norm() < kMinDirectionNorm) throw EvaluationError("direction shorter than y_min", x, y);
  return m(x, y);
}

/// The conventional (non-directional) cloak as a piecewise Riemann field:
/// cloak tensor on R1 <= |x| < R2, flat outside, ShieldInteriorError inside.
inline MetricField cloak_field(const PointExpansionMap& pem) {
  pem.validate();
  return riemann_metric(
      2, {pem.R1, pem.R2},
      [pem](int region, const Vec& x) -> Mat {
        if (region == 0) throw ShieldInteriorError(x.norm(), pem.R1);
        if (region == 1) return detail::cloak_tensor_extended(pem, x);
        return Mat::Identity(2, 2);
      },
      "cloak");
}

/// Cylindrical lift of the cloak to three dimensions; z is untransformed.
inline MetricField cloak_field_3d(const PointExpansionMap& pem) {
  pem.validate();
  return riemann_metric(
      3,
      [pem](const Vec& x) -> Mat {
        Mat g = Mat::Identity(3, 3);
        g.topLeftCorner(2, 2) = regime_metric_L1(pem, x);
        return g;
      },
      "cloak-3d");
}

}  // namespace finsler_cloak
