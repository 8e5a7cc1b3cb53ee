#pragma once

// Built-in invariant suite run by `finsler_cloak validate`: homogeneity of the
// shipped fields, reduction of the medium pipeline to the closed-form
// cylindrical cloak, reduction of the spray to Riemann geodesics and
// straightness of flat rays.

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "finsler_cloak/cloak_design.hpp"
#include "finsler_cloak/geodesic.hpp"
#include "finsler_cloak/medium.hpp"
#include "finsler_cloak/metric_field.hpp"
#include "finsler_cloak/scenarios.hpp"

namespace finsler_cloak {

struct CheckResult {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
};

inline CheckResult make_check(std::string name, double residual, double tolerance, std::string detail = {}) {
  return {std::move(name), residual, tolerance, std::isfinite(residual) && residual <= tolerance, std::move(detail)};
}

namespace detail {

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec random_direction(std::mt19937_64& rng, double min_norm, double max_norm) {
  const double a = uniform(rng, 0.0, kTwoPi);
  return std::exp(uniform(rng, std::log(min_norm), std::log(max_norm))) * vec2(std::cos(a), std::sin(a));
}

/// A point with |x| in [r_min, r_max].
inline Vec random_point(std::mt19937_64& rng, double r_min, double r_max) {
  const double a = uniform(rng, 0.0, kTwoPi);
  return uniform(rng, r_min, r_max) * vec2(std::cos(a), std::sin(a));
}

}  // namespace detail

/// Test medium with a smooth bump: n(x) = 1 + a exp(-|x|^2 / w^2).
struct GaussianLens {
  double amplitude = 0.5;
  double width = 1.0;

  double operator()(const Vec& x) const { return 1.0 + amplitude * std::exp(-x.squaredNorm() / (width * width)); }

  Vec grad_log(const Vec& x) const {
    const double bump = amplitude * std::exp(-x.squaredNorm() / (width * width));
    return (-2.0 * bump / (width * width * (1.0 + bump))) * x;
  }

  /// Gamma^i_jk y^j y^k of g = n^2 delta: 2 y (y . grad ln n) - |y|^2 grad ln n.
  Vec christoffel_contraction(const Vec& x, const Vec& y) const {
    const Vec gl = grad_log(x);
    return 2.0 * y.dot(gl) * y - y.squaredNorm() * gl;
  }
};

/// Flat metric in polar coordinates q = (r, theta) and its Christoffel
/// contraction: Gamma^r = -r (y^theta)^2, Gamma^theta = 2 y^r y^theta / r.
inline Vec polar_christoffel_contraction(const Vec& q, const Vec& y) {
  return vec2(-q[0] * y[1] * y[1], 2.0 * y[0] * y[1] / q[0]);
}

inline CheckResult check_homogeneity_suite(const ShieldScenario& s, bool blended, int draws = 1000,
                                           unsigned long seed = 20240101) {
  std::mt19937_64 rng(seed);
  const PointExpansionMap pem{s.R1, s.R2};
  std::vector<MetricField> fields;
  if (blended) {
    fields.push_back(build_asymmetric_shield(s).field());
  } else {
    fields = {flat_metric(2), randers_metric(vec2(0.3, -0.2)), conformal_metric(2, GaussianLens{}),
              cloak_field(pem)};
  }
  double worst = 0.0;
  for (const MetricField& F : fields) {
    for (int i = 0; i < draws; ++i) {
      // Keep clear of the shield interior, where the cloak fields are undefined.
      const Vec x = detail::random_point(rng, s.R1 * 1.001, s.launch_distance);
      const Vec y = detail::random_direction(rng, 1e-2, 1e2);
      const double lambda = std::exp(detail::uniform(rng, std::log(1e-2), std::log(1e2)));
      worst = std::max(worst, check_homogeneity(F, x, y, lambda));
    }
  }
  return make_check(blended ? "homogeneity/blended" : "homogeneity/analytic", worst, blended ? 1e-8 : 1e-10,
                    std::to_string(draws) + " draws per field");
}

/// The medium pipeline on the point-expansion cloak (central-difference
/// Jacobian of the Cartesian map, pullback, principal indices, materials)
/// against the closed-form cylindrical cloak. Residual is the worst relative
/// error over every eps and mu component.
inline CheckResult check_pendry_reduction(const ShieldScenario& s, const FDConfig& fd, int radii = 100) {
  const PointExpansionMap pem{s.R1, s.R2};
  const CoordinateMap map = point_expansion_cartesian_map(pem);
  const MetricField F = riemann_metric(2, [&](const Vec& x) { return pullback_metric(map, x, fd); }, "pendry-fd");
  const double lo = s.R1 + 1e-3;
  double worst = 0.0;
  for (int k = 0; k < radii; ++k) {
    const double r = lo + (s.R2 - lo) * (k + 1) / radii;
    const double phi = 2.399963229728653 * k;  // golden angle spreads the azimuths
    const Vec x = r * vec2(std::cos(phi), std::sin(phi));
    const MaterialTensors got = principal_materials(F, x, 1.0, fd);
    const MaterialTensors want = pendry_parameters(pem, r);
    for (int i = 0; i < 3; ++i) {
      worst = std::max(worst, std::abs(got.epsilon[i] / want.epsilon[i] - 1.0));
      worst = std::max(worst, std::abs(got.mu[i] / want.mu[i] - 1.0));
    }
  }
  return make_check("pendry-reduction", worst, 1e-5, std::to_string(radii) + " radii");
}

/// Spray of sqrt(y^T g y) against analytic Christoffel symbols for the
/// polar flat metric and a conformal lens.
inline CheckResult check_riemann_reduction(const FDConfig& fd, int points = 100, unsigned long seed = 7) {
  std::mt19937_64 rng(seed);
  const MetricField polar = riemann_metric(2, polar_flat_metric(), "polar");
  const GaussianLens lens;
  const MetricField conformal = conformal_metric(2, lens);
  double worst = 0.0;
  for (int i = 0; i < points; ++i) {
    const Vec q = vec2(detail::uniform(rng, 0.5, 3.0), detail::uniform(rng, -kPi, kPi));
    const Vec yq = detail::random_direction(rng, 0.5, 2.0);
    worst = std::max(worst, (spray_acceleration(polar, q, yq, fd) + polar_christoffel_contraction(q, yq)).norm());

    const Vec x = detail::random_point(rng, 0.0, 2.5);
    const Vec y = detail::random_direction(rng, 0.5, 2.0);
    worst = std::max(worst, (spray_acceleration(conformal, x, y, fd) + lens.christoffel_contraction(x, y)).norm());
  }
  return make_check("riemann-reduction", worst, 1e-4, std::to_string(points) + " points per metric");
}

/// Largest distance of any sample from the launch line.
inline double straightness_deviation(const Trajectory& traj) {
  const RayState& start = traj.samples.front();
  const Vec d = start.velocity.normalized();
  double worst = 0.0;
  for (const RayState& s : traj.samples) {
    const Vec rel = s.position - start.position;
    worst = std::max(worst, (rel - rel.dot(d) * d).norm());
  }
  return worst;
}

inline CheckResult check_flat_straightness(const FDConfig& fd) {
  IntegratorConfig cfg;
  cfg.step = 1e-2;
  cfg.max_steps = 1000;  // parameter length 10 at unit speed
  cfg.domain = Box::square(100.0);
  cfg.fd = fd;
  const MetricField F = flat_metric(2);
  double worst = 0.0;
  for (double heading : {0.0, 0.3, 2.0, 4.4}) {
    const RayState start{0.0, vec2(0.7, -1.3), vec2(std::cos(heading), std::sin(heading))};
    const Trajectory traj = integrate(F, start, cfg);
    if (traj.termination != Termination::max_steps) {
      return make_check("flat-straightness", std::numeric_limits<double>::infinity(), 1e-9,
                        std::string("ray stopped early: ") + to_string(traj.termination));
    }
    worst = std::max(worst, straightness_deviation(traj));
  }
  return make_check("flat-straightness", worst, 1e-9, "length 10 at h = 1e-2");
}

/// Runs every check; a check that throws is reported as failed.
inline std::vector<CheckResult> run_validation(const ShieldScenario& s, const FDConfig& fd) {
  std::vector<CheckResult> out;
  auto guarded = [&](const char* name, auto&& run) {
    try {
      out.push_back(run());
    } catch (const std::exception& e) {
      out.push_back({name, std::numeric_limits<double>::infinity(), 0.0, false, e.what()});
    }
  };
  guarded("homogeneity/analytic", [&] { return check_homogeneity_suite(s, false); });
  guarded("homogeneity/blended", [&] { return check_homogeneity_suite(s, true); });
  guarded("pendry-reduction", [&] { return check_pendry_reduction(s, fd); });
  guarded("riemann-reduction", [&] { return check_riemann_reduction(fd); });
  guarded("flat-straightness", [&] { return check_flat_straightness(fd); });
  return out;
}

}  // namespace finsler_cloak
