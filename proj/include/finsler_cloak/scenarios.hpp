#pragma once

// The asymmetric shield experiment: build the blended metric, launch ray
// fans from either side and measure whether leftward light passes straight
// while rightward light is steered around the shielded ball.

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "finsler_cloak/cloak_design.hpp"
#include "finsler_cloak/geodesic.hpp"
#include "finsler_cloak/metric_field.hpp"

namespace finsler_cloak {

enum class Heading { leftward, rightward };

inline const char* to_string(Heading h) { return h == Heading::leftward ? "leftward" : "rightward"; }

struct ShieldScenario {
  double R1 = 1.0;  // shielded region
  double R2 = 2.0;  // device
  double r0 = 0.5;
  double alpha_clamp = 1.0 - 1e-3;
  double launch_distance = 4.0;
  DirectionWeight weight;
  IntegratorConfig integrator;
  double tol_pass = 1e-6;
  double tol_block = 2e-2;

  void validate() const {
    if (!(R1 > 0.0 && R1 < R2 && R2 < launch_distance)) {
      throw DomainError("scenario needs 0 < R1 < R2 < launch_distance");
    }
    weight.validate();
    integrator.validate();
    if (!(tol_pass >= 0.0) || !(tol_block >= 0.0)) throw DomainError("tolerances must be non-negative");
  }
};

struct RayFan {
  std::vector<double> impact_parameters;
  Heading heading = Heading::rightward;

  /// `count` equally spaced rays inside [-half_width, half_width], ray k at
  /// -half_width + (k + stagger) * 2 half_width / count. A stagger of 1/2
  /// centres the fan; the default 1/4 keeps odd fans off the axis, where the
  /// ideal cloak is singular.
  static RayFan uniform(int count, double half_width, Heading heading, double stagger = 0.25) {
    if (count < 1) throw DomainError("fan needs at least one ray");
    if (!(half_width >= 0.0)) throw DomainError("fan half width must be non-negative");
    if (!(stagger >= 0.0 && stagger <= 1.0)) throw DomainError("fan stagger must lie in [0, 1]");
    RayFan fan;
    fan.heading = heading;
    const double cell = 2.0 * half_width / count;
    for (int k = 0; k < count; ++k) fan.impact_parameters.push_back(-half_width + (k + stagger) * cell);
    return fan;
  }
};

/// Blend of flat (f = 0), point-expansion cloak (f = 1, outside the shield)
/// and cosh transform (f = 1, inside the shield).
inline BlendedShieldMetric build_asymmetric_shield(const ShieldScenario& s) {
  s.validate();
  return BlendedShieldMetric(PointExpansionMap{s.R1, s.R2}, RadialCoshTransform{s.r0, s.alpha_clamp},
                             s.weight, s.R1);
}

inline RayState launch_state(const RayFan& fan, std::size_t k, double launch_distance) {
  const double b = fan.impact_parameters.at(k);
  if (fan.heading == Heading::leftward) return {0.0, vec2(launch_distance, b), vec2(-1.0, 0.0)};
  return {0.0, vec2(-launch_distance, b), vec2(1.0, 0.0)};
}

inline IntegratorConfig scenario_integrator(const ShieldScenario& s) {
  IntegratorConfig cfg = s.integrator;
  cfg.domain = Box::square(s.launch_distance);
  return cfg;
}

/// One trajectory per impact parameter, in fan order.
inline std::vector<Trajectory> trace_fan(const MetricField& F, const RayFan& fan, const ShieldScenario& s) {
  if (fan.impact_parameters.empty()) throw DomainError("empty ray fan");
  for (double b : fan.impact_parameters) {
    if (!(std::abs(b) < s.launch_distance)) throw DomainError("impact parameter outside launch window");
  }
  std::vector<RayState> starts;
  for (std::size_t k = 0; k < fan.impact_parameters.size(); ++k) {
    starts.push_back(launch_state(fan, k, s.launch_distance));
  }
  return integrate_all(F, starts, scenario_integrator(s));
}

namespace detail {

inline Vec hermite(const RayState& a, const RayState& b, double u) {
  const double dt = b.t - a.t;
  const double u2 = u * u, u3 = u2 * u;
  return (2 * u3 - 3 * u2 + 1) * a.position + (u3 - 2 * u2 + u) * dt * a.velocity +
         (-2 * u3 + 3 * u2) * b.position + (u3 - u2) * dt * b.velocity;
}

inline double golden_min_norm(const RayState& a, const RayState& b) {
  constexpr double kInvPhi = 0.6180339887498949;
  double lo = 0.0, hi = 1.0;
  double c = hi - kInvPhi * (hi - lo), d = lo + kInvPhi * (hi - lo);
  double fc = hermite(a, b, c).norm(), fd = hermite(a, b, d).norm();
  for (int it = 0; it < 60; ++it) {
    if (fc < fd) {
      hi = d;
      d = c;
      fd = fc;
      c = hi - kInvPhi * (hi - lo);
      fc = hermite(a, b, c).norm();
    } else {
      lo = c;
      c = d;
      fc = fd;
      d = lo + kInvPhi * (hi - lo);
      fd = hermite(a, b, d).norm();
    }
  }
  return std::min({fc, fd, a.position.norm(), b.position.norm()});
}

}  // namespace detail

/// Closest approach to the origin: the nearest sample, refined by a
/// golden-section search over the cubic Hermite interpolant of the two
/// bracketing segments.
inline double min_distance_to_center(const Trajectory& traj) {
  const auto& s = traj.samples;
  if (s.empty()) throw DomainError("empty trajectory");
  std::size_t best = 0;
  for (std::size_t i = 1; i < s.size(); ++i) {
    if (s[i].position.norm() < s[best].position.norm()) best = i;
  }
  double d = s[best].position.norm();
  if (best > 0 && s[best].t > s[best - 1].t) d = std::min(d, detail::golden_min_norm(s[best - 1], s[best]));
  if (best + 1 < s.size() && s[best + 1].t > s[best].t) {
    d = std::min(d, detail::golden_min_norm(s[best], s[best + 1]));
  }
  return d;
}

struct RayReport {
  int ray_id = 0;
  Heading heading = Heading::rightward;
  double impact_parameter = 0.0;
  double min_distance_to_center = 0.0;
  double lateral_offset = 0.0;
  double direction_deviation = 0.0;
  Termination terminated = Termination::max_steps;
};

struct ShieldReport {
  std::vector<RayReport> rays;
  std::optional<bool> pass_straight;  // over leftward rays; unset without any
  std::optional<bool> blocked;        // over rightward rays; unset without any
};

struct FanRun {
  RayFan fan;
  std::vector<Trajectory> trajectories;
};

/// Per-ray geometry plus the two aggregate verdicts. A ray only counts
/// toward a verdict if it crossed the whole domain.
inline ShieldReport analyze_shielding(std::span<const FanRun> runs, const ShieldScenario& s) {
  ShieldReport report;
  int id = 0;
  for (const FanRun& run : runs) {
    if (run.trajectories.size() != run.fan.impact_parameters.size()) {
      throw DomainError("trajectory count does not match the fan");
    }
    for (std::size_t k = 0; k < run.trajectories.size(); ++k) {
      const Trajectory& traj = run.trajectories[k];
      const RayState start = launch_state(run.fan, k, s.launch_distance);
      const Deviation dev = deviation_metrics(traj, {start.position, start.velocity});
      RayReport r;
      r.ray_id = id++;
      r.heading = run.fan.heading;
      r.impact_parameter = run.fan.impact_parameters[k];
      r.min_distance_to_center = min_distance_to_center(traj);
      r.lateral_offset = dev.lateral_offset;
      r.direction_deviation = dev.direction_deviation;
      r.terminated = traj.termination;
      report.rays.push_back(r);

      const bool crossed = traj.termination == Termination::left_domain;
      if (r.heading == Heading::leftward) {
        const bool straight = crossed && r.lateral_offset <= s.tol_pass && r.direction_deviation <= s.tol_pass;
        report.pass_straight = report.pass_straight.value_or(true) && straight;
      } else {
        const bool avoided = crossed && r.min_distance_to_center >= s.R1 * (1.0 - s.tol_block);
        report.blocked = report.blocked.value_or(true) && avoided;
      }
    }
  }
  return report;
}

/// Symmetric Hausdorff distance between a ray and the ray launched back
/// from its reversed exit state for the same parameter length. Near zero for
/// reciprocal media.
inline double retrace_miss(const MetricField& F, const Trajectory& forward, const ShieldScenario& s) {
  if (forward.samples.size() < 2) throw DomainError("retrace needs a traced ray");
  IntegratorConfig cfg = scenario_integrator(s);
  // The reversed start sits just outside the launch box.
  cfg.domain = Box::square(s.launch_distance + 1.0);
  const double duration = forward.samples.back().t - forward.samples.front().t;
  cfg.max_steps = std::max(1L, std::lround(duration / cfg.step));
  return path_distance(forward, integrate(F, reversed_final_state(forward), cfg));
}

}  // namespace finsler_cloak
