#pragma once

// Finsler geodesics. The spray solves the Euler-Lagrange equations of the
// energy E = F^2/2,
//
//   g_ij(x, y) a^j = dE/dx^i - (d^2 E / dy^i dx^k) y^k,
//
// which for F-unit-speed curves is the full geodesic equation (the
// d log F/dt term vanishes). Rays are integrated with fixed-step RK4 and
// periodically projected back to constant speed.
//
// Piecewise fields jump across circles |x| = R. There the integrator stops
// on the interface, conserves the tangential component of dF/dy together
// with F itself, and continues on the other side (or reflects when no
// transmitted direction exists).

#include <algorithm>
#include <array>
#include <cmath>
#include <future>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "finsler_cloak/errors.hpp"
#include "finsler_cloak/linalg.hpp"
#include "finsler_cloak/metric_field.hpp"

namespace finsler_cloak {

inline constexpr double kMaxConditionNumber = 1e12;

struct RayState {
  double t = 0.0;
  Vec position;
  Vec velocity;
};

enum class Termination {
  left_domain,
  max_steps,
  convexity_failure,
  evaluation_failure,
};

inline const char* to_string(Termination t) {
  switch (t) {
    case Termination::left_domain: return "left_domain";
    case Termination::max_steps: return "max_steps";
    case Termination::convexity_failure: return "convexity_failure";
    case Termination::evaluation_failure: return "evaluation_failure";
  }
  return "unknown";
}

struct Trajectory {
  std::vector<RayState> samples;
  Termination termination = Termination::max_steps;
  std::string detail;  // error message for failure terminations
  int interface_crossings = 0;
};

struct Box {
  Vec lower;
  Vec upper;

  bool contains(const Vec& x) const {
    return (x.array() >= lower.array()).all() && (x.array() <= upper.array()).all();
  }

  static Box square(double half_width, int dimension = 2) {
    return {Vec::Constant(dimension, -half_width), Vec::Constant(dimension, half_width)};
  }
};

struct IntegratorConfig {
  double step = 1e-3;
  long max_steps = 100000;
  int renorm_every = 16;
  Box domain = Box::square(10.0);
  FDConfig fd;
  /// Target F-speed of the ray; 1 is the unit-speed (arc length) convention.
  double speed = 1.0;

  void validate() const {
    if (!(step > 0.0)) throw DomainError("integrator step must be positive");
    if (max_steps < 1) throw DomainError("max_steps must be at least 1");
    if (renorm_every < 1) throw DomainError("renorm_every must be at least 1");
    if (!(speed > 0.0)) throw DomainError("ray speed must be positive");
    fd.validate();
  }
};

// --- Spray ------------------------------------------------------------------

namespace detail {

/// dE/dy within one region.
inline Vec energy_momentum(const MetricField& F, int region, const Vec& x, const Vec& y, double h, int order) {
  const auto d = y.size();
  Vec p(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    p[i] = central_first(
        [&](double s) {
          Vec v = y;
          v[i] += s;
          const double f = F.in_region(region, x, v);
          return 0.5 * f * f;
        },
        h, order);
  }
  return p;
}

inline Vec solve_spd(const Mat& g, const Vec& rhs, const Vec& x, const Vec& y) {
  Eigen::SelfAdjointEigenSolver<Mat> es(g, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  const double cond = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (cond > kMaxConditionNumber) throw IllConditionedError(x, y, cond);
  return g.partialPivLu().solve(rhs);
}

}  // namespace detail

/// Geodesic acceleration a(x, y) within one smooth piece of the field.
inline Vec spray_acceleration(const MetricField& F, int region, const Vec& x, const Vec& y,
                              const FDConfig& cfg = {}) {
  const Mat g = metric_tensor(F, region, x, y, cfg).entries;
  const auto d = x.size();
  const double hx = cfg.position_step(x);
  const double hy = cfg.direction_step(y);
  auto energy = [&](const Vec& xx) {
    const double f = F.in_region(region, xx, y);
    return 0.5 * f * f;
  };

  Vec rhs(d);
  for (Eigen::Index k = 0; k < d; ++k) {
    rhs[k] = detail::central_first(
        [&](double s) {
          Vec xs = x;
          xs[k] += s;
          return energy(xs);
        },
        hx, cfg.order);
  }
  // (d^2 E/dy dx^k) y^k is the derivative of dE/dy along the ray direction.
  const Vec yhat = y / y.norm();
  const Vec mixed = detail::central_first(
      [&](double s) { return detail::energy_momentum(F, region, Vec(x + s * yhat), y, hy, cfg.order); }, hx,
      cfg.order);
  rhs -= y.norm() * mixed;

  const Vec a = detail::solve_spd(g, rhs, x, y);
  if (!a.allFinite()) throw EvaluationError("non-finite spray", x, y);
  return a;
}

inline Vec spray_acceleration(const MetricField& F, const Vec& x, const Vec& y,
                              const FDConfig& cfg = {}) {
  return spray_acceleration(F, F.region_of(x), x, y, cfg);
}

// --- Interface refraction -----------------------------------------------------

namespace detail {

/// dF/dy within one region.
inline Vec metric_gradient(const MetricField& F, int region, const Vec& x, const Vec& y, double h, int order) {
  Vec p(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    p[i] = central_first(
        [&](double s) {
          Vec v = y;
          v[i] += s;
          return F.in_region(region, x, v);
        },
        h, order);
  }
  return p;
}

/// Direction on the unit circle u(psi) = cos(psi) n + sin(psi) t whose
/// momentum dF/dy has tangential component `target`; empty when the target
/// lies outside the attainable range.
inline std::optional<Vec> match_tangential_momentum(const MetricField& F, int region, const Vec& x,
                                                    const Vec& normal, const Vec& tangent,
                                                    double target, double h, int order) {
  auto direction = [&](double psi) { return Vec(std::cos(psi) * normal + std::sin(psi) * tangent); };
  auto momentum = [&](double psi) { return metric_gradient(F, region, x, direction(psi), h, order).dot(tangent); };
  constexpr double kGrazing = 1e-7;
  double lo = -0.5 * kPi + kGrazing;
  double hi = 0.5 * kPi - kGrazing;
  const double m_lo = momentum(lo);
  const double m_hi = momentum(hi);
  if (target < m_lo || target > m_hi) return std::nullopt;
  for (int it = 0; it < 100 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (momentum(mid) < target ? lo : hi) = mid;
  }
  return direction(0.5 * (lo + hi));
}

}  // namespace detail

struct RefractionResult {
  Vec velocity;
  int region;
  bool reflected = false;
};

/// Continues a ray across the interface between two regions of a 2-D field.
/// `normal` is the unit interface normal pointing into `to_region`. The
/// outgoing velocity keeps F(x, v) and the tangential part of dF/dy.
inline RefractionResult refract(const MetricField& F, int from_region, int to_region, const Vec& x,
                                const Vec& velocity, const Vec& normal, const FDConfig& fd = {}) {
  if (F.dimension() != 2) throw DomainError("interface refraction is implemented for d = 2");
  const double h = fd.direction_step(velocity);
  const double speed = F.in_region(from_region, x, velocity);
  const double speed_other = F.in_region(to_region, x, velocity);
  const Vec p_in = detail::metric_gradient(F, from_region, x, velocity, h, fd.order);
  const Vec p_other = detail::metric_gradient(F, to_region, x, velocity, h, fd.order);

  // Metric continuous in this direction: pass straight through.
  if (speed == speed_other && p_in == p_other) return {velocity, to_region, false};

  const double hu = fd.h_y;
  const Vec tangent = vec2(-normal[1], normal[0]);
  const double target = p_in.dot(tangent);
  if (auto u = detail::match_tangential_momentum(F, to_region, x, normal, tangent, target, hu, fd.order)) {
    return {Vec(*u * (speed / F.in_region(to_region, x, *u))), to_region, false};
  }
  const Vec back = -normal;
  const Vec back_tangent = vec2(-back[1], back[0]);
  auto u = detail::match_tangential_momentum(F, from_region, x, back, back_tangent,
                                             p_in.dot(back_tangent), hu, fd.order);
  if (!u) throw EvaluationError("no reflected direction at interface", x, velocity);
  return {Vec(*u * (speed / F.in_region(from_region, x, *u))), from_region, true};
}

// --- Integration --------------------------------------------------------------

namespace detail {

/// Keeps sample times strictly increasing: a sample that lands within
/// rounding of its predecessor replaces it.
inline void append_sample(Trajectory& out, const RayState& s) {
  if (!out.samples.empty() && !(s.t > out.samples.back().t)) {
    out.samples.back() = s;
    return;
  }
  out.samples.push_back(s);
}

struct Phase {
  Vec x;
  Vec v;
};

inline Phase rk4_step(const MetricField& F, int region, const Phase& s, double h, const FDConfig& fd) {
  auto accel = [&](const Vec& x, const Vec& v) { return spray_acceleration(F, region, x, v, fd); };
  const Vec k1x = s.v;
  const Vec k1v = accel(s.x, s.v);
  const Vec k2x = s.v + 0.5 * h * k1v;
  const Vec k2v = accel(Vec(s.x + 0.5 * h * k1x), k2x);
  const Vec k3x = s.v + 0.5 * h * k2v;
  const Vec k3v = accel(Vec(s.x + 0.5 * h * k2x), k3x);
  const Vec k4x = s.v + h * k3v;
  const Vec k4v = accel(Vec(s.x + h * k3x), k4x);
  return {Vec(s.x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)),
          Vec(s.v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v))};
}

class RayIntegrator {
 public:
  RayIntegrator(const MetricField& F, const IntegratorConfig& cfg) : F_(F), cfg_(cfg) {}

  /// Advances by h, splitting the step at interface crossings. Crossing
  /// points are appended to `out`.
  void advance(Phase& s, int& region, double& t, double h, Trajectory& out) const {
    for (int crossings = 0;; ++crossings) {
      const Phase trial = rk4_step(F_, region, s, h, cfg_.fd);
      const int landed = F_.region_of(trial.x);
      if (landed == region || crossings >= 8) {
        s = trial;
        t += h;
        return;
      }
      const auto& radii = F_.interface_radii();
      const bool outward = landed > region;
      const double radius = outward ? radii[region] : radii[region - 1];
      const double side = outward ? -1.0 : 1.0;  // sign of |x| - R on the current side
      if (side * (s.x.norm() - radius) <= 0.0) {
        // Still on the interface after a refraction: rounding, not a crossing.
        s = trial;
        t += h;
        return;
      }

      double lo = 0.0, hi = 1.0;
      Phase at = s;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        const Phase p = rk4_step(F_, region, s, mid * h, cfg_.fd);
        const double phi = side * (p.x.norm() - radius);
        if (phi >= 0.0) {
          lo = mid;
          at = p;
        } else {
          hi = mid;
        }
        if ((hi - lo) * h < 1e-15) break;
      }
      s = at;
      t += lo * h;
      h *= (1.0 - lo);
      if (lo > 0.0) append_sample(out, {t, s.x, s.v});

      const int next = outward ? region + 1 : region - 1;
      const Vec normal = (outward ? 1.0 : -1.0) * s.x / s.x.norm();
      const RefractionResult r = refract(F_, region, next, s.x, s.v, normal, cfg_.fd);
      s.v = r.velocity;
      region = r.region;
      ++out.interface_crossings;
      if (h <= 0.0) return;
    }
  }

  void renormalize(Phase& s, int region) const {
    s.v *= cfg_.speed / F_.in_region(region, s.x, s.v);
  }

 private:
  const MetricField& F_;
  const IntegratorConfig& cfg_;
};

}  // namespace detail

/// Traces a ray with fixed-step RK4 on (x, v). Never throws mid-path: the
/// reason a ray stopped is recorded in Trajectory::termination.
inline Trajectory integrate(const MetricField& F, const RayState& start, const IntegratorConfig& cfg) {
  cfg.validate();
  if (F.is_piecewise() && F.dimension() != 2) {
    throw DomainError("piecewise fields are integrated in two dimensions only");
  }
  Trajectory out;
  detail::Phase s{start.position, start.velocity};
  double t = start.t;
  int region = F.region_of(s.x);
  detail::RayIntegrator stepper(F, cfg);

  auto fail = [&](Termination why, const std::exception& e) {
    out.termination = why;
    out.detail = e.what();
    return out;
  };

  try {
    detail::check_arguments(F, s.x, s.v);
    stepper.renormalize(s, region);
  } catch (const Error& e) {
    out.samples.push_back(start);
    return fail(Termination::evaluation_failure, e);
  }
  out.samples.push_back({t, s.x, s.v});
  if (!cfg.domain.contains(s.x)) {
    out.termination = Termination::left_domain;
    return out;
  }

  for (long step = 1; step <= cfg.max_steps; ++step) {
    try {
      stepper.advance(s, region, t, cfg.step, out);
      if (step % cfg.renorm_every == 0) stepper.renormalize(s, region);
    } catch (const PositiveDefinitenessError& e) {
      return fail(Termination::convexity_failure, e);
    } catch (const IllConditionedError& e) {
      return fail(Termination::convexity_failure, e);
    } catch (const Error& e) {
      return fail(Termination::evaluation_failure, e);
    }
    detail::append_sample(out, {t, s.x, s.v});
    if (!cfg.domain.contains(s.x)) {
      out.termination = Termination::left_domain;
      return out;
    }
  }
  out.termination = Termination::max_steps;
  return out;
}

/// Integrates independent rays concurrently; results are in launch order.
inline std::vector<Trajectory> integrate_all(const MetricField& F, std::span<const RayState> starts,
                                             const IntegratorConfig& cfg) {
  std::vector<Trajectory> out(starts.size());
  const std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  if (workers == 1 || starts.size() < 2) {
    for (std::size_t i = 0; i < starts.size(); ++i) out[i] = integrate(F, starts[i], cfg);
    return out;
  }
  std::vector<std::future<void>> jobs;
  for (std::size_t w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < starts.size(); i += workers) out[i] = integrate(F, starts[i], cfg);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

// --- Reference geometry ---------------------------------------------------------

using Christoffel = std::vector<Mat>;  // gamma[i](j, k) = Gamma^i_jk

/// Christoffel symbols of a Riemann metric by central differences of g.
inline Christoffel christoffel_symbols(const TensorFunction& g, const Vec& x, const FDConfig& fd = {}) {
  const auto d = x.size();
  const double h = fd.position_step(x);
  std::vector<Mat> dg(d);  // dg[l] = d g / dx^l
  for (Eigen::Index l = 0; l < d; ++l) {
    dg[l] = detail::central_first(
        [&](double s) {
          Vec xs = x;
          xs[l] += s;
          return Mat(g(xs));
        },
        h, fd.order);
  }
  const Mat ginv = g(x).inverse();
  Christoffel gamma(d, Mat::Zero(d, d));
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      for (Eigen::Index k = 0; k < d; ++k) {
        double sum = 0.0;
        for (Eigen::Index l = 0; l < d; ++l) {
          sum += ginv(i, l) * (dg[j](l, k) + dg[k](l, j) - dg[l](j, k));
        }
        gamma[i](j, k) = 0.5 * sum;
      }
    }
  }
  return gamma;
}

inline Vec contract(const Christoffel& gamma, const Vec& y) {
  Vec out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = y.dot(gamma[i] * y);
  return out;
}

/// |spray(riemann_metric(g)) + Gamma(y, y)|: how far the Finsler spray is
/// from the Riemann geodesic equation.
inline double riemann_reduction_check(const TensorFunction& g, const Vec& x, const Vec& y,
                                      const FDConfig& fd = {}) {
  const MetricField F = riemann_metric(static_cast<int>(x.size()), g);
  const Vec a = spray_acceleration(F, x, y, fd);
  return (a + contract(christoffel_symbols(g, x, fd), y)).norm();
}

// --- Trajectory measurements ----------------------------------------------------

struct Line {
  Vec point;
  Vec direction;
};

struct Deviation {
  double lateral_offset;
  double direction_deviation;  // radians
};

inline Deviation deviation_metrics(const Trajectory& traj, const Line& reference) {
  if (traj.samples.empty()) throw DomainError("empty trajectory");
  const RayState& last = traj.samples.back();
  const Vec d = reference.direction.normalized();
  const Vec rel = last.position - reference.point;
  const double lateral = (rel - rel.dot(d) * d).norm();
  const Vec v = last.velocity.normalized();
  const double along = v.dot(d);
  const double across = (v - along * d).norm();
  return {lateral, std::atan2(across, along)};
}

namespace detail {

inline double point_segment_distance(const Vec& p, const Vec& a, const Vec& b) {
  const Vec ab = b - a;
  const double len2 = ab.squaredNorm();
  const double s = len2 > 0.0 ? std::clamp((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  return (p - (a + s * ab)).norm();
}

inline double directed_hausdorff(const Trajectory& from, const Trajectory& to) {
  double worst = 0.0;
  const auto& pts = to.samples;
  for (const RayState& s : from.samples) {
    double best = std::numeric_limits<double>::infinity();
    if (pts.size() == 1) best = (s.position - pts[0].position).norm();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      best = std::min(best, point_segment_distance(s.position, pts[i].position, pts[i + 1].position));
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace detail

/// Symmetric Hausdorff distance between two sampled paths.
inline double path_distance(const Trajectory& a, const Trajectory& b) {
  return std::max(detail::directed_hausdorff(a, b), detail::directed_hausdorff(b, a));
}

/// The final state of a trajectory with its velocity reversed.
inline RayState reversed_final_state(const Trajectory& traj) {
  RayState s = traj.samples.back();
  s.velocity = -s.velocity;
  s.t = 0.0;
  return s;
}

}  // namespace finsler_cloak
