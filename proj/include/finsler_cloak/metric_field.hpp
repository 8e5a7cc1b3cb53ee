#pragma once

// Finsler metric fields F(x, y): evaluation, the fundamental tensor
// g_ij = 1/2 d^2(F^2)/dy^i dy^j by central differences, homogeneity
// diagnostics and Finsler path length.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "finsler_cloak/errors.hpp"
#include "finsler_cloak/linalg.hpp"

namespace finsler_cloak {

/// F is not differentiable at y = 0; shorter directions are rejected.
inline constexpr double kMinDirectionNorm = 1e-8;

/// Central-difference settings. Effective steps scale with the argument:
/// h_y * max(1, |y|) and h_x * max(1, |x|). The tensor and the spray's mixed
/// term are second differences whose rounding error grows like eps / h^2, so
/// the default is the fourth-order stencil on a comparatively wide step.
struct FDConfig {
  double h_y = 1e-3;
  double h_x = 1e-3;
  int order = 4;  // 2 or 4

  double direction_step(const Vec& y) const { return h_y * std::max(1.0, y.norm()); }
  double position_step(const Vec& x) const { return h_x * std::max(1.0, x.norm()); }

  void validate() const {
    if (!(h_y > 0.0 && h_y < 1.0) || !(h_x > 0.0 && h_x < 1.0)) {
      throw DomainError("finite-difference steps must lie in (0, 1)");
    }
    if (order != 2 && order != 4) throw DomainError("finite-difference order must be 2 or 4");
  }
};

namespace detail {

/// d/ds f(s) at s = 0. f may return a scalar, vector or matrix.
template <class Fn>
auto central_first(Fn&& f, double h, int order) {
  using T = std::decay_t<decltype(f(0.0))>;
  const T d1 = f(h) - f(-h);
  if (order == 2) return T(d1 / (2.0 * h));
  const T d2 = f(2.0 * h) - f(-2.0 * h);
  return T((8.0 * d1 - d2) / (12.0 * h));
}

/// d^2/ds^2 f(s) at s = 0, given f(0).
template <class Fn>
double central_second(Fn&& f, double f0, double h, int order) {
  const double s1 = f(h) + f(-h);
  if (order == 2) return (s1 - 2.0 * f0) / (h * h);
  const double s2 = f(2.0 * h) + f(-2.0 * h);
  return (16.0 * s1 - s2 - 30.0 * f0) / (12.0 * h * h);
}

/// d^2/(ds dt) f(s, t) at 0; the fourth-order form is a Richardson
/// combination of the four-point stencil at h and 2h.
template <class Fn>
double central_mixed(Fn&& f, double h, int order) {
  auto cross = [&](double k) { return (f(k, k) - f(k, -k) - f(-k, k) + f(-k, -k)) / (4.0 * k * k); };
  const double m1 = cross(h);
  if (order == 2) return m1;
  return (4.0 * m1 - cross(2.0 * h)) / 3.0;
}

}  // namespace detail

/// Position- and direction-dependent length element. Immutable and cheap to
/// copy; evaluation is thread-safe.
///
/// A field may be piecewise smooth across concentric circles |x| = radii[k].
/// Region k is radii[k-1] <= |x| < radii[k]. The region evaluator must extend
/// each piece smoothly a little past its boundaries so that difference
/// stencils and integrator stages never straddle a jump.
class MetricField {
 public:
  using Evaluator = std::function<double(const Vec&, const Vec&)>;
  using RegionEvaluator = std::function<double(int, const Vec&, const Vec&)>;

  MetricField(int dimension, std::string label, Evaluator f)
      : MetricField(dimension, std::move(label), {},
                    [f = std::move(f)](int, const Vec& x, const Vec& y) { return f(x, y); }) {}

  MetricField(int dimension, std::string label, std::vector<double> radii, RegionEvaluator f)
      : impl_(std::make_shared<const Impl>(
            Impl{dimension, std::move(label), std::move(radii), std::move(f)})) {
    if (dimension != 2 && dimension != 3) throw DomainError("dimension must be 2 or 3");
    if (!std::is_sorted(impl_->radii.begin(), impl_->radii.end())) {
      throw DomainError("interface radii must be ascending");
    }
  }

  double operator()(const Vec& x, const Vec& y) const { return impl_->f(region_of(x), x, y); }

  double in_region(int region, const Vec& x, const Vec& y) const {
    return impl_->f(region, x, y);
  }

  int region_of(const Vec& x) const {
    const double r = x.norm();
    const auto& radii = impl_->radii;
    return static_cast<int>(std::upper_bound(radii.begin(), radii.end(), r) - radii.begin());
  }

  int dimension() const { return impl_->dimension; }
  const std::string& label() const { return impl_->label; }
  const std::vector<double>& interface_radii() const { return impl_->radii; }
  bool is_piecewise() const { return !impl_->radii.empty(); }

 private:
  struct Impl {
    int dimension;
    std::string label;
    std::vector<double> radii;
    RegionEvaluator f;
  };
  std::shared_ptr<const Impl> impl_;
};

namespace detail {

inline void check_arguments(const MetricField& F, const Vec& x, const Vec& y) {
  if (x.size() != F.dimension() || y.size() != F.dimension()) {
    throw EvaluationError("dimension mismatch for field '" + F.label() + "'", x, y);
  }
  if (!x.allFinite() || !y.allFinite()) {
    throw EvaluationError("non-finite argument", x, y);
  }
  if (y.norm() < kMinDirectionNorm) {
    throw EvaluationError("direction shorter than y_min", x, y);
  }
}

inline double checked_value(double value, const Vec& x, const Vec& y) {
  if (!std::isfinite(value)) throw EvaluationError("non-finite metric value", x, y);
  return value;
}

}  // namespace detail

/// F(x, y) with argument and result validation.
inline double eval_metric(const MetricField& F, const Vec& x, const Vec& y) {
  detail::check_arguments(F, x, y);
  const double value = detail::checked_value(F(x, y), x, y);
  if (!(value > 0.0)) throw EvaluationError("metric value not positive", x, y);
  return value;
}

struct MetricTensor {
  Mat entries;
  Vec base_point;
  Vec base_direction;
  /// max |g_ij - g_ji| before symmetrization.
  double asymmetry = 0.0;
};

/// Half the direction-Hessian of F^2 within one smooth piece of the field.
/// Does not check positive definiteness.
inline MetricTensor fundamental_tensor_raw(const MetricField& F, int region, const Vec& x,
                                           const Vec& y, const FDConfig& cfg) {
  const auto d = y.size();
  const double h = cfg.direction_step(y);
  auto energy = [&](const Vec& v) {
    const double f = F.in_region(region, x, v);
    return 0.5 * f * f;
  };

  const double e0 = energy(y);
  Mat hess(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    hess(i, i) = detail::central_second(
        [&](double si) {
          Vec v = y;
          v[i] += si;
          return energy(v);
        },
        e0, h, cfg.order);
  }
  // Each ordered pair separately: the perturbation order differs, so the raw
  // matrix carries a rounding-level asymmetry worth reporting.
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      if (i == j) continue;
      hess(i, j) = detail::central_mixed(
          [&](double si, double sj) {
            Vec v = y;
            v[i] += si;
            v[j] += sj;
            return energy(v);
          },
          h, cfg.order);
    }
  }

  MetricTensor out;
  out.asymmetry = (hess - hess.transpose()).cwiseAbs().maxCoeff();
  out.entries = 0.5 * (hess + hess.transpose());
  out.base_point = x;
  out.base_direction = y;
  if (!out.entries.allFinite()) throw EvaluationError("finite-difference overflow", x, y);
  return out;
}

/// g_ij(x, y) = 1/2 (F^2)_{y^i y^j}. Throws PositiveDefinitenessError when F
/// is not strongly convex at (x, y).
inline MetricTensor metric_tensor(const MetricField& F, int region, const Vec& x, const Vec& y,
                                  const FDConfig& cfg = {}) {
  detail::check_arguments(F, x, y);
  MetricTensor g = fundamental_tensor_raw(F, region, x, y, cfg);
  if (!is_positive_definite(g.entries)) {
    throw PositiveDefinitenessError(x, y, leading_minors(g.entries),
                                    symmetric_eigenvalues(g.entries));
  }
  return g;
}

inline MetricTensor metric_tensor(const MetricField& F, const Vec& x, const Vec& y,
                                  const FDConfig& cfg = {}) {
  return metric_tensor(F, F.region_of(x), x, y, cfg);
}

/// |F(x, l y) - l F(x, y)| / (l F(x, y)); zero for an exactly 1-homogeneous F.
inline double check_homogeneity(const MetricField& F, const Vec& x, const Vec& y, double lambda) {
  if (!(lambda > 0.0)) throw DomainError("homogeneity scale must be positive");
  const double base = lambda * eval_metric(F, x, y);
  const double scaled = eval_metric(F, x, Vec(lambda * y));
  return std::abs(scaled - base) / base;
}

struct PathSample {
  double t;
  Vec x;
};

struct PathLength {
  double length = 0.0;
  int skipped_segments = 0;
};

/// Composite trapezoid over the sampled path, each segment weighted by its
/// chord: 1/2 (F(x_i, dx) + F(x_{i+1}, dx)). Zero-length segments are skipped
/// and counted.
inline PathLength path_length(const MetricField& F, std::span<const PathSample> path) {
  if (path.size() < 2) throw DomainError("path_length needs at least two samples");
  PathLength out;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    if (!(path[i + 1].t > path[i].t)) throw DomainError("path parameter must increase");
    const Vec dx = path[i + 1].x - path[i].x;
    if (dx.norm() < kMinDirectionNorm) {
      ++out.skipped_segments;
      continue;
    }
    out.length += 0.5 * (eval_metric(F, path[i].x, dx) + eval_metric(F, path[i + 1].x, dx));
  }
  return out;
}

// --- Shipped fields -------------------------------------------------------

inline MetricField flat_metric(int dimension) {
  if (dimension != 2 && dimension != 3) throw DomainError("dimension must be 2 or 3");
  return MetricField(dimension, "flat", [](const Vec&, const Vec& y) { return y.norm(); });
}

using TensorFunction = std::function<Mat(const Vec&)>;

namespace detail {

inline double quadratic_form_root(const Mat& g, const Vec& x, const Vec& y) {
  if (!is_positive_definite(g)) {
    throw PositiveDefinitenessError(x, y, leading_minors(g), symmetric_eigenvalues(g));
  }
  return std::sqrt(y.dot(g * y));
}

}  // namespace detail

/// F(x, y) = sqrt(y^T g(x) y). The fundamental tensor of the result is g(x)
/// for every y.
inline MetricField riemann_metric(int dimension, TensorFunction g, std::string label = "riemann") {
  return MetricField(dimension, std::move(label), [g = std::move(g)](const Vec& x, const Vec& y) {
    return detail::quadratic_form_root(g(x), x, y);
  });
}

/// Piecewise Riemann field: g(region, x) must extend each piece smoothly
/// past its interfaces.
inline MetricField riemann_metric(int dimension, std::vector<double> radii,
                                  std::function<Mat(int, const Vec&)> g,
                                  std::string label = "riemann") {
  return MetricField(dimension, std::move(label), std::move(radii),
                     [g = std::move(g)](int region, const Vec& x, const Vec& y) {
                       return detail::quadratic_form_root(g(region, x), x, y);
                     });
}

/// Isotropic medium F(x, y) = n(x) |y|.
inline MetricField conformal_metric(int dimension, std::function<double(const Vec&)> n,
                                    std::string label = "conformal") {
  return MetricField(dimension, std::move(label),
                     [n = std::move(n)](const Vec& x, const Vec& y) { return n(x) * y.norm(); });
}

/// Randers field F = |y| + b . y, strongly convex for |b| < 1.
inline MetricField randers_metric(Vec b) {
  if (!(b.norm() < 1.0)) throw DomainError("Randers drift must satisfy |b| < 1");
  const int d = static_cast<int>(b.size());
  return MetricField(d, "randers",
                     [b = std::move(b)](const Vec&, const Vec& y) { return y.norm() + b.dot(y); });
}

}  // namespace finsler_cloak
