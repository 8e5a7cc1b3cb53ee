#pragma once

// Transformation medium: direction-dependent refractive index n = F~/F0 and
// impedance-matched principal permittivity/permeability.

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "finsler_cloak/cloak_design.hpp"
#include "finsler_cloak/errors.hpp"
#include "finsler_cloak/linalg.hpp"
#include "finsler_cloak/metric_field.hpp"

namespace finsler_cloak {

/// n(x, y) = F~(x, y) / |y|; 0-homogeneous in y.
inline double refractive_index(const MetricField& F, const Vec& x, const Vec& y) {
  return eval_metric(F, x, y) / y.norm();
}

/// Closed-form index of the point-expansion cloak for a direction given by
/// its polar components (y^r, y^theta).
inline double cylindrical_index(const PointExpansionMap& pem, double r, double y_r, double y_theta) {
  if (r <= pem.R1) throw ShieldInteriorError(r, pem.R1);
  if (r > pem.R2) throw DomainError("cylindrical_index needs r <= R2");
  if (std::hypot(y_r, y_theta) < kMinDirectionNorm) throw DomainError("vanishing direction");
  const double k = pem.stretch();
  const double rv = pem.virtual_radius(r);
  return std::sqrt(k * k * y_r * y_r + rv * rv * y_theta * y_theta) /
         std::sqrt(y_r * y_r + r * r * y_theta * y_theta);
}

struct ImpedanceMatched {
  double epsilon;
  double mu;
};

/// Solves n = sqrt(eps) sqrt(mu), sqrt(mu)/sqrt(eps) = C.
inline ImpedanceMatched impedance_match(double n, double C) {
  if (!(n > 0.0) || !(C > 0.0)) throw MaterialSolveError("index and impedance must be positive");
  return {n / C, n * C};
}

/// Diagonal materials in an orthonormal principal frame (columns of frame).
struct MaterialTensors {
  std::array<double, 3> epsilon{1.0, 1.0, 1.0};
  std::array<double, 3> mu{1.0, 1.0, 1.0};
  Mat frame = Mat::Identity(3, 3);
};

/// Inverts diag(n_x^2, n_y^2, n_z^2) = C^2 diag(eps_y eps_z, eps_z eps_x, eps_x eps_y)
/// with mu = C^2 eps: eps_i = n_j n_k / (C n_i).
inline MaterialTensors principal_indices_to_materials(const std::array<double, 3>& n, double C) {
  for (double v : n) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw MaterialSolveError("principal indices must be finite and positive");
    }
  }
  MaterialTensors out;
  for (int i = 0; i < 3; ++i) {
    const double effective = n[(i + 1) % 3] * n[(i + 2) % 3] / n[i];
    const auto [eps, mu] = impedance_match(effective, C);
    if (!(eps > 0.0) || !std::isfinite(eps)) throw MaterialSolveError("non-positive permittivity");
    out.epsilon[i] = eps;
    out.mu[i] = mu;
  }
  return out;
}

/// Closed-form cylindrical cloak materials in (r, theta, z) for C = 1.
inline MaterialTensors pendry_parameters(const PointExpansionMap& pem, double r) {
  if (r <= pem.R1) throw ShieldInteriorError(r, pem.R1);
  if (r > pem.R2) throw DomainError("pendry_parameters needs r <= R2");
  const double k = pem.stretch();
  MaterialTensors out;
  out.epsilon = {(r - pem.R1) / r, r / (r - pem.R1), k * k * (r - pem.R1) / r};
  out.mu = out.epsilon;
  return out;
}

namespace detail {

/// Orthonormal eigenvectors of a symmetric 2x2 tensor, ordered so the first
/// is the one closest to the radial direction at x. Degenerate tensors use
/// the polar frame itself.
inline Mat principal_frame_2d(const Mat& g, const Vec& x) {
  const Mat polar = x.head<2>().norm() > 0.0 ? polar_frame(x.head<2>()) : Mat(Mat::Identity(2, 2));
  Eigen::SelfAdjointEigenSolver<Mat> es(g);
  const auto& lam = es.eigenvalues();
  if (std::abs(lam[1] - lam[0]) <= 1e-12 * std::max(1.0, std::abs(lam[1]))) return polar;
  Mat axes = es.eigenvectors();
  if (std::abs(axes.col(1).dot(polar.col(0))) > std::abs(axes.col(0).dot(polar.col(0)))) {
    axes.col(0).swap(axes.col(1));
  }
  if (axes.col(0).dot(polar.col(0)) < 0.0) axes.col(0) *= -1.0;
  if (axes.col(1).dot(polar.col(1)) < 0.0) axes.col(1) *= -1.0;
  return axes;
}

inline Mat lift_frame(const Mat& frame2) {
  Mat frame = Mat::Identity(3, 3);
  frame.topLeftCorner(2, 2) = frame2;
  return frame;
}

}  // namespace detail

/// Principal materials of a non-directional field at x, through the index
/// route: principal axes from the fundamental tensor, n along each axis from
/// n = F~/F0, then the transversality inversion. A 2-D field carries an
/// untransformed z axis (n_z = 1).
inline MaterialTensors principal_materials(const MetricField& F, const Vec& x, double C,
                                           const FDConfig& fd = {}) {
  const int d = F.dimension();
  const Vec probe = d == 2 ? Vec(polar_frame(x.head<2>()).col(0)) : Vec(Vec::Unit(3, 0));
  const Mat g = metric_tensor(F, x, probe, fd).entries;

  Mat frame(d, d);
  if (d == 2) {
    frame = detail::principal_frame_2d(g, x);
  } else {
    // Cylindrical media: the z axis is principal; split the transverse block.
    Mat transverse = g.topLeftCorner(2, 2);
    frame = detail::lift_frame(detail::principal_frame_2d(transverse, x));
  }

  std::array<double, 3> n{1.0, 1.0, 1.0};
  for (int i = 0; i < d; ++i) n[i] = refractive_index(F, x, frame.col(i));
  MaterialTensors out = principal_indices_to_materials(n, C);
  out.frame = d == 2 ? detail::lift_frame(frame) : frame;
  return out;
}

/// Principal materials of a 2-D Riemann slice tensor (n_i = sqrt of the
/// eigenvalues, n_z = 1).
inline MaterialTensors slice_materials(const Mat& g, const Vec& x, double C) {
  const Mat frame = detail::principal_frame_2d(g, x);
  std::array<double, 3> n{1.0, 1.0, 1.0};
  for (int i = 0; i < 2; ++i) {
    const Vec axis = frame.col(i);
    n[i] = std::sqrt(axis.dot(g * axis));
  }
  MaterialTensors out = principal_indices_to_materials(n, C);
  out.frame = detail::lift_frame(frame);
  return out;
}

struct GridSpec {
  double x_min = -2.0, x_max = 2.0;
  double y_min = -2.0, y_max = 2.0;
  int nx = 41, ny = 41;

  void validate() const {
    if (nx < 1 || ny < 1) throw DomainError("grid needs at least one point per axis");
    if (!(x_max >= x_min) || !(y_max >= y_min)) throw DomainError("grid bounds reversed");
  }

  double x_at(int i) const { return nx == 1 ? x_min : x_min + (x_max - x_min) * i / (nx - 1); }
  double y_at(int j) const { return ny == 1 ? y_min : y_min + (y_max - y_min) * j / (ny - 1); }
};

struct MaterialFieldSample {
  Vec position;
  double direction_bin;  // bin centre angle
  double index;          // n along the bin direction
  MaterialTensors materials;
};

struct MaterialField {
  std::vector<MaterialFieldSample> samples;
  int clipped = 0;  // grid points moved out of the inner-boundary singularity
  int skipped = 0;  // samples whose metric failed to evaluate
};

struct FieldSamplingOptions {
  int direction_bins = 8;
  double impedance = 1.0;
  double r_guard = 1e-3;  // relative to R1
};

/// Row-major (y outer, x inner) grid, ascending bins at theta_b = 2 pi b / B.
/// Points with R1 <= r < R1 (1 + r_guard) are moved radially to the guard
/// radius and counted.
inline MaterialField sample_material_field(const BlendedShieldMetric& m, const GridSpec& grid,
                                           const FieldSamplingOptions& opt = {}) {
  grid.validate();
  if (opt.direction_bins < 4) throw DomainError("direction_bins must be at least 4");
  const MetricField field = m.field();
  const double R1 = m.cloak().R1;
  const double guard = R1 * (1.0 + opt.r_guard);

  MaterialField out;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      Vec p = vec2(grid.x_at(i), grid.y_at(j));
      const double r = p.norm();
      if (r >= R1 && r < guard) {
        p *= guard / r;
        ++out.clipped;
      }
      const int region = m.region_of(p);
      for (int b = 0; b < opt.direction_bins; ++b) {
        const double theta = kTwoPi * b / opt.direction_bins;
        const Vec u = vec2(std::cos(theta), std::sin(theta));
        try {
          MaterialFieldSample s;
          s.position = p;
          s.direction_bin = theta;
          s.index = refractive_index(field, p, u);
          s.materials = slice_materials(m.slice_tensor(region, p, theta), p, opt.impedance);
          out.samples.push_back(std::move(s));
        } catch (const Error&) {
          ++out.skipped;
        }
      }
    }
  }
  return out;
}

}  // namespace finsler_cloak
