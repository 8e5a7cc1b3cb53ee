#pragma once

// Text exports: trajectory CSV (and its parser), shielding report JSON,
// material field CSV and SVG ray diagrams. All writers are deterministic.

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "finsler_cloak/errors.hpp"
#include "finsler_cloak/geodesic.hpp"
#include "finsler_cloak/medium.hpp"
#include "finsler_cloak/scenarios.hpp"

namespace finsler_cloak {

inline constexpr std::string_view kTrajectoryHeader = "ray_id,t,x,y,vx,vy,F_value";
inline constexpr std::string_view kFieldHeader = "x,y,theta_bin,n,eps_r,eps_theta,eps_z,mu_r,mu_theta,mu_z";

struct TrajectoryRecord {
  int ray_id = 0;
  double t = 0.0;
  double x = 0.0, y = 0.0;
  double vx = 0.0, vy = 0.0;
  double F_value = 0.0;
};

/// F along the samples; NaN where the field cannot be evaluated.
inline double sample_speed(const MetricField& F, const RayState& s) {
  try {
    return eval_metric(F, s.position, s.velocity);
  } catch (const Error&) {
    return std::numeric_limits<double>::quiet_NaN();
  }
}

inline void write_trajectories(std::ostream& out, const MetricField& F, const std::vector<Trajectory>& rays) {
  out << kTrajectoryHeader << '\n';
  for (std::size_t id = 0; id < rays.size(); ++id) {
    for (const RayState& s : rays[id].samples) {
      out << fmt::format("{},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n", id, s.t, s.position[0],
                         s.position[1], s.velocity[0], s.velocity[1], sample_speed(F, s));
    }
  }
}

namespace detail {

inline std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& value) {
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses trajectory CSV. Rows must be grouped by ray_id with t strictly
/// increasing inside a ray. `source` names the input in error messages.
inline std::vector<TrajectoryRecord> read_trajectories(std::istream& in, const std::string& source) {
  std::vector<TrajectoryRecord> rows;
  std::string line;
  long line_no = 0;
  auto fail = [&](const std::string& why) { throw IoError(source, fmt::format("line {}: {}", line_no, why)); };

  if (!std::getline(in, line)) {
    line_no = 1;
    fail("missing header");
  }
  line_no = 1;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTrajectoryHeader) fail(fmt::format("expected header '{}'", kTrajectoryHeader));

  std::map<int, bool> finished;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = detail::split_csv(line);
    if (cells.size() != 7) fail(fmt::format("expected 7 fields, found {}", cells.size()));
    TrajectoryRecord r;
    double* reals[] = {&r.t, &r.x, &r.y, &r.vx, &r.vy, &r.F_value};
    if (!detail::parse_number(cells[0], r.ray_id) || r.ray_id < 0) fail("bad ray_id '" + std::string(cells[0]) + "'");
    for (int k = 0; k < 6; ++k) {
      if (!detail::parse_number(cells[k + 1], *reals[k])) fail("bad number '" + std::string(cells[k + 1]) + "'");
    }
    if (!std::isfinite(r.t) || !std::isfinite(r.x) || !std::isfinite(r.y) || !std::isfinite(r.vx) ||
        !std::isfinite(r.vy)) {
      fail("non-finite state");
    }
    if (!rows.empty() && rows.back().ray_id == r.ray_id) {
      if (!(r.t > rows.back().t)) fail("t not increasing within ray");
    } else {
      if (finished.count(r.ray_id)) fail(fmt::format("rows of ray {} are not contiguous", r.ray_id));
      if (!rows.empty()) finished[rows.back().ray_id] = true;
    }
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<TrajectoryRecord> read_trajectories_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path, "cannot open trajectory file");
  return read_trajectories(in, path);
}

/// Ray id -> consecutive samples, in order of first appearance.
inline std::vector<std::vector<TrajectoryRecord>> group_by_ray(const std::vector<TrajectoryRecord>& rows) {
  std::vector<std::vector<TrajectoryRecord>> out;
  for (const TrajectoryRecord& r : rows) {
    if (out.empty() || out.back().front().ray_id != r.ray_id) out.emplace_back();
    out.back().push_back(r);
  }
  return out;
}

inline nlohmann::json report_to_json(const ShieldReport& report, const std::vector<Trajectory>& rays) {
  nlohmann::json doc;
  auto verdict = [](const std::optional<bool>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  doc["pass_straight"] = verdict(report.pass_straight);
  doc["blocked"] = verdict(report.blocked);
  doc["rays"] = nlohmann::json::array();
  for (const RayReport& r : report.rays) {
    nlohmann::json ray;
    ray["ray_id"] = r.ray_id;
    ray["heading"] = to_string(r.heading);
    ray["impact_parameter"] = r.impact_parameter;
    ray["min_distance_to_center"] = r.min_distance_to_center;
    ray["lateral_offset"] = r.lateral_offset;
    ray["direction_deviation"] = r.direction_deviation;
    ray["terminated"] = to_string(r.terminated);
    const Trajectory& traj = rays.at(static_cast<std::size_t>(r.ray_id));
    ray["interface_crossings"] = traj.interface_crossings;
    if (!traj.detail.empty()) ray["detail"] = traj.detail;
    doc["rays"].push_back(std::move(ray));
  }
  return doc;
}

inline void write_field(std::ostream& out, const MaterialField& field) {
  out << kFieldHeader << '\n';
  for (const MaterialFieldSample& s : field.samples) {
    const auto& e = s.materials.epsilon;
    const auto& m = s.materials.mu;
    out << fmt::format("{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g},{:.17g}\n",
                       s.position[0], s.position[1], s.direction_bin, s.index, e[0], e[1], e[2], m[0], m[1], m[2]);
  }
  out << fmt::format("# clipped={} skipped={}\n", field.clipped, field.skipped);
}

struct PlotStyle {
  double R1 = 1.0;
  double R2 = 2.0;
  double pixels_per_unit = 100.0;
  double min_segment_px = 1.0;  // decimation: drop points closer than this
  const char* leftward_color = "#1f77b4";
  const char* rightward_color = "#d62728";
};

/// Ray diagram with the device (R2) and shield (R1) circles. The view covers
/// the device and every sample; y points up.
inline void write_svg(std::ostream& out, const std::vector<TrajectoryRecord>& rows, const PlotStyle& style = {}) {
  double extent = style.R2;
  for (const TrajectoryRecord& r : rows) extent = std::max({extent, std::abs(r.x), std::abs(r.y)});
  extent *= 1.05;
  const double scale = style.pixels_per_unit;
  const double size = 2.0 * extent * scale;
  auto px = [&](double x) { return (x + extent) * scale; };
  auto py = [&](double y) { return (extent - y) * scale; };

  out << fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0:.0f}\" height=\"{0:.0f}\" viewBox=\"0 0 {0:.3f} {0:.3f}\">\n",
      size);
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << fmt::format(
      "<circle class=\"device\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"none\" stroke=\"#7f7f7f\" "
      "stroke-dasharray=\"6 4\"/>\n",
      px(0.0), py(0.0), style.R2 * scale);
  out << fmt::format(
      "<circle class=\"shield\" cx=\"{:.3f}\" cy=\"{:.3f}\" r=\"{:.3f}\" fill=\"#e0e0e0\" stroke=\"black\"/>\n", px(0.0),
      py(0.0), style.R1 * scale);

  for (const auto& ray : group_by_ray(rows)) {
    const bool leftward = ray.front().vx < 0.0;
    out << fmt::format("<polyline class=\"{}\" data-ray=\"{}\" fill=\"none\" stroke=\"{}\" stroke-width=\"1\" points=\"",
                       leftward ? "leftward" : "rightward", ray.front().ray_id,
                       leftward ? style.leftward_color : style.rightward_color);
    double last_x = 0.0, last_y = 0.0;
    for (std::size_t i = 0; i < ray.size(); ++i) {
      const double x = px(ray[i].x), y = py(ray[i].y);
      const bool keep = i == 0 || i + 1 == ray.size() || std::hypot(x - last_x, y - last_y) >= style.min_segment_px;
      if (!keep) continue;
      out << fmt::format("{}{:.3f},{:.3f}", i == 0 ? "" : " ", x, y);
      last_x = x;
      last_y = y;
    }
    out << "\"/>\n";
  }
  out << "</svg>\n";
}

}  // namespace finsler_cloak
