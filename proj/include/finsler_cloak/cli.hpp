#pragma once

// Subcommands of the finsler_cloak tool. Each returns a process exit code:
// 0 success, 1 check failure, 2 usage or configuration error, 3 I/O error.

#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "finsler_cloak/config.hpp"
#include "finsler_cloak/io.hpp"
#include "finsler_cloak/medium.hpp"
#include "finsler_cloak/scenarios.hpp"
#include "finsler_cloak/validation.hpp"

namespace finsler_cloak {

enum ExitCode : int { kExitOk = 0, kExitCheckFailed = 1, kExitUsage = 2, kExitIo = 3 };

namespace detail {

/// Writes a file through `emit`; failures become IoError with the path.
inline void write_file(const std::string& path, const std::function<void(std::ostream&)>& emit) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, "cannot open for writing");
  emit(out);
  out.flush();
  if (!out) throw IoError(path, "write failed");
}

}  // namespace detail

inline std::string report_path_for(const ScenarioConfig& c) {
  if (!c.report_path.empty()) return c.report_path;
  return std::filesystem::path(c.trajectories_path).replace_extension(".report.json").string();
}

inline int cmd_validate(const ScenarioConfig& c, std::ostream& out) {
  const auto results = run_validation(c.scenario, c.scenario.integrator.fd);
  bool ok = true;
  for (const CheckResult& r : results) {
    out << fmt::format("{} {:<22} residual={:.3e} tol={:.1e}{}\n", r.passed ? "PASS" : "FAIL", r.name, r.residual,
                       r.tolerance, r.detail.empty() ? "" : "  (" + r.detail + ")");
    ok = ok && r.passed;
  }
  return ok ? kExitOk : kExitCheckFailed;
}

struct TraceResult {
  std::vector<Trajectory> trajectories;  // every fan, concatenated; index = ray_id
  ShieldReport report;
};

inline TraceResult run_trace(const ScenarioConfig& c) {
  const MetricField F = build_asymmetric_shield(c.scenario).field();
  std::vector<FanRun> runs;
  for (const RayFan& fan : c.fans()) runs.push_back({fan, trace_fan(F, fan, c.scenario)});
  TraceResult out;
  out.report = analyze_shielding(runs, c.scenario);
  for (FanRun& run : runs) {
    for (Trajectory& t : run.trajectories) out.trajectories.push_back(std::move(t));
  }
  return out;
}

inline int cmd_trace(const ScenarioConfig& c, std::ostream& log) {
  const TraceResult result = run_trace(c);
  const MetricField F = build_asymmetric_shield(c.scenario).field();
  detail::write_file(c.trajectories_path, [&](std::ostream& os) { write_trajectories(os, F, result.trajectories); });
  const std::string report_path = report_path_for(c);
  detail::write_file(report_path, [&](std::ostream& os) {
    os << report_to_json(result.report, result.trajectories).dump(2) << '\n';
  });
  auto verdict = [](const std::optional<bool>& v) { return v ? (*v ? "true" : "false") : "n/a"; };
  log << fmt::format("rays={} pass_straight={} blocked={}\n", result.trajectories.size(),
                     verdict(result.report.pass_straight), verdict(result.report.blocked));
  log << fmt::format("wrote {} and {}\n", c.trajectories_path, report_path);
  return kExitOk;
}

inline int cmd_field(const ScenarioConfig& c, std::ostream& log) {
  const MaterialField field = sample_material_field(build_asymmetric_shield(c.scenario), c.grid, c.field);
  detail::write_file(c.field_path, [&](std::ostream& os) { write_field(os, field); });
  log << fmt::format("samples={} clipped={} skipped={}\n", field.samples.size(), field.clipped, field.skipped);
  log << fmt::format("wrote {}\n", c.field_path);
  return kExitOk;
}

inline int cmd_plot(const std::string& trajectory_csv, const ScenarioConfig& c, std::ostream& log) {
  const auto rows = read_trajectories_file(trajectory_csv);
  PlotStyle style;
  style.R1 = c.scenario.R1;
  style.R2 = c.scenario.R2;
  detail::write_file(c.plot_path, [&](std::ostream& os) { write_svg(os, rows, style); });
  log << fmt::format("rays={} wrote {}\n", group_by_ray(rows).size(), c.plot_path);
  return kExitOk;
}

/// Runs `body`, mapping library exceptions to exit codes and messages on `err`.
inline int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitCheckFailed;
  }
}

}  // namespace finsler_cloak
