#pragma once

// Scenario configuration: a JSON document merged strictly over the defaults.
// Every key has exactly one spelling; unknown keys and wrong types are
// rejected before anything is computed.

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "finsler_cloak/cloak_design.hpp"
#include "finsler_cloak/errors.hpp"
#include "finsler_cloak/medium.hpp"
#include "finsler_cloak/scenarios.hpp"

namespace finsler_cloak {

using Json = nlohmann::json;

inline Json default_config() {
  return Json::parse(R"({
  "scenario": {"R1": 1.0, "R2": 2.0, "r0": 0.5, "launch_distance": 4.0, "alpha_clamp": 0.999},
  "weight": {"profile": "smooth", "transition_width": 0.2},
  "fan": {"count": 21, "half_width": 1.8, "stagger": 0.25, "headings": ["leftward", "rightward"]},
  "integrator": {"step": 0.001, "max_steps": 100000, "renorm_every": 16},
  "fd": {"h_y": 0.001, "h_x": 0.001, "order": 4},
  "analysis": {"tol_pass": 1e-06, "tol_block": 0.02},
  "field": {"x_min": -2.5, "x_max": 2.5, "y_min": -2.5, "y_max": 2.5, "nx": 41, "ny": 41,
            "direction_bins": 8, "impedance": 1.0, "r_guard": 0.001},
  "output": {"trajectories": "trajectories.csv", "report": "", "field": "field.csv", "plot": "rays.svg"}
})");
}

struct ScenarioConfig {
  ShieldScenario scenario;
  int fan_count = 21;
  double fan_half_width = 1.8;
  double fan_stagger = 0.25;
  std::vector<Heading> headings{Heading::leftward, Heading::rightward};
  GridSpec grid;
  FieldSamplingOptions field;
  std::string trajectories_path;
  std::string report_path;  // empty: derived from trajectories_path
  std::string field_path;
  std::string plot_path;
  Json document;  // the merged configuration

  std::vector<RayFan> fans() const {
    std::vector<RayFan> out;
    for (Heading h : headings) out.push_back(RayFan::uniform(fan_count, fan_half_width, h, fan_stagger));
    return out;
  }
};

namespace detail {

inline std::string join_path(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

inline void check_type(const Json& expected, const Json& value, const std::string& path) {
  auto fail = [&](const char* want) {
    throw ConfigError("'" + path + "' must be " + want + ", got " + value.dump());
  };
  if (expected.is_object()) {
    if (!value.is_object()) fail("an object");
  } else if (expected.is_array()) {
    if (!value.is_array()) fail("an array");
    for (const Json& item : value) {
      if (!item.is_string()) fail("an array of strings");
    }
  } else if (expected.is_string()) {
    if (!value.is_string()) fail("a string");
  } else if (expected.is_number_integer()) {
    if (!value.is_number_integer()) fail("an integer");
  } else if (expected.is_number()) {
    if (!value.is_number()) fail("a number");
  } else if (expected.is_boolean()) {
    if (!value.is_boolean()) fail("a boolean");
  }
}

inline void merge_strict(Json& base, const Json& patch, const std::string& prefix) {
  if (!patch.is_object()) throw ConfigError("'" + (prefix.empty() ? "<root>" : prefix) + "' must be an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = join_path(prefix, key);
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    Json& slot = base[key];
    check_type(slot, value, path);
    if (slot.is_object()) {
      merge_strict(slot, value, path);
    } else {
      slot = value;
    }
  }
}

template <class T>
T field_as(const Json& doc, const char* section, const char* key) {
  return doc.at(section).at(key).get<T>();
}

inline WeightProfile parse_profile(const std::string& s) {
  if (s == "smooth") return WeightProfile::smooth;
  if (s == "step") return WeightProfile::step;
  if (s == "zero") return WeightProfile::zero;
  if (s == "one") return WeightProfile::one;
  throw ConfigError("'weight.profile' must be one of smooth, step, zero, one; got '" + s + "'");
}

inline Heading parse_heading(const std::string& s) {
  if (s == "leftward") return Heading::leftward;
  if (s == "rightward") return Heading::rightward;
  throw ConfigError("'fan.headings' entries must be leftward or rightward; got '" + s + "'");
}

}  // namespace detail

/// Applies `a.b.c=value` to a complete configuration document. The value is
/// read as JSON when it parses, otherwise as a bare string.
inline void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override must look like key.path=value, got '" + assignment + "'");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) {
    if (part.empty()) throw ConfigError("empty segment in override key '" + key + "'");
    parts.push_back(part);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = Json{{*it, patch}};
  detail::merge_strict(doc, patch, "");
}

/// Defaults, then the config file (if any), then overrides in order.
inline Json merged_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  Json doc = default_config();
  if (path) {
    std::ifstream in(*path);
    if (!in) throw IoError(*path, "cannot open config file");
    Json user = Json::parse(in, nullptr, false);
    if (user.is_discarded()) throw ConfigError("config file '" + *path + "' is not valid JSON");
    detail::merge_strict(doc, user, "");
  }
  for (const std::string& o : overrides) apply_override(doc, o);
  return doc;
}

/// Converts a merged document into typed settings and validates them.
inline ScenarioConfig parse_config(const Json& doc) {
  using detail::field_as;
  ScenarioConfig c;
  c.document = doc;
  try {
    ShieldScenario& s = c.scenario;
    s.R1 = field_as<double>(doc, "scenario", "R1");
    s.R2 = field_as<double>(doc, "scenario", "R2");
    s.r0 = field_as<double>(doc, "scenario", "r0");
    s.launch_distance = field_as<double>(doc, "scenario", "launch_distance");
    s.alpha_clamp = field_as<double>(doc, "scenario", "alpha_clamp");
    s.weight.profile = detail::parse_profile(field_as<std::string>(doc, "weight", "profile"));
    s.weight.transition_width = field_as<double>(doc, "weight", "transition_width");
    s.integrator.step = field_as<double>(doc, "integrator", "step");
    s.integrator.max_steps = field_as<long>(doc, "integrator", "max_steps");
    s.integrator.renorm_every = field_as<int>(doc, "integrator", "renorm_every");
    s.integrator.fd.h_y = field_as<double>(doc, "fd", "h_y");
    s.integrator.fd.h_x = field_as<double>(doc, "fd", "h_x");
    s.integrator.fd.order = field_as<int>(doc, "fd", "order");
    s.tol_pass = field_as<double>(doc, "analysis", "tol_pass");
    s.tol_block = field_as<double>(doc, "analysis", "tol_block");

    c.fan_count = field_as<int>(doc, "fan", "count");
    c.fan_half_width = field_as<double>(doc, "fan", "half_width");
    c.fan_stagger = field_as<double>(doc, "fan", "stagger");
    c.headings.clear();
    for (const Json& h : doc.at("fan").at("headings")) c.headings.push_back(detail::parse_heading(h.get<std::string>()));

    c.grid.x_min = field_as<double>(doc, "field", "x_min");
    c.grid.x_max = field_as<double>(doc, "field", "x_max");
    c.grid.y_min = field_as<double>(doc, "field", "y_min");
    c.grid.y_max = field_as<double>(doc, "field", "y_max");
    c.grid.nx = field_as<int>(doc, "field", "nx");
    c.grid.ny = field_as<int>(doc, "field", "ny");
    c.field.direction_bins = field_as<int>(doc, "field", "direction_bins");
    c.field.impedance = field_as<double>(doc, "field", "impedance");
    c.field.r_guard = field_as<double>(doc, "field", "r_guard");

    c.trajectories_path = field_as<std::string>(doc, "output", "trajectories");
    c.report_path = field_as<std::string>(doc, "output", "report");
    c.field_path = field_as<std::string>(doc, "output", "field");
    c.plot_path = field_as<std::string>(doc, "output", "plot");
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("malformed configuration: ") + e.what());
  }

  try {
    c.scenario.validate();
    RadialCoshTransform{c.scenario.r0, c.scenario.alpha_clamp}.validate();
    c.grid.validate();
    if (c.fan_count < 1) throw DomainError("fan.count must be at least 1");
    if (!(c.fan_half_width >= 0.0 && c.fan_half_width < c.scenario.launch_distance)) {
      throw DomainError("fan.half_width must lie in [0, launch_distance)");
    }
    if (!(c.fan_stagger >= 0.0 && c.fan_stagger <= 1.0)) throw DomainError("fan.stagger must lie in [0, 1]");
    if (c.headings.empty()) throw DomainError("fan.headings must not be empty");
    if (c.field.direction_bins < 4) throw DomainError("field.direction_bins must be at least 4");
    if (!(c.field.impedance > 0.0)) throw DomainError("field.impedance must be positive");
    if (!(c.field.r_guard >= 0.0)) throw DomainError("field.r_guard must be non-negative");
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline ScenarioConfig load_config(const std::optional<std::string>& path,
                                  const std::vector<std::string>& overrides = {}) {
  return parse_config(merged_config(path, overrides));
}

}  // namespace finsler_cloak
