// Command-line driver: validate | trace | field | plot.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "finsler_cloak/cli.hpp"

namespace fc = finsler_cloak;

namespace {

struct CommonOptions {
  std::string config;
  std::string out;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonOptions& o, const char* out_help) {
  cmd->add_option("--config", o.config, "JSON configuration merged over the defaults");
  cmd->add_option("--out", o.out, out_help);
  cmd->add_option("--override", o.overrides, "dotted-path override, e.g. weight.profile=step (repeatable)")
      ->allow_extra_args(false);
}

fc::ScenarioConfig load(const CommonOptions& o) {
  std::optional<std::string> path;
  if (!o.config.empty()) path = o.config;
  return fc::load_config(path, o.overrides);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Direction-dependent (Finsler) invisibility cloak toolkit"};
  app.footer("Default configuration (every key, exactly one spelling):\n" + fc::default_config().dump(2));
  app.require_subcommand(1);

  CommonOptions validate_opt, trace_opt, field_opt, plot_opt;
  std::string plot_input;

  auto* validate = app.add_subcommand("validate", "run the built-in invariant checks");
  add_common(validate, validate_opt, "unused");
  auto* trace = app.add_subcommand("trace", "trace the ray fans and write trajectories plus a shielding report");
  add_common(trace, trace_opt, "trajectory CSV path (report goes next to it as <stem>.report.json)");
  auto* field = app.add_subcommand("field", "sample the material tensors on a grid");
  add_common(field, field_opt, "material field CSV path");
  auto* plot = app.add_subcommand("plot", "render a trajectory CSV as SVG");
  add_common(plot, plot_opt, "SVG path");
  plot->add_option("trajectories", plot_input, "trajectory CSV written by trace")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return fc::kExitUsage;
  }

  return fc::run_guarded(
      [&]() -> int {
        if (*validate) return fc::cmd_validate(load(validate_opt), std::cout);
        if (*trace) {
          fc::ScenarioConfig c = load(trace_opt);
          if (!trace_opt.out.empty()) c.trajectories_path = trace_opt.out;
          return fc::cmd_trace(c, std::cout);
        }
        if (*field) {
          fc::ScenarioConfig c = load(field_opt);
          if (!field_opt.out.empty()) c.field_path = field_opt.out;
          return fc::cmd_field(c, std::cout);
        }
        fc::ScenarioConfig c = load(plot_opt);
        if (!plot_opt.out.empty()) c.plot_path = plot_opt.out;
        return fc::cmd_plot(plot_input, c, std::cout);
      },
      std::cerr);
}
