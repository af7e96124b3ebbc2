#include <CLI11.hpp>
#include <cstdio>
#include <iostream>
#include <string>

#include "conic_ricci/experiment.hpp"

using namespace conic_ricci;

int main(int argc, char** argv) {
  CLI::App app{"Conic Ricci flow experiments"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  std::string config_path, out_dir;
  int resolution = 0;
  double tol = 0.0;
  bool quiet = false;

  std::vector<std::string> kinds{"classify", "flow", "mu", "soliton", "partitions", "deform", "compare"};
  for (const std::string& kind : kinds) {
    CLI::App* sub = app.add_subcommand(kind, "Run a " + kind + " experiment");
    sub->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", out_dir, "Output directory (overrides the config)");
    sub->add_option("--resolution", resolution, "Grid resolution (overrides the config)")->check(CLI::PositiveNumber);
    sub->add_option("--tol", tol, "Solver tolerance for mu, soliton and flow (overrides the config)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", quiet, "Print nothing on success");
  }
  CLI::App* report = app.add_subcommand("report", "Aggregate run summaries into one report");
  std::string report_dir, report_file;
  report->add_option("dir", report_dir, "Directory holding run outputs")->required();
  report->add_option("--out", report_file, "Report file (default DIR/report.json)");
  report->add_flag("--quiet", quiet, "Print nothing on success");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (report->parsed()) {
    if (report_file.empty()) report_file = report_dir + "/report.json";
    const ReportResult r = emit_report(report_dir, report_file);
    if (r.exit_code != 0) {
      std::cerr << "error: " << r.message << "\n";
      return 1;
    }
    for (const std::string& m : r.missing) std::cerr << "missing: " << m << "\n";
    if (!quiet)
      std::printf("%d runs, %d checks passed, %d failed -> %s\n", r.runs, r.passed_checks, r.failed_checks,
                  report_file.c_str());
    return 0;
  }

  ExperimentConfig config;
  try {
    config = load_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << config_path << ": " << e.what() << "\n";
    return 1;
  }
  const std::string kind = app.get_subcommands().front()->get_name();
  if (to_string(config.kind) != kind) {
    std::cerr << config_path << ": field 'kind': config is '" << to_string(config.kind) << "' but the subcommand is '"
              << kind << "'\n";
    return 1;
  }
  if (!out_dir.empty()) config.out_dir = out_dir;
  if (config.out_dir.empty()) {
    std::cerr << "error: no output directory (use --out or the 'out' field)\n";
    return 1;
  }
  if (resolution > 0) {
    // revalidate with the override applied
    config.grid.resolution = resolution;
    try {
      config = parse_config(serialize_config(config));
    } catch (const ConfigError& e) {
      std::cerr << "--resolution: " << e.what() << "\n";
      return 1;
    }
  }
  if (tol > 0.0) config.tolerances = {tol, tol, tol};

  const RunResult r = run_config(config);
  if (r.exit_code == 1) {
    std::cerr << "error: " << r.message << "\n";
  } else if (!quiet) {
    std::printf("%s: %s -> %s\n", kind.c_str(), r.status.c_str(), config.out_dir.c_str());
    if (!r.message.empty()) std::printf("%s\n", r.message.c_str());
  }
  return r.exit_code;
}
