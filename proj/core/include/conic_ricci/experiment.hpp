#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "conic_ricci/divisor.hpp"
#include "conic_ricci/error.hpp"

namespace conic_ricci {

/// Schema violation in an experiment config; the message names the field or the line.
class ConfigError : public Error {
 public:
  using Error::Error;
};

enum class ExperimentKind { Classify, Flow, Mu, Soliton, Partitions, Deform, Compare };

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& text);

struct PointSpec {
  bool at_infinity = false;
  double re = 0.0;
  double im = 0.0;
  /// Decimal string, kept verbatim so that weight comparisons stay exact.
  std::string weight;
  bool operator==(const PointSpec&) const = default;
};

struct GridSpec {
  /// 1: rotationally symmetric grid (at most two points, moved to the poles);
  /// 2: log-polar cylinder with resolution angular nodes.
  int dimension = 1;
  int resolution = 2048;
  /// Half-width of the cylinder in s = log|z| (2D only).
  double extent = 14.0;
  bool operator==(const GridSpec&) const = default;
};

struct ToleranceSpec {
  double mu = 1e-9;
  double soliton = 1e-10;
  /// Flow stops once sup |velocity| falls below this.
  double flow = 1e-8;
  bool operator==(const ToleranceSpec&) const = default;
};

inline constexpr std::uint64_t kDefaultSeed = 20240611;

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::Classify;
  std::vector<PointSpec> divisor;
  GridSpec grid;
  ToleranceSpec tolerances;
  /// flow, compare
  double max_time = 200.0;
  double observe_every = 2.0;
  bool dilation_gauge = true;
  /// Amplitude of the seeded smooth perturbation added to the starting potential.
  double perturbation = 0.0;
  /// deform
  std::vector<double> t_list;
  double q = 1.2;
  std::string out_dir;
  std::uint64_t seed = kDefaultSeed;
  bool operator==(const ExperimentConfig&) const = default;
};

/// Parses and validates; throws ConfigError with the offending line or field.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
/// Canonical JSON (sorted keys); parse_config(serialize_config(c)) == c.
std::string serialize_config(const ExperimentConfig& config);

ConeDivisor divisor_from_spec(const std::vector<PointSpec>& points);

struct RunResult {
  /// 0 success, 2 not converged, 1 error.
  int exit_code = 1;
  std::string status;
  std::string message;
  std::vector<std::string> files;
};

/// Runs the experiment and writes config.json, summary.json and the CSV series into
/// out_dir (which must be set). Never throws; errors are reported through the result
/// and, when the directory is writable, an error summary.
RunResult run_config(const ExperimentConfig& config);

struct ReportResult {
  int exit_code = 1;
  int runs = 0;
  int passed_checks = 0;
  int failed_checks = 0;
  std::vector<std::string> missing;
  std::string message;
};

/// Collects every summary.json below dir (sorted by path) into one report.json at
/// report_path with pass/fail per check. Directories holding a config.json but no
/// summary are listed as missing. Exit 1 when nothing was found.
ReportResult emit_report(const std::string& dir, const std::string& report_path);

}  // namespace conic_ricci
