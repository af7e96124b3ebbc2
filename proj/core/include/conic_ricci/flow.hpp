#pragma once

#include <string>
#include <vector>

#include "conic_ricci/metric.hpp"

namespace conic_ricci {

struct FlowConfig {
  enum class StepPolicy { Fixed, Adaptive };
  StepPolicy policy = StepPolicy::Adaptive;
  /// Fixed step, or the first step of an adaptive run.
  double dt = 1e-2;
  double dt_max = 0.2;
  /// Adaptive runs keep dt * sup|du/dt| <= cfl.
  double cfl = 0.1;
  double max_time = 200.0;
  long max_steps = 200000;
  /// Converged once sup|du/dt| over the resolved nodes drops below this.
  double stop_threshold = 1e-8;
  bool renormalize = true;
  /// Time between trace records; 0 records every step.
  double observe_every = 0.5;
  bool track_mu = true;
  bool track_distances = true;
  /// Adds the dilation field along s that best cancels du/dt (rotationally symmetric
  /// grids only), so solitons that drift by dilation become fixed points.
  bool dilation_gauge = false;
  /// Aborts when sup|R| exceeds blowup_factor * gamma.
  double blowup_factor = 1e3;
  /// Largest accepted sup|u change| in one step.
  double safeguard = 0.5;
};

struct FlowState {
  ConicMetric metric;
  double t = 0.0;
  double dt = 0.0;
  long steps = 0;
};

struct FlowRecord {
  double t = 0.0;
  double mu = 0.0;
  double sup_r_dev = 0.0;
  double area = 0.0;
  std::vector<double> distances;
  double u_min = 0.0;
  double u_max = 0.0;
  double sup_velocity = 0.0;
};

struct FlowTrace {
  /// "d_<a>_<b>" for each pair of cone samples.
  std::vector<std::string> distance_labels;
  std::vector<FlowRecord> records;
  FlowState final_state;
  bool converged = false;
  long rejected_steps = 0;

  std::string status() const { return converged ? "CONVERGED" : "NOT_CONVERGED"; }
  /// Columns t, mu, sup_R_dev, area, d_*, u_min, u_max; 12 significant digits.
  std::string to_csv() const;
};

/// du/dt = gamma - R per node (cone cells use their flat reference part), plus the
/// dilation term when requested.
GridField flow_velocity(const ConicMetric& metric, bool dilation_gauge = false);

/// One semi-implicit step (M + dt K / 4 pi) delta = dt M (gamma - R) with M = e^u m frozen,
/// then the area is restored to 2 by a constant when config.renormalize is set.
/// Throws CflError when sup|delta| exceeds config.safeguard and BlowUpError on a
/// non-finite update.
FlowState flow_step(const FlowState& state, double dt, const FlowConfig& config = {});

/// One trace record. phi, when given and nonempty, seeds the entropy minimization and
/// receives the new minimizer.
FlowRecord observables(const FlowState& state, bool with_mu = true, bool with_distances = true,
                       GridField* phi = nullptr);

/// Integrates until sup|du/dt| < stop_threshold, max_time or max_steps. The initial
/// potential must be constant near every interior cone point (DomainError otherwise).
/// Throws BlowUpError when the curvature guard trips.
FlowTrace run_flow(const ConicMetric& initial, const FlowConfig& config = {});

}  // namespace conic_ricci
