#pragma once

#include <complex>
#include <memory>
#include <vector>

#include "conic_ricci/grid.hpp"
#include "conic_ricci/reference.hpp"

namespace conic_ricci {

struct ConeNode {
  std::size_t node = 0;
  double weight = 0.0;
  std::complex<double> z{};
};

/// A reference density integrated over the control cells of a grid, with the scale
/// constant fixed so that the total reference measure is 2.
///
/// mass[i] is the reference measure of cell i (end cells include their polar cap);
/// curvature_mass[i] is the integral of the smooth reference curvature over the cell.
/// Cells around interior cone points are integrated with a polar substitution that
/// absorbs the |z - p|^(-2 beta) factor.
class ReferenceSampling {
 public:
  static std::shared_ptr<const ReferenceSampling> build(const ReferenceDensity& density, const Discretization& disc);

  const ReferenceDensity& density() const { return density_; }
  const Discretization& disc() const { return disc_; }
  const GridField& mass() const { return mass_; }
  const GridField& curvature_mass() const { return curvature_mass_; }
  /// Log-density w at the nodes; +inf on cone nodes.
  const GridField& log_density() const { return w_; }
  /// Smooth pointwise curvature of the reference; NaN on cone nodes.
  const GridField& curvature() const { return curvature_; }
  const std::vector<ConeNode>& cone_nodes() const { return cones_; }
  bool is_cone(std::size_t node) const { return cone_mask_[node] != 0; }
  double gamma() const { return density_.gamma(); }

 private:
  ReferenceDensity density_;
  Discretization disc_;
  GridField mass_, curvature_mass_, w_, curvature_;
  std::vector<ConeNode> cones_;
  std::vector<char> cone_mask_;
};

/// Conformal metric e^u g_ref on a grid.
class ConicMetric {
 public:
  ConicMetric() = default;
  ConicMetric(std::shared_ptr<const ReferenceSampling> reference, GridField potential);

  const ReferenceSampling& reference() const { return *reference_; }
  const std::shared_ptr<const ReferenceSampling>& reference_ptr() const { return reference_; }
  const Discretization& disc() const { return reference_->disc(); }
  const GridField& potential() const { return u_; }
  double gamma() const { return reference_->gamma(); }

  /// Cell measures e^u * mass.
  GridField measure() const;
  double area() const;
  ConicMetric with_potential(GridField potential) const;
  /// Adds the constant that brings the area to exactly 2.
  ConicMetric normalized() const;

 private:
  std::shared_ptr<const ReferenceSampling> reference_;
  GridField u_;
};

/// Moves the largest weight to infinity when needed, builds the cutoff reference,
/// normalizes its scale and returns the metric with u = 0.
ConicMetric build_reference_metric(const ConeDivisor& divisor, const CutoffSpec& cutoff, const Discretization& disc);

/// Rotationally symmetric grid [-S, S] with S large enough that each polar cap carries
/// reference measure below 1e-10 for the given decay rates.
Discretization default_symmetric_grid(int n, double alpha_low, double alpha_high);

/// Positive semidefinite five-point stiffness: (K u)_i = sum over edges w_e (u_i - u_j),
/// radial edges h_phi/h_s, periodic angular edges h_s/h_phi, no flux at the ends.
GridField stiffness_apply(const Discretization& disc, const GridField& u);

/// Integral of R over each cell, cone cells included (their reference part is flat):
/// kref + (K u) / 4 pi. Sums to the reference curvature integral for any u.
GridField curvature_mass(const ConicMetric& metric);

/// Non-cone nodes whose curvature is resolved in double precision: rounding of u, scaled
/// by the stiffness at the node and divided by 4 pi times the cell measure, stays below
/// 1e-9. Cells of tiny measure near the poles fail this and are left out of sup norms.
std::vector<char> resolved_nodes(const ConicMetric& metric);

/// Normalized scalar curvature per node, NaN on cone nodes. Constant-curvature
/// metrics give R = gamma.
GridField scalar_curvature(const ConicMetric& metric);

struct GaussBonnet {
  double area = 0.0;
  double curvature_integral = 0.0;
  double defect = 0.0;
};

/// Area and integral of R over the cells that do not carry a cone point;
/// defect = integral - 2 gamma.
GaussBonnet area_and_gauss_bonnet(const ConicMetric& metric);

}  // namespace conic_ricci
