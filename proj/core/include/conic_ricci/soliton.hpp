#pragma once

#include <memory>
#include <string>
#include <vector>

#include "conic_ricci/metric.hpp"

namespace conic_ricci {

/// r = slope * s + cubic * s^3 + O(s^5) in arc length s from a pole.
struct PoleSeries {
  double slope = 0.0;
  double cubic = 0.0;
};

/// Rotationally symmetric shrinking soliton dS^2 + r(S)^2 dphi^2 with potential theta,
/// S the arc length from the north pole. theta' = kappa * r, and
/// r'' = -r (2 pi gamma + kappa r') is the curvature equation R = gamma + Laplacian(theta)
/// in normalized units (R = K / 2pi, Laplacian / 4pi).
struct SolitonProfile {
  double beta_north = 0.0;
  double beta_south = 0.0;
  double gamma = 1.0;
  double kappa = 0.0;
  double length = 0.0;
  /// Arc length of the equator (r' = 0) from the north pole.
  double equator = 0.0;
  std::vector<double> s, r, dr, theta;
  PoleSeries north, south;
  double matching_defect = 0.0;
  double area = 0.0;
  double theta_mass = 0.0;  // integral of e^theta
  double hessian_residual = 0.0;
  double curvature_residual = 0.0;
  std::vector<double> kappa_iterates;

  /// Columns s, r, theta; 12 significant digits.
  std::string to_csv() const;
};

/// Shoots in kappa from both poles and matches the two equators; throws
/// ConvergenceError when no bracket is found in |kappa| <= 1e3.
SolitonProfile solve_soliton(double beta_north, double beta_south, double tol = 1e-10);

/// Constant-curvature metric with weight beta at 0 and infinity: the round density
/// pulled back by z -> z^(1 - beta), area 2, R = 1 - beta.
ConicMetric football_metric(double beta, const Discretization& disc);

/// Soliton written as e^u times a reference on the cylinder, with its potential.
struct ConformalSoliton {
  ConicMetric metric;
  GridField theta;
  /// Position of the equator in s before it was moved to s = 0.
  double equator_shift = 0.0;
  /// Asymptotic slope of w + u toward the north pole, minus the expected 2 beta - 2.
  double north_slope_error = 0.0;
};

/// Solves the conformal form w'' = -e^w (4 pi gamma - kappa w'), theta' = -kappa e^w in
/// s = log|z| (south pole at s = -inf), equator at s = 0, and subtracts the reference.
/// The default reference is the cutoff reference of the two pole weights with the
/// larger one at infinity (the soliton is viewed from the other pole if needed).
ConformalSoliton to_conformal(const SolitonProfile& profile, const Discretization& disc);
/// Explicit reference; its pole weights may match the soliton in either order.
ConformalSoliton to_conformal(const SolitonProfile& profile, std::shared_ptr<const ReferenceSampling> reference);

/// Smooth two-pole reference for the weights (larger one at infinity), on a symmetric
/// grid of n rows deep enough for both caps.
std::shared_ptr<const ReferenceSampling> smooth_pole_reference(double beta_a, double beta_b, int n);

/// sup of |R - gamma - Laplacian(theta)| for a rotationally symmetric metric, from
/// sixth-order differences of w + u and theta along s, over rows where e^(w+u) >= 1e-4.
double soliton_residual(const ConicMetric& metric, const GridField& theta);

}  // namespace conic_ricci
