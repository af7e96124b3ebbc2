#pragma once

#include <complex>
#include <vector>

#include "conic_ricci/divisor.hpp"

namespace conic_ricci {

/// Radial cutoff chi: 1 on |z| <= inner_radius (the ball B), 0 on |z| >= 2*inner_radius,
/// a degree-9 monotone polynomial in |z| in between (C^4 across both radii).
struct CutoffSpec {
  double inner_radius = 2.0;

  double chi(double r) const;
  double chi_r(double r) const;
  double chi_rr(double r) const;
  /// 1 - chi.
  double psi(double r) const { return 1.0 - chi(r); }
};

/// Log-density, its s-derivative and the smooth part of the normalized scalar
/// curvature at one point of the cylinder. The log-density is w = log(F |z|^2), so the
/// metric is e^w (ds^2 + dphi^2).
struct ReferenceSample {
  double w = 0.0;
  double w_s = 0.0;
  double curvature = 0.0;
};

/// Closed-form conic reference metric on the sphere.
///
/// Football(beta): constant curvature 1 - beta with weight beta at 0 and infinity
/// (beta = 0 is the round metric). TwoPole(beta_0, beta_inf): the smooth-curvature density
/// c |z|^(-2 beta_0) (1 + |z|^2)^(beta_0 + beta_inf - 2). Cutoff(divisor): c * [chi * prod |z - p_j|^(-2 beta_j)
/// + (1 - chi) * (1 + |z|^2)^(beta_inf - 2)], flat on B away from the cone points.
/// Every density carries a multiplicative constant c and a dilation shift: the shifted
/// density is evaluated at s + shift, i.e. it is the pullback under z -> e^shift z.
class ReferenceDensity {
 public:
  enum class Kind { Football, TwoPole, Cutoff };

  static ReferenceDensity football(double beta);
  static ReferenceDensity two_pole(double beta_south, double beta_north);
  /// Expects the largest weight at infinity (or no cone point at infinity at all).
  static ReferenceDensity cutoff(const ConeDivisor& divisor, const CutoffSpec& spec = {});

  Kind kind() const { return kind_; }
  const ConeDivisor& divisor() const { return divisor_; }
  const CutoffSpec& cutoff_spec() const { return cutoff_; }
  double scale() const { return scale_; }
  double shift() const { return shift_; }
  double football_beta() const { return football_beta_; }
  double gamma() const { return divisor_.gamma(); }

  ReferenceDensity with_scale(double c) const;
  ReferenceDensity dilated(double ds) const;

  ReferenceSample evaluate(double s, double phi) const;
  double log_density_times_r2(double s, double phi) const { return evaluate(s, phi).w; }

  /// Cone weights at the two ends of the cylinder (origin and infinity).
  double weight_low() const;
  double weight_high() const;
  /// Exponential decay rates of e^w toward the two ends: 2 - 2*weight.
  double alpha_low() const { return 2.0 - 2.0 * weight_low(); }
  double alpha_high() const { return 2.0 - 2.0 * weight_high(); }

  /// Reference measure per unit angle of the cap beyond s_boundary (toward the origin
  /// for the low end, toward infinity for the high end).
  double tail_mass_low(double s_boundary, double phi) const;
  double tail_mass_high(double s_boundary, double phi) const;
  /// Integral of the smooth curvature against the reference measure over the same caps.
  double tail_curvature_low(double s_boundary, double phi) const;
  double tail_curvature_high(double s_boundary, double phi) const;

  /// Cone points that are neither the origin nor infinity, in the chart of this
  /// (possibly dilated) density.
  std::vector<ConeEntry> interior_cones() const;

 private:
  Kind kind_ = Kind::Football;
  ConeDivisor divisor_;
  CutoffSpec cutoff_;
  double football_beta_ = 0.0;
  double scale_ = 1.0;
  double shift_ = 0.0;
};

}  // namespace conic_ricci
