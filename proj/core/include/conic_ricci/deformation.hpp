#pragma once

#include <string>
#include <vector>

#include "conic_ricci/entropy.hpp"
#include "conic_ricci/metric.hpp"
#include "conic_ricci/soliton.hpp"

namespace conic_ricci {

/// Multiplies every finite point by t in (0, 1]; the largest weight must already sit at
/// infinity. t = 1 returns the divisor unchanged.
ConeDivisor scale_divisor(const ConeDivisor& divisor, double t);

/// a0 + psi(z/t) (u_inf - a0) with psi = 1 - chi: exactly a0 on the disk |z| <= R t and
/// exactly u_inf for |z| >= 2 R t (R the cutoff radius). Throws GridError when the
/// transition is narrower than four rows or falls off the grid.
GridField regularize_potential(const Discretization& disc, const GridField& u_inf, double a0, double t,
                               const CutoffSpec& psi = {});

enum class Pole { South, North };

struct DecayFit {
  /// False when u is constant over the window; the exponents are NaN then.
  bool signal = false;
  /// u ~ a0 + coefficient * r^exponent, r the distance to the pole in the chart.
  double a0 = 0.0;
  double coefficient = 0.0;
  double exponent = 0.0;
  /// Log-log slopes of |du/dr| and of |Laplacian u| (expected exponent - 1 and - 2).
  double gradient_exponent = 0.0;
  double hessian_exponent = 0.0;
  /// Root mean square of the residual relative to |u - a0|.
  double relative_rms = 0.0;
  double r_inner = 0.0;
  double r_outer = 0.0;
  int samples = 0;
  std::string note;
};

/// Fits a0 + C r^p to column 0 of u over r_inner <= r <= r_outer. The window must span a
/// decade (DomainError) and stay three rows away from the end of the grid (GridError).
DecayFit decay_exponent_fit(const Discretization& disc, const GridField& u, Pole pole, double r_inner,
                            double r_outer);

/// Same fit with the window chosen from the data: from where |u - u(end)| first exceeds
/// 1e-9 (relative) out to where it reaches 1e-2 or r = 0.5.
DecayFit decay_exponent_fit(const Discretization& disc, const GridField& u, Pole pole);

struct FamilyOptions {
  /// Angular resolution of the cylinder grid (a multiple of 4 keeps z = i on a node).
  int n_phi = 128;
  /// Each polar cap beyond the grid carries reference measure below this.
  double cap_mass = 1e-10;
  CutoffSpec psi;
};

struct FamilyMember {
  double t = 0.0;
  ConeDivisor divisor;
  /// e^(u_inf(t)) g_beta(t), moved to area 2 by a constant.
  ConicMetric metric;
  /// Area before that constant was added.
  double raw_area = 0.0;
  /// The potential is constant on the disk |z| <= R t.
  bool regular = false;
  /// max over |z| < R of |d dbar u| |z|^(2 beta_k'), excluding the pole rows.
  double hessian_constant = 0.0;
};

struct DeformationFamily {
  ConeDivisor base;
  ConeDivisor limit_divisor;
  double beta_k = 0.0;
  double beta_k_prime = 0.0;
  SolitonProfile soliton;
  /// g_inf = e^(u_inf) g_beta_inf on the same grid, area 2.
  ConicMetric limit;
  GridField u_inf;
  double a0 = 0.0;
  DecayFit pole_fit;
  CutoffSpec psi;
  std::vector<FamilyMember> members;
};

/// Seven members 1/4, 1/8, ..., 1/256: the entropy gap to the limit shrinks roughly like
/// t^1.7, and only this deep does the last member come within 1% of it.
std::vector<double> default_t_list();

/// Solves the soliton of the limit divisor, writes it over the cutoff reference of that
/// divisor on a log2-aligned cylinder (dilations by 2^-k are node shifts) and builds
/// g(t) for every t. The divisor must be unstable with its largest weight at infinity;
/// t values must decrease in (0, 1] and move the finite points onto grid nodes.
DeformationFamily build_family(const ConeDivisor& divisor, const std::vector<double>& t_list = default_t_list(),
                               const FamilyOptions& opts = {});

struct LqReport {
  double q = 0.0;
  std::vector<double> t;
  std::vector<double> norms;
  double limit_norm = 0.0;
  double sup = 0.0;
  double min = 0.0;
  /// All norms finite and sup/min < 10.
  bool uniformly_bounded = false;
  /// |norm - limit_norm| decreases over the last three members.
  bool converging = false;
};

/// Largest q with finite cone integrals: q 2 beta_k' < 2.
double lq_exponent_limit(const DeformationFamily& family);

/// L^q(d mu) norms of R over the non-cone cells of every member and of the limit.
/// Throws DomainError unless 1 < q < lq_exponent_limit.
LqReport lq_curvature_report(const DeformationFamily& family, double q);

struct MuConvergence {
  std::vector<double> t;
  std::vector<double> mu;
  double mu_limit = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  /// W(g_inf, Phi_t / |Phi_t|) for each member minimizer Phi_t carried over unchanged.
  std::vector<double> transported;
  /// mu of the pullback by z -> t z, which must equal mu.
  std::vector<double> pullback_mu;
  /// |mu(t_min) - mu_limit| < 0.01 |mu_limit| + 1e-3.
  bool smallest_close = false;
  /// mu > mu2 over the last three members.
  bool tail_above_mu2 = false;
  /// |mu - mu_limit| decreases over the last three members.
  bool gap_decreasing = false;
  /// Every transported value stays above mu_limit - 1e-6.
  bool no_contradiction = false;
  /// mu_limit >= max mu - 1e-3.
  bool upper_semicontinuous = false;
};

/// Metric pulled back by z -> t z: the same cells, with the reference dilated so that the
/// scaled points return to their base positions.
ConicMetric pullback_by_dilation(const ConicMetric& metric, double t);

MuConvergence mu_convergence_report(const DeformationFamily& family, const PartitionTable& table);

struct LimitFunctionals {
  std::vector<double> t;
  /// Integrals of Phi^2 R, Phi^2, Phi^2 log Phi^2 and |grad Phi|^2 per member, with Phi
  /// renormalized in each member.
  std::vector<double> curvature, mass, entropy, dirichlet;
  double limit_curvature = 0.0, limit_mass = 0.0, limit_entropy = 0.0, limit_dirichlet = 0.0;
  /// Differences to the limit decrease over the last three members (first three
  /// sequences) and the Dirichlet energies have liminf >= limit - 1e-3.
  bool converges = false;
  bool dirichlet_lower_semicontinuous = false;
};

/// Phi is one grid field carried to every member unchanged and renormalized there.
LimitFunctionals limit_functional_check(const DeformationFamily& family, const GridField& phi);

/// Constant of the mean-value bound |x^2 log x^2 - y^2 log y^2|_1 <= C (1 + |x|_4^2 +
/// |y|_4^2) |x - y|_2 on a metric of area 2.
constexpr double kEntropyContinuityConstant = 6.0;

/// Left side over the bracket on the right; stays below kEntropyContinuityConstant.
double entropy_continuity_ratio(const ConicMetric& metric, const GridField& x, const GridField& y);

}  // namespace conic_ricci
