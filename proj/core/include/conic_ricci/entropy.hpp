#pragma once

#include <optional>
#include <string>
#include <vector>

#include "conic_ricci/metric.hpp"

namespace conic_ricci {

/// W(g, Phi) = integral of (1/(pi gamma)) |grad Phi|^2 + Phi^2 R / gamma - Phi^2 log Phi^2
/// minus 3/2, for Phi > 0 with integral of Phi^2 equal to 1. Constant Phi = 1/sqrt(2)
/// gives log 2 - 1/2 on every metric of the class, and Phi = e^(theta/2)/sqrt(2) is
/// critical on a soliton with potential theta.
/// Throws DomainError when Phi is not positive or its L2 norm is off by more than 1e-8.
double w_functional(const ConicMetric& metric, const GridField& phi);

/// Size of the Euler-Lagrange residual of W on the unit sphere of L2(dmu), measured in
/// the dual norm of K / (pi gamma) + M (the L2(dmu) norm for smooth residuals).
double euler_lagrange_residual(const ConicMetric& metric, const GridField& phi);

struct MuOptions {
  double tolerance = 1e-9;
  int max_iterations = 4000;
  /// Order in which starts are launched; empty means natural order. The result does not
  /// depend on it.
  std::vector<int> start_order;
  /// Extra starts appended after the built-in ones (need not be normalized).
  std::vector<GridField> extra_starts;
  /// Skip the cone bumps and use only the constant start plus the extra starts.
  bool constant_only = false;
};

struct EntropyResult {
  double mu = 0.0;
  GridField phi;
  double residual = 0.0;
  int iterations = 0;
  /// Index of the winning start: 0 constant, 1.. cone bumps, then extra starts.
  int start_index = 0;
  bool converged = false;
};

/// Starts: the constant, then one bump per cone point in the order of cone_samples.
std::vector<GridField> mu_starts(const ConicMetric& metric);

/// Preconditioned projected gradient with Armijo backtracking, then projected Newton-CG,
/// from every start (in parallel). The lowest W wins; values within 1e-12 go to the
/// lower start index. Never exceeds W at constant Phi.
EntropyResult minimize_mu(const ConicMetric& metric, const MuOptions& opts = {});

struct PartitionRow {
  std::vector<int> north;  // divisor indices (0-based) merged at the north pole
  std::vector<int> south;
  double beta_north = 0.0;
  double beta_south = 0.0;
  double kappa = 0.0;
  double mu = 0.0;
  double residual = 0.0;
  bool ok = false;
  std::string error;
};

struct PartitionTable {
  std::vector<PartitionRow> rows;
  /// Largest mu and its row; second largest over the remaining rows (NaN with one row).
  double mu1 = 0.0;
  double mu2 = 0.0;
  int best_row = -1;
  /// The best row puts the largest weight alone on one side.
  bool largest_alone_wins = false;
};

/// Every split of the divisor into two nonempty groups, each merged into one pole of a
/// two-pole soliton, with the mu of that soliton over the smooth two-pole reference on a
/// grid of n_s rows. The divisor must
/// be unstable and have at most 6 points.
PartitionTable mu_comparison(const ConeDivisor& divisor, int n_s = 4096);

}  // namespace conic_ricci
