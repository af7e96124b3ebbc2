#pragma once

#include <memory>

#include "conic_ricci/grid.hpp"

namespace conic_ricci {

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Conjugate gradients for (diag(d) + c K) x = b with K the stiffness of
/// stiffness_apply. The preconditioner replaces d by its row average, which makes it
/// diagonal in the angular Fourier modes; each mode is then a tridiagonal solve in s.
/// On a rotationally symmetric grid the preconditioner is the exact inverse.
class ConformalSolver {
 public:
  explicit ConformalSolver(const Discretization& disc);
  ~ConformalSolver();
  ConformalSolver(const ConformalSolver&) = delete;
  ConformalSolver& operator=(const ConformalSolver&) = delete;

  /// x holds the initial guess on entry. Throws ConvergenceError when the residual
  /// does not drop below rel_tol * |b| within max_iter iterations.
  SolveStats solve(const GridField& d, double c, const GridField& b, GridField& x, double rel_tol = 1e-12,
                   int max_iter = 400) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace conic_ricci
