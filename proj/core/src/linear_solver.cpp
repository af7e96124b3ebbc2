#include "conic_ricci/linear_solver.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>

#include "conic_ricci/error.hpp"
#include "conic_ricci/metric.hpp"

namespace conic_ricci {

namespace {
// FFTW planning is not thread-safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct ConformalSolver::Impl {
  Discretization disc;
  int modes = 1;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<double> eigen;  // angular stiffness eigenvalue per mode

  // Preconditioner application: z = P^{-1} r, with per-mode tridiagonal factors.
  void apply(const std::vector<double>& lower, const std::vector<double>& pivot, const GridField& r,
             GridField& z) const {
    const int ns = disc.n_s(), np = disc.n_phi();
    if (np == 1) {
      thomas(lower, pivot, 0, r.data(), z.data());
      return;
    }
    std::vector<double> in(r.begin(), r.end());
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(ns) * modes);
    fftw_execute_dft_r2c(forward, in.data(), reinterpret_cast<fftw_complex*>(spec.data()));
    std::vector<double> re(ns), im(ns), xr(ns), xi(ns);
    for (int k = 0; k < modes; ++k) {
      for (int i = 0; i < ns; ++i) {
        re[i] = spec[static_cast<std::size_t>(i) * modes + k].real();
        im[i] = spec[static_cast<std::size_t>(i) * modes + k].imag();
      }
      thomas(lower, pivot, k, re.data(), xr.data());
      thomas(lower, pivot, k, im.data(), xi.data());
      for (int i = 0; i < ns; ++i)
        spec[static_cast<std::size_t>(i) * modes + k] = {xr[i] / np, xi[i] / np};
    }
    fftw_execute_dft_c2r(backward, reinterpret_cast<fftw_complex*>(spec.data()), z.data());
  }

  // Forward/back substitution with the factored tridiagonal of mode k; the
  // off-diagonal is constant (-c * radial weight), stored in lower[0].
  void thomas(const std::vector<double>& lower, const std::vector<double>& pivot, int k, const double* rhs,
              double* out) const {
    const int ns = disc.n_s();
    const double off = lower[0];
    const double* p = pivot.data() + static_cast<std::size_t>(k) * ns;
    out[0] = rhs[0];
    for (int i = 1; i < ns; ++i) out[i] = rhs[i] - off / p[i - 1] * out[i - 1];
    out[ns - 1] /= p[ns - 1];
    for (int i = ns - 2; i >= 0; --i) out[i] = (out[i] - off * out[i + 1]) / p[i];
  }
};

ConformalSolver::ConformalSolver(const Discretization& disc) : impl_(std::make_unique<Impl>()) {
  impl_->disc = disc;
  const int ns = disc.n_s(), np = disc.n_phi();
  impl_->modes = np / 2 + 1;
  impl_->eigen.resize(impl_->modes);
  for (int k = 0; k < impl_->modes; ++k)
    impl_->eigen[k] = np == 1 ? 0.0 : disc.angular_edge_weight() * (2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / np));
  if (np > 1) {
    std::lock_guard lock(planner_mutex());
    std::vector<double> in(disc.size());
    std::vector<fftw_complex> out(static_cast<std::size_t>(ns) * impl_->modes);
    int n[] = {np};
    impl_->forward = fftw_plan_many_dft_r2c(1, n, ns, in.data(), nullptr, 1, np, out.data(), nullptr, 1,
                                            impl_->modes, FFTW_ESTIMATE);
    impl_->backward = fftw_plan_many_dft_c2r(1, n, ns, out.data(), nullptr, 1, impl_->modes, in.data(), nullptr, 1,
                                             np, FFTW_ESTIMATE);
    if (!impl_->forward || !impl_->backward) throw Error("FFT planning failed");
  }
}

ConformalSolver::~ConformalSolver() {
  if (impl_ && impl_->forward) {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(impl_->forward);
    fftw_destroy_plan(impl_->backward);
  }
}

SolveStats ConformalSolver::solve(const GridField& d, double c, const GridField& b, GridField& x, double rel_tol,
                                  int max_iter) const {
  const Discretization& disc = impl_->disc;
  const int ns = disc.n_s(), np = disc.n_phi();
  const std::size_t n = disc.size();
  if (d.size() != n || b.size() != n || x.size() != n) throw GridError("solver input does not match the grid");

  // Factor the per-mode tridiagonals of diag(row mean of d) + c K.
  const double wr = disc.radial_edge_weight();
  std::vector<double> lower{-c * wr};
  std::vector<double> pivot(static_cast<std::size_t>(impl_->modes) * ns);
  std::vector<double> row_mean(ns, 0.0);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < np; ++j) row_mean[i] += d[disc.index(i, j)];
    row_mean[i] /= np;
  }
  for (int k = 0; k < impl_->modes; ++k) {
    double* p = pivot.data() + static_cast<std::size_t>(k) * ns;
    for (int i = 0; i < ns; ++i) {
      const int degree = (i > 0) + (i < ns - 1);
      double diag = row_mean[i] + c * (wr * degree + impl_->eigen[k]);
      if (i > 0) diag -= lower[0] * lower[0] / p[i - 1];
      p[i] = diag;
    }
  }

  auto apply_a = [&](const GridField& v, GridField& out) {
    out = stiffness_apply(disc, v);
    for (std::size_t k = 0; k < n; ++k) out[k] = d[k] * v[k] + c * out[k];
  };
  auto dotp = [n](const GridField& a, const GridField& b2) {
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) s += a[k] * b2[k];
    return s;
  };

  const double bnorm = std::sqrt(dotp(b, b));
  SolveStats stats;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return stats;
  }
  GridField r(n), z(n), p(n), q(n);
  apply_a(x, q);
  for (std::size_t k = 0; k < n; ++k) r[k] = b[k] - q[k];
  impl_->apply(lower, pivot, r, z);
  p = z;
  double rz = dotp(r, z);
  for (int it = 0; it < max_iter; ++it) {
    const double rnorm = std::sqrt(dotp(r, r));
    stats.relative_residual = rnorm / bnorm;
    if (stats.relative_residual <= rel_tol) return stats;
    apply_a(p, q);
    const double alpha = rz / dotp(p, q);
    for (std::size_t k = 0; k < n; ++k) {
      x[k] += alpha * p[k];
      r[k] -= alpha * q[k];
    }
    impl_->apply(lower, pivot, r, z);
    const double rz_new = dotp(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    for (std::size_t k = 0; k < n; ++k) p[k] = z[k] + beta * p[k];
    stats.iterations = it + 1;
  }
  stats.relative_residual = std::sqrt(dotp(r, r)) / bnorm;
  if (stats.relative_residual <= rel_tol) return stats;
  throw ConvergenceError("conjugate gradients did not converge");
}

}  // namespace conic_ricci
