#include "conic_ricci/grid.hpp"

#include <cmath>
#include <numbers>

#include "conic_ricci/error.hpp"

namespace conic_ricci {

std::string to_string(GridKind kind) {
  return kind == GridKind::Symmetric1D ? "symmetric1d" : "cylinder2d";
}

GridKind grid_kind_from_string(const std::string& text) {
  if (text == "symmetric1d") return GridKind::Symmetric1D;
  if (text == "cylinder2d") return GridKind::Cylinder2D;
  throw DomainError("unknown discretization kind '" + text + "' (expected symmetric1d or cylinder2d)");
}

Discretization Discretization::symmetric(int n, double s_min, double s_max) {
  if (n < 64) throw GridError("symmetric grid needs at least 64 nodes");
  if (!(s_max > s_min)) throw GridError("symmetric grid needs s_max > s_min");
  Discretization d;
  d.kind_ = GridKind::Symmetric1D;
  d.n_s_ = n;
  d.n_phi_ = 1;
  d.s_min_ = s_min;
  d.h_s_ = (s_max - s_min) / (n - 1);
  d.h_phi_ = 2.0 * std::numbers::pi;
  return d;
}

Discretization Discretization::cylinder(int n_s, int n_phi, double s_min, double h_s) {
  if (n_s < 128 || n_phi < 128) throw GridError("cylinder grid needs at least 128 x 128 nodes");
  if (!(h_s > 0.0)) throw GridError("cylinder grid needs h_s > 0");
  Discretization d;
  d.kind_ = GridKind::Cylinder2D;
  d.n_s_ = n_s;
  d.n_phi_ = n_phi;
  d.s_min_ = s_min;
  d.h_s_ = h_s;
  d.h_phi_ = 2.0 * std::numbers::pi / n_phi;
  return d;
}

Discretization Discretization::cylinder_log2_aligned(int n_phi, double s_lo, double s_hi) {
  const double per_octave = std::max(1.0, std::round(n_phi * std::numbers::ln2 / (2.0 * std::numbers::pi)));
  const double h = std::numbers::ln2 / per_octave;
  const long i_lo = static_cast<long>(std::floor(s_lo / h));
  const long i_hi = static_cast<long>(std::ceil(s_hi / h));
  return cylinder(static_cast<int>(i_hi - i_lo + 1), n_phi, static_cast<double>(i_lo) * h, h);
}

std::optional<std::size_t> Discretization::locate(std::complex<double> z, double tol) const {
  if (z == std::complex<double>{}) return std::nullopt;
  const double si = (std::log(std::abs(z)) - s_min_) / h_s_;
  const double ri = std::round(si);
  if (std::abs(si - ri) > tol || ri < 0 || ri > n_s_ - 1) return std::nullopt;
  if (kind_ == GridKind::Symmetric1D) return std::nullopt;
  double arg = std::arg(z);
  if (arg < 0) arg += 2.0 * std::numbers::pi;
  const double sj = arg / h_phi_;
  double rj = std::round(sj);
  if (std::abs(sj - rj) > tol) return std::nullopt;
  if (rj >= n_phi_) rj -= n_phi_;
  return index(static_cast<int>(ri), static_cast<int>(rj));
}

Discretization Discretization::shifted(double ds) const {
  Discretization d = *this;
  d.s_min_ += ds;
  return d;
}

GridField Discretization::broadcast_radial(const std::vector<double>& per_row) const {
  if (per_row.size() != static_cast<std::size_t>(n_s_)) throw GridError("radial profile has wrong length");
  GridField out(size());
  for (int i = 0; i < n_s_; ++i)
    for (int j = 0; j < n_phi_; ++j) out[index(i, j)] = per_row[i];
  return out;
}

}  // namespace conic_ricci
