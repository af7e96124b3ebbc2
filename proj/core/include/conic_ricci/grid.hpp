#pragma once

#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "conic_ricci/divisor.hpp"

namespace conic_ricci {

using GridField = std::vector<double>;

enum class GridKind { Symmetric1D, Cylinder2D };

std::string to_string(GridKind kind);
GridKind grid_kind_from_string(const std::string& text);

/// Node-centred grid on the cylinder s = log|z|, phi = arg z. Node (i, j) sits at
/// s = s_min + i*h_s, phi = j*h_phi; its control cell is [s - h_s/2, s + h_s/2] x
/// [phi - h_phi/2, phi + h_phi/2]. The two polar caps beyond the end cells are carried
/// analytically by the end nodes. Symmetric1D is the rotationally symmetric special
/// case with a single angular column of width 2*pi.
class Discretization {
 public:
  Discretization() = default;

  /// Rotationally symmetric grid with n >= 64 nodes on [s_min, s_max].
  static Discretization symmetric(int n, double s_min, double s_max);
  /// Full cylinder grid, n_s >= 128 and n_phi >= 128.
  static Discretization cylinder(int n_s, int n_phi, double s_min, double h_s);
  /// Cylinder grid whose radial spacing divides log 2 and is close to the angular
  /// spacing, covering at least [s_lo, s_hi]. Dilations by powers of 2 are then exact
  /// node shifts.
  static Discretization cylinder_log2_aligned(int n_phi, double s_lo, double s_hi);

  GridKind kind() const { return kind_; }
  int n_s() const { return n_s_; }
  int n_phi() const { return n_phi_; }
  std::size_t size() const { return static_cast<std::size_t>(n_s_) * static_cast<std::size_t>(n_phi_); }
  double h_s() const { return h_s_; }
  double h_phi() const { return h_phi_; }
  double s_min() const { return s_min_; }
  double s_max() const { return s_min_ + h_s_ * (n_s_ - 1); }

  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(n_phi_) + static_cast<std::size_t>(j);
  }
  int row(std::size_t node) const { return static_cast<int>(node / static_cast<std::size_t>(n_phi_)); }
  int column(std::size_t node) const { return static_cast<int>(node % static_cast<std::size_t>(n_phi_)); }
  double s(int i) const { return s_min_ + h_s_ * i; }
  double phi(int j) const { return h_phi_ * j; }
  std::complex<double> z(int i, int j) const { return std::polar(std::exp(s(i)), phi(j)); }

  /// Edge weights of the five-point stiffness form: radial edges h_phi/h_s, angular
  /// edges h_s/h_phi.
  double radial_edge_weight() const { return h_phi_ / h_s_; }
  double angular_edge_weight() const { return h_s_ / h_phi_; }

  /// Node carrying a finite, non-origin point, if the point lies on a node.
  std::optional<std::size_t> locate(std::complex<double> z, double tol = 1e-8) const;

  /// Same nodes with every s-coordinate moved by ds.
  Discretization shifted(double ds) const;

  /// Copies a radial profile (one value per row) onto every column.
  GridField broadcast_radial(const std::vector<double>& per_row) const;

 private:
  GridKind kind_ = GridKind::Symmetric1D;
  int n_s_ = 0;
  int n_phi_ = 1;
  double s_min_ = 0.0;
  double h_s_ = 1.0;
  double h_phi_ = 0.0;
};

}  // namespace conic_ricci
