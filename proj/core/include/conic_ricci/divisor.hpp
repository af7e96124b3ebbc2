#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace conic_ricci {

/// A point of the Riemann sphere in the stereographic chart; `at_infinity` marks the
/// north pole.
struct ConePoint {
  std::complex<double> z{};
  bool at_infinity = false;

  static ConePoint infinity() { return {{}, true}; }
  static ConePoint finite(std::complex<double> value) { return {value, false}; }

  bool operator==(const ConePoint& other) const {
    return at_infinity == other.at_infinity && (at_infinity || z == other.z);
  }
  bool is_origin() const { return !at_infinity && z == std::complex<double>{}; }
};

/// Cone weight stored as an exact decimal with twelve fractional digits, so that sums
/// of weights compare without floating-point ties.
class ExactWeight {
 public:
  static constexpr std::int64_t kScale = 1'000'000'000'000;  // 1e12

  ExactWeight() = default;
  /// Parses "0.25", ".5", "1e-1" is rejected; at most 12 fractional digits.
  static ExactWeight parse(std::string_view text);
  /// Rounds to the nearest 1e-12.
  static ExactWeight from_double(double value);
  static ExactWeight from_units(std::int64_t units) { return ExactWeight(units); }

  std::int64_t units() const { return units_; }
  double value() const { return static_cast<double>(units_) / static_cast<double>(kScale); }
  /// Shortest decimal rendering ("0.4", "0.125").
  std::string text() const;

  friend auto operator<=>(const ExactWeight&, const ExactWeight&) = default;

 private:
  explicit ExactWeight(std::int64_t units) : units_(units) {}
  std::int64_t units_ = 0;
};

struct ConeEntry {
  ConePoint point;
  ExactWeight weight;
};

/// Marked points with cone weights in (0,1), sorted by ascending weight (a point at
/// infinity sorts after a finite point of equal weight). gamma = 1 - sum/2 > 0.
class ConeDivisor {
 public:
  ConeDivisor() = default;

  /// Validates and canonicalizes. Throws DomainError on a weight outside (0,1),
  /// duplicate points, or gamma <= 0.
  static ConeDivisor make(std::vector<ConeEntry> entries);
  static ConeDivisor from_weights(const std::vector<std::pair<ConePoint, double>>& entries);

  const std::vector<ConeEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  double weight(std::size_t j) const { return entries_[j].weight.value(); }
  const ConePoint& point(std::size_t j) const { return entries_[j].point; }

  double gamma() const;
  std::int64_t total_units() const;

  /// Weight carried by the point at infinity, 0 when infinity is a smooth point.
  double weight_at_infinity() const;
  /// Weight carried by the origin, 0 when the origin is a smooth point.
  double weight_at_origin() const;
  /// Finite points other than the origin.
  std::vector<ConeEntry> interior_entries() const;

  /// Applies z -> 1/(z - p_k) when the largest-weight point p_k is finite, so that it
  /// lands at infinity. Returns a copy unchanged otherwise.
  ConeDivisor with_largest_at_infinity() const;

  /// Multiplies every finite point by t > 0; weights unchanged.
  ConeDivisor scaled(double t) const;

 private:
  std::vector<ConeEntry> entries_;
};

/// Weight beta_south at 0 and beta_north at infinity; zero weights are left out.
ConeDivisor two_pole_divisor(double beta_south, double beta_north);

}  // namespace conic_ricci
