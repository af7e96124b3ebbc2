#include "conic_ricci/divisor.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>

#include "conic_ricci/error.hpp"

namespace conic_ricci {

ExactWeight ExactWeight::parse(std::string_view text) {
  std::string_view body = text;
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.front()))) body.remove_prefix(1);
  while (!body.empty() && std::isspace(static_cast<unsigned char>(body.back()))) body.remove_suffix(1);
  if (body.empty()) throw DomainError("empty weight string");
  bool negative = false;
  if (body.front() == '-' || body.front() == '+') {
    negative = body.front() == '-';
    body.remove_prefix(1);
  }
  const auto dot = body.find('.');
  const std::string_view whole = body.substr(0, dot);
  const std::string_view frac = dot == std::string_view::npos ? std::string_view{} : body.substr(dot + 1);
  if (whole.empty() && frac.empty()) throw DomainError("weight '" + std::string(text) + "' is not a decimal");
  if (frac.size() > 12)
    throw DomainError("weight '" + std::string(text) + "' has more than 12 fractional digits");
  std::int64_t units = 0;
  for (char c : whole) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw DomainError("weight '" + std::string(text) + "' is not a decimal");
    if (units > 1'000'000) throw DomainError("weight '" + std::string(text) + "' is out of range");
    units = units * 10 + (c - '0');
  }
  units *= kScale;
  std::int64_t place = kScale / 10;
  for (char c : frac) {
    if (!std::isdigit(static_cast<unsigned char>(c)))
      throw DomainError("weight '" + std::string(text) + "' is not a decimal");
    units += (c - '0') * place;
    place /= 10;
  }
  return ExactWeight(negative ? -units : units);
}

ExactWeight ExactWeight::from_double(double value) {
  if (!std::isfinite(value) || std::abs(value) > 1e6) throw DomainError("weight is not finite");
  return ExactWeight(std::llround(value * static_cast<double>(kScale)));
}

std::string ExactWeight::text() const {
  const std::int64_t mag = units_ < 0 ? -units_ : units_;
  std::string out = units_ < 0 ? "-" : "";
  out += std::to_string(mag / kScale);
  std::int64_t frac = mag % kScale;
  if (frac != 0) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%012lld", static_cast<long long>(frac));
    std::string digits(buf);
    while (!digits.empty() && digits.back() == '0') digits.pop_back();
    out += "." + digits;
  }
  return out;
}

ConeDivisor ConeDivisor::make(std::vector<ConeEntry> entries) {
  for (const auto& e : entries) {
    if (e.weight.units() <= 0 || e.weight.units() >= ExactWeight::kScale)
      throw DomainError("cone weight " + e.weight.text() + " must lie in the open interval (0,1)");
    if (!e.point.at_infinity && !(std::isfinite(e.point.z.real()) && std::isfinite(e.point.z.imag())))
      throw DomainError("cone point is not finite");
  }
  for (std::size_t a = 0; a < entries.size(); ++a)
    for (std::size_t b = a + 1; b < entries.size(); ++b)
      if (entries[a].point == entries[b].point) throw DomainError("duplicate cone points");
  std::stable_sort(entries.begin(), entries.end(), [](const ConeEntry& x, const ConeEntry& y) {
    if (x.weight != y.weight) return x.weight < y.weight;
    return !x.point.at_infinity && y.point.at_infinity;
  });
  ConeDivisor d;
  d.entries_ = std::move(entries);
  if (2 * ExactWeight::kScale - d.total_units() <= 0)
    throw DomainError("gamma = 1 - sum(beta)/2 must be positive");
  return d;
}

ConeDivisor ConeDivisor::from_weights(const std::vector<std::pair<ConePoint, double>>& entries) {
  std::vector<ConeEntry> list;
  list.reserve(entries.size());
  for (const auto& [p, w] : entries) list.push_back({p, ExactWeight::from_double(w)});
  return make(std::move(list));
}

std::int64_t ConeDivisor::total_units() const {
  std::int64_t sum = 0;
  for (const auto& e : entries_) sum += e.weight.units();
  return sum;
}

double ConeDivisor::gamma() const {
  return 1.0 - 0.5 * static_cast<double>(total_units()) / static_cast<double>(ExactWeight::kScale);
}

double ConeDivisor::weight_at_infinity() const {
  for (const auto& e : entries_)
    if (e.point.at_infinity) return e.weight.value();
  return 0.0;
}

double ConeDivisor::weight_at_origin() const {
  for (const auto& e : entries_)
    if (e.point.is_origin()) return e.weight.value();
  return 0.0;
}

std::vector<ConeEntry> ConeDivisor::interior_entries() const {
  std::vector<ConeEntry> out;
  for (const auto& e : entries_)
    if (!e.point.at_infinity && !e.point.is_origin()) out.push_back(e);
  return out;
}

ConeDivisor ConeDivisor::with_largest_at_infinity() const {
  if (entries_.empty() || entries_.back().point.at_infinity) return *this;
  const std::complex<double> pk = entries_.back().point.z;
  std::vector<ConeEntry> moved;
  moved.reserve(entries_.size());
  for (std::size_t j = 0; j + 1 < entries_.size(); ++j) {
    const auto& e = entries_[j];
    const ConePoint image =
        e.point.at_infinity ? ConePoint::finite({0.0, 0.0}) : ConePoint::finite(1.0 / (e.point.z - pk));
    moved.push_back({image, e.weight});
  }
  moved.push_back({ConePoint::infinity(), entries_.back().weight});
  return make(std::move(moved));
}

ConeDivisor ConeDivisor::scaled(double t) const {
  if (!(t > 0.0)) throw DomainError("scale factor t must be positive");
  std::vector<ConeEntry> out = entries_;
  for (auto& e : out)
    if (!e.point.at_infinity) e.point.z *= t;
  return make(std::move(out));
}

ConeDivisor two_pole_divisor(double beta_south, double beta_north) {
  std::vector<std::pair<ConePoint, double>> list;
  if (beta_south > 0.0) list.push_back({ConePoint::finite({0.0, 0.0}), beta_south});
  if (beta_north > 0.0) list.push_back({ConePoint::infinity(), beta_north});
  return ConeDivisor::from_weights(list);
}

}  // namespace conic_ricci
