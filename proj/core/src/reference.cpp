#include "conic_ricci/reference.hpp"

#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <numbers>

#include "conic_ricci/error.hpp"

namespace conic_ricci {

namespace {

constexpr double kPi = std::numbers::pi;

// Degree-9 smoothstep, C^4 at both ends.
double smoothstep(double x) {
  const double x2 = x * x;
  return x2 * x2 * x * (126.0 + x * (-420.0 + x * (540.0 + x * (-315.0 + 70.0 * x))));
}
// Derivatives take y = 1 - x computed by the caller without cancellation.
double smoothstep_d1(double x, double y) {
  const double a = x * y;
  return 630.0 * a * a * a * a;
}
double smoothstep_d2(double x, double y) {
  const double a = x * y;
  return 2520.0 * a * a * a * (y - x);
}

double dot(std::complex<double> a, std::complex<double> b) { return a.real() * b.real() + a.imag() * b.imag(); }

// log sech(y), stable for large |y|.
double log_sech(double y) {
  const double a = std::abs(y);
  return -a + std::numbers::ln2 - std::log1p(std::exp(-2.0 * a));
}

}  // namespace

// 1 - smoothstep(x) = smoothstep(1 - x); each half uses the form without cancellation
double CutoffSpec::chi(double r) const {
  const double x = (r - inner_radius) / inner_radius;
  if (x <= 0.0) return 1.0;
  if (x >= 1.0) return 0.0;
  return x <= 0.5 ? 1.0 - smoothstep(x) : smoothstep((2.0 * inner_radius - r) / inner_radius);
}

double CutoffSpec::chi_r(double r) const {
  const double x = (r - inner_radius) / inner_radius;
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -smoothstep_d1(x, (2.0 * inner_radius - r) / inner_radius) / inner_radius;
}

double CutoffSpec::chi_rr(double r) const {
  const double x = (r - inner_radius) / inner_radius;
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return -smoothstep_d2(x, (2.0 * inner_radius - r) / inner_radius) / (inner_radius * inner_radius);
}

ReferenceDensity ReferenceDensity::football(double beta) {
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("football weight must lie in [0,1)");
  ReferenceDensity d;
  d.kind_ = Kind::Football;
  d.football_beta_ = beta;
  if (beta > 0.0)
    d.divisor_ = ConeDivisor::from_weights({{ConePoint::finite({0.0, 0.0}), beta}, {ConePoint::infinity(), beta}});
  return d;
}

ReferenceDensity ReferenceDensity::two_pole(double beta_south, double beta_north) {
  if (!(beta_south >= 0.0 && beta_south < 1.0 && beta_north >= 0.0 && beta_north < 1.0))
    throw DomainError("pole weights must lie in [0,1)");
  ReferenceDensity d;
  d.kind_ = Kind::TwoPole;
  d.divisor_ = two_pole_divisor(beta_south, beta_north);
  return d;
}

ReferenceDensity ReferenceDensity::cutoff(const ConeDivisor& divisor, const CutoffSpec& spec) {
  if (!(spec.inner_radius > 0.0)) throw DomainError("cutoff radius must be positive");
  if (!divisor.empty() && !divisor.entries().back().point.at_infinity) {
    for (const auto& e : divisor.entries())
      if (e.point.at_infinity) throw DomainError("the largest cone weight must sit at infinity");
  }
  for (const auto& e : divisor.entries())
    if (!e.point.at_infinity && std::abs(e.point.z) >= spec.inner_radius)
      throw DomainError("finite cone points must lie inside the ball B");
  ReferenceDensity d;
  d.kind_ = Kind::Cutoff;
  d.divisor_ = divisor;
  d.cutoff_ = spec;
  return d;
}

ReferenceDensity ReferenceDensity::with_scale(double c) const {
  if (!(c > 0.0) || !std::isfinite(c)) throw DomainError("density scale must be positive");
  ReferenceDensity d = *this;
  d.scale_ = c;
  return d;
}

ReferenceDensity ReferenceDensity::dilated(double ds) const {
  ReferenceDensity d = *this;
  d.shift_ += ds;
  return d;
}

double ReferenceDensity::weight_low() const {
  return kind_ == Kind::Football ? football_beta_ : divisor_.weight_at_origin();
}

double ReferenceDensity::weight_high() const {
  return kind_ == Kind::Football ? football_beta_ : divisor_.weight_at_infinity();
}

std::vector<ConeEntry> ReferenceDensity::interior_cones() const {
  if (kind_ == Kind::Football) return {};
  auto list = divisor_.interior_entries();
  const double factor = std::exp(-shift_);
  for (auto& e : list) e.point.z *= factor;
  return list;
}

ReferenceSample ReferenceDensity::evaluate(double s_in, double phi) const {
  const double s = s_in + shift_;
  ReferenceSample out;
  if (kind_ == Kind::Football) {
    const double a = 1.0 - football_beta_;
    const double y = a * s;
    const double gamma = a;
    out.w = std::log(scale_ * a / (2.0 * kPi)) + 2.0 * log_sech(y);
    out.w_s = -2.0 * a * std::tanh(y);
    out.curvature = gamma / scale_;
    return out;
  }

  if (kind_ == Kind::TwoPole) {
    const double b0 = divisor_.weight_at_origin();
    const double e = b0 + divisor_.weight_at_infinity() - 2.0;
    const double l1p = s > 0 ? 2.0 * s + std::log1p(std::exp(-2.0 * s)) : std::log1p(std::exp(2.0 * s));
    const double frac = s > 0 ? 1.0 / (1.0 + std::exp(-2.0 * s)) : std::exp(2.0 * s) / (1.0 + std::exp(2.0 * s));
    const double log_f = std::log(scale_) - 2.0 * b0 * s + e * l1p;
    out.w = log_f + 2.0 * s;
    out.w_s = 2.0 - 2.0 * b0 + 2.0 * e * frac;
    // -lap(log F) / (4 pi F) with lap(log F) = 4 e / (1 + r^2)^2
    out.curvature = -e / kPi * std::exp(-log_f - 2.0 * l1p);
    return out;
  }

  const double r = std::exp(s);
  const std::complex<double> z = std::polar(r, phi);
  const double chi = cutoff_.chi(r);
  const double beta_inf = divisor_.weight_at_infinity();
  const double log_c = std::log(scale_);

  // Finite factor A = prod |z - p_j|^(-2 beta_j).
  double log_a = 0.0;
  std::complex<double> grad_log_a{};
  if (chi > 0.0) {
    for (const auto& e : divisor_.entries()) {
      if (e.point.at_infinity) continue;
      const std::complex<double> d = z - e.point.z;
      const double d2 = std::norm(d);
      log_a += -e.weight.value() * std::log(d2);
      grad_log_a += -2.0 * e.weight.value() * d / d2;
    }
  }
  // Outer factor B = (1 + r^2)^(beta_inf - 2), written with log1p for large r.
  const double r2 = r * r;
  const double log1p_r2 = s > 0 ? 2.0 * s + std::log1p(std::exp(-2.0 * s)) : std::log1p(r2);
  const double log_b = (beta_inf - 2.0) * log1p_r2;
  const double q = 1.0 / (1.0 + r2);
  const std::complex<double> grad_log_b = (beta_inf - 2.0) * 2.0 * z * q;
  const double lap_log_b = (beta_inf - 2.0) * 4.0 * q * q;

  if (chi == 1.0) {
    out.w = log_c + log_a + 2.0 * s;
    out.w_s = 2.0 + dot(z, grad_log_a);
    out.curvature = 0.0;
    return out;
  }
  if (chi == 0.0) {
    out.w = log_c + log_b + 2.0 * s;
    out.w_s = 2.0 + (beta_inf - 2.0) * 2.0 * r2 * q;
    out.curvature = -lap_log_b / (4.0 * kPi * std::exp(log_c + log_b));
    return out;
  }

  // Transition annulus: general formula for G = chi*A + (1-chi)*B, factored by B.
  const double a_over_b = std::exp(log_a - log_b);
  const double g = chi * a_over_b + (1.0 - chi);  // G / B
  const double chi_r = cutoff_.chi_r(r);
  const double lap_chi = cutoff_.chi_rr(r) + chi_r / r;
  const std::complex<double> grad_chi = chi_r * z / r;
  // All quantities below are divided by B.
  const std::complex<double> grad_a = a_over_b * grad_log_a;
  const std::complex<double> grad_bb = grad_log_b;
  const double lap_a = a_over_b * std::norm(grad_log_a);
  const double lap_bb = std::norm(grad_log_b) + lap_log_b;
  const std::complex<double> grad_g = grad_chi * (a_over_b - 1.0) + chi * grad_a + (1.0 - chi) * grad_bb;
  const double lap_g = lap_chi * (a_over_b - 1.0) + 2.0 * dot(grad_chi, grad_a - grad_bb) + chi * lap_a +
                       (1.0 - chi) * lap_bb;
  const double lap_log_f = lap_g / g - std::norm(grad_g) / (g * g);
  const double log_f = log_c + log_b + std::log(g);
  out.w = log_f + 2.0 * s;
  out.w_s = 2.0 + dot(z, grad_g) / g;
  out.curvature = -lap_log_f / (4.0 * kPi * std::exp(log_f));
  return out;
}

double ReferenceDensity::tail_mass_low(double s_boundary, double phi) const {
  const double s = s_boundary + shift_;
  if (kind_ == Kind::Football) {
    const double a = 1.0 - football_beta_;
    // (1/2pi)(1 + tanh(a s)) * scale
    return scale_ / (2.0 * kPi) * 2.0 / (1.0 + std::exp(-2.0 * a * s));
  }
  if (kind_ == Kind::TwoPole) {
    // c * integral_0^r t^(1 - 2 b0) (1 + t^2)^e dt = c/2 * B(x; 1 - b0, 1 - b_inf), x = r^2/(1+r^2)
    const double a = 1.0 - divisor_.weight_at_origin(), b = 1.0 - divisor_.weight_at_infinity();
    const double x = 1.0 / (1.0 + std::exp(-2.0 * s));
    return 0.5 * scale_ * boost::math::beta(a, b, x);
  }
  if (std::exp(s) >= cutoff_.inner_radius) throw GridError("low end of the grid must lie inside the ball B");
  const ReferenceSample edge = evaluate(s_boundary, phi);
  if (divisor_.interior_entries().empty()) return std::exp(edge.w) / alpha_low();
  // Local exponential model with the rate at the boundary.
  return std::exp(edge.w) / edge.w_s;
}

double ReferenceDensity::tail_mass_high(double s_boundary, double /*phi*/) const {
  const double s = s_boundary + shift_;
  if (kind_ == Kind::Football) {
    const double a = 1.0 - football_beta_;
    return scale_ / (2.0 * kPi) * 2.0 / (1.0 + std::exp(2.0 * a * s));
  }
  if (kind_ == Kind::TwoPole) {
    const double a = 1.0 - divisor_.weight_at_origin(), b = 1.0 - divisor_.weight_at_infinity();
    const double y = 1.0 / (1.0 + std::exp(2.0 * s));
    return 0.5 * scale_ * boost::math::beta(b, a, y);
  }
  const double r = std::exp(s);
  if (r < 2.0 * cutoff_.inner_radius) throw GridError("high end of the grid must lie outside the ball 2B");
  const double beta_inf = divisor_.weight_at_infinity();
  const double log1p_r2 = s > 0 ? 2.0 * s + std::log1p(std::exp(-2.0 * s)) : std::log1p(r * r);
  return 0.5 * scale_ * std::exp((beta_inf - 1.0) * log1p_r2) / (1.0 - beta_inf);
}

double ReferenceDensity::tail_curvature_low(double s_boundary, double phi) const {
  if (kind_ == Kind::Football) return (1.0 - football_beta_) * tail_mass_low(s_boundary, phi) / scale_;
  if (kind_ == Kind::TwoPole) return -(evaluate(s_boundary, phi).w_s - alpha_low()) / (4.0 * kPi);
  return 0.0;  // the cap lies inside B, where the smooth curvature vanishes
}

double ReferenceDensity::tail_curvature_high(double s_boundary, double phi) const {
  if (kind_ == Kind::Football) return (1.0 - football_beta_) * tail_mass_high(s_boundary, phi) / scale_;
  const ReferenceSample edge = evaluate(s_boundary, phi);
  return (edge.w_s + alpha_high()) / (4.0 * kPi);
}

}  // namespace conic_ricci
