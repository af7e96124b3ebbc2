#include "conic_ricci/soliton.hpp"

#include <algorithm>
#include <array>
#include <boost/math/tools/roots.hpp>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "conic_ricci/error.hpp"

namespace conic_ricci {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr int kSteps = 20000;
// Conformal factor below which finite differences of w + u are dominated by rounding.
constexpr double kResidualFloor = 1e-4;

using State = std::array<double, 3>;  // r, r', theta

State rhs(const State& y, double gamma, double kappa) {
  return {y[1], -y[0] * (2.0 * kPi * gamma + kappa * y[1]), kappa * y[0]};
}

State rk4(const State& y, double h, double gamma, double kappa) {
  auto add = [](const State& a, const State& b, double f) {
    return State{a[0] + f * b[0], a[1] + f * b[1], a[2] + f * b[2]};
  };
  const State k1 = rhs(y, gamma, kappa);
  const State k2 = rhs(add(y, k1, 0.5 * h), gamma, kappa);
  const State k3 = rhs(add(y, k2, 0.5 * h), gamma, kappa);
  const State k4 = rhs(add(y, k3, h), gamma, kappa);
  State out;
  for (int i = 0; i < 3; ++i) out[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
  return out;
}

struct Equator {
  double s = kNaN;
  double r = kNaN;
};

// Integrates from a pole until r' changes sign; locates the crossing by cubic Hermite
// interpolation of r'. A branch that keeps expanding reports r = +inf.
Equator find_equator(double slope, double gamma, double kappa, double h) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  State y{0.0, slope, 0.0};
  double s = 0.0;
  for (long step = 0; step < 4'000'000; ++step) {
    const State next = rk4(y, h, gamma, kappa);
    if (!std::isfinite(next[1]) || next[0] > 10.0) return {kNaN, kInf};
    if (!(next[0] > 0.0)) return {};
    if (next[1] <= 0.0) {
      const double p0 = y[1], p1 = next[1];
      const double m0 = rhs(y, gamma, kappa)[1] * h, m1 = rhs(next, gamma, kappa)[1] * h;
      auto hermite = [&](double t) {
        const double t2 = t * t, t3 = t2 * t;
        return (2 * t3 - 3 * t2 + 1) * p0 + (t3 - 2 * t2 + t) * m0 + (-2 * t3 + 3 * t2) * p1 + (t3 - t2) * m1;
      };
      double a = 0.0, b = 1.0;
      for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (a + b);
        (hermite(mid) > 0.0 ? a : b) = mid;
      }
      const double t = 0.5 * (a + b);
      // r on the step by Hermite interpolation with slopes r'.
      const double q0 = y[0], q1 = next[0], n0 = y[1] * h, n1 = next[1] * h;
      const double t2 = t * t, t3 = t2 * t;
      const double r = (2 * t3 - 3 * t2 + 1) * q0 + (t3 - 2 * t2 + t) * n0 + (-2 * t3 + 3 * t2) * q1 + (t3 - t2) * n1;
      return {s + t * h, r};
    }
    y = next;
    s += h;
  }
  return {kNaN, kInf};
}

// Fourth-order central differences of a uniformly sampled branch.
// Sixth-order central differences.
double d1(const std::vector<double>& f, std::size_t k, double h) {
  return (-f[k - 3] + 9 * f[k - 2] - 45 * f[k - 1] + 45 * f[k + 1] - 9 * f[k + 2] + f[k + 3]) / (60 * h);
}
double d2(const std::vector<double>& f, std::size_t k, double h) {
  return (2 * f[k - 3] - 27 * f[k - 2] + 270 * f[k - 1] - 490 * f[k] + 270 * f[k + 1] - 27 * f[k + 2] +
          2 * f[k + 3]) /
         (180 * h * h);
}

std::string format12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

SolitonProfile solve_soliton(double beta_north, double beta_south, double tol) {
  if (!(beta_north >= 0.0 && beta_north < 1.0 && beta_south >= 0.0 && beta_south < 1.0))
    throw DomainError("soliton weights must lie in [0,1)");
  const double gamma = 1.0 - 0.5 * (beta_north + beta_south);
  if (!(gamma > 0.0)) throw DomainError("gamma must be positive");
  if (!(tol > 0.0)) throw DomainError("tolerance must be positive");

  SolitonProfile out;
  out.beta_north = beta_north;
  out.beta_south = beta_south;
  out.gamma = gamma;
  const double a_n = 1.0 - beta_north, a_s = 1.0 - beta_south;
  const double scan_step = 1e-4 / std::sqrt(2.0 * kPi * gamma);

  auto mismatch = [&](double kappa) {
    out.kappa_iterates.push_back(kappa);
    const Equator n = find_equator(a_n, gamma, kappa, scan_step);
    const Equator s = find_equator(a_s, gamma, -kappa, scan_step);
    const double f = n.r - s.r;
    return std::isnan(f) ? f : std::clamp(f, -1e3, 1e3);
  };

  double kappa = 0.0;
  const double f0 = mismatch(0.0);
  if (f0 != 0.0) {
    // Scan |kappa| geometrically on the side where the mismatch changes sign.
    std::vector<double> grid;
    for (int k = 40; k >= 0; --k) grid.push_back(-1e-3 * std::pow(10.0, 6.0 * k / 40));
    grid.push_back(0.0);
    for (int k = 0; k <= 40; ++k) grid.push_back(1e-3 * std::pow(10.0, 6.0 * k / 40));
    std::vector<double> values;
    for (double g : grid) values.push_back(g == 0.0 ? f0 : mismatch(g));
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
      if (!std::isfinite(values[k]) || !std::isfinite(values[k + 1])) continue;
      if ((values[k] < 0) == (values[k + 1] < 0) && values[k + 1] != 0.0) continue;
      const double dist = std::min(std::abs(grid[k]), std::abs(grid[k + 1]));
      if (dist < best_dist) {
        best_dist = dist;
        best = static_cast<int>(k);
      }
    }
    if (best < 0)
      throw ConvergenceError("soliton shooting found no bracket for kappa in [-1000, 1000]");
    double lo = grid[best], hi = grid[best + 1];
    double flo = values[best], fhi = values[best + 1];
    if (fhi == 0.0) {
      kappa = hi;
    } else {
      std::uintmax_t iters = 200;
      const auto bracket = boost::math::tools::toms748_solve(
          mismatch, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(50), iters);
      kappa = 0.5 * (bracket.first + bracket.second);
    }
  }
  out.kappa = kappa;

  // Resample both branches with steps that land exactly on the equator.
  const Equator en = find_equator(a_n, gamma, kappa, scan_step);
  const Equator es = find_equator(a_s, gamma, -kappa, scan_step);
  if (!std::isfinite(en.s) || !std::isfinite(es.s)) throw ConvergenceError("soliton branch has no equator");
  auto branch = [&](double slope, double k_eff, double length) {
    std::vector<State> ys(kSteps + 1);
    ys[0] = {0.0, slope, 0.0};
    const double h = length / kSteps;
    for (int i = 0; i < kSteps; ++i) ys[i + 1] = rk4(ys[i], h, gamma, k_eff);
    return ys;
  };
  const auto north = branch(a_n, kappa, en.s);
  const auto south = branch(a_s, -kappa, es.s);
  out.equator = en.s;
  out.length = en.s + es.s;
  out.matching_defect =
      std::abs(north.back()[0] - south.back()[0]) + std::abs(north.back()[1]) + std::abs(south.back()[1]);
  if (out.matching_defect > std::max(tol, 1e-9))
    throw ConvergenceError("soliton matching defect " + format12(out.matching_defect) + " exceeds tolerance");

  // Assemble: north branch forward, south branch reversed (theta' flips sign).
  const double theta_join = north.back()[2] - south.back()[2];
  for (int i = 0; i <= kSteps; ++i) {
    out.s.push_back(en.s * i / kSteps);
    out.r.push_back(north[i][0]);
    out.dr.push_back(north[i][1]);
    out.theta.push_back(north[i][2]);
  }
  for (int i = kSteps - 1; i >= 0; --i) {
    out.s.push_back(out.length - es.s * i / kSteps);
    out.r.push_back(south[i][0]);
    out.dr.push_back(-south[i][1]);
    out.theta.push_back(theta_join + south[i][2]);
  }

  // Simpson on each branch.
  auto simpson = [&](auto f, std::size_t first, double h) {
    double acc = f(first) + f(first + kSteps);
    for (int i = 1; i < kSteps; ++i) acc += (i % 2 ? 4.0 : 2.0) * f(first + i);
    return acc * h / 3.0;
  };
  const double hn = en.s / kSteps, hs = es.s / kSteps;
  auto area_of = [&](auto weight) {
    return 2.0 * kPi * (simpson([&](std::size_t k) { return weight(k) * out.r[k]; }, 0, hn) +
                        simpson([&](std::size_t k) { return weight(k) * out.r[k]; }, kSteps, hs));
  };
  out.area = area_of([](std::size_t) { return 1.0; });
  const double mass = area_of([&](std::size_t k) { return std::exp(out.theta[k]); });
  const double shift = std::log(2.0 / mass);
  for (double& t : out.theta) t += shift;
  out.theta_mass = area_of([&](std::size_t k) { return std::exp(out.theta[k]); });

  out.north = {a_n, -a_n * (2.0 * kPi * gamma + kappa * a_n) / 6.0};
  out.south = {a_s, -a_s * (2.0 * kPi * gamma - kappa * a_s) / 6.0};

  // Residuals on every 20th node of each branch, away from the poles.
  constexpr int kStride = 40;
  for (int b = 0; b < 2; ++b) {
    const std::size_t first = b == 0 ? 0 : kSteps;
    const double h = (b == 0 ? hn : hs) * kStride;
    std::vector<double> rr, tt;
    for (int i = 0; i <= kSteps; i += kStride) {
      rr.push_back(out.r[first + i]);
      tt.push_back(out.theta[first + i]);
    }
    for (std::size_t k = 3; k + 3 < rr.size(); ++k) {
      // skip the 2% nearest the poles, where r is small
      if ((b == 0 && k < rr.size() / 50) || (b == 1 && k + rr.size() / 50 > rr.size())) continue;
      const double r1 = d1(rr, k, h), r2 = d2(rr, k, h);
      const double t1 = d1(tt, k, h), t2 = d2(tt, k, h);
      const double hess = std::abs(t2 - r1 / rr[k] * t1);
      const double lap = t2 + r1 / rr[k] * t1;
      const double curv = std::abs(-r2 / (2.0 * kPi * rr[k]) - gamma - lap / (4.0 * kPi));
      out.hessian_residual = std::max(out.hessian_residual, hess);
      out.curvature_residual = std::max(out.curvature_residual, curv);
    }
  }
  return out;
}

std::string SolitonProfile::to_csv() const {
  std::ostringstream o;
  o << "s,r,theta\n";
  for (std::size_t k = 0; k < s.size(); ++k) o << format12(s[k]) << ',' << format12(r[k]) << ',' << format12(theta[k]) << '\n';
  return o.str();
}

ConicMetric football_metric(double beta, const Discretization& disc) {
  if (!(beta >= 0.0 && beta < 1.0)) throw DomainError("football weight must lie in [0,1)");
  return ConicMetric(ReferenceSampling::build(ReferenceDensity::football(beta), disc), GridField(disc.size(), 0.0));
}

ConformalSoliton to_conformal(const SolitonProfile& profile, const Discretization& disc) {
  if (profile.beta_south > profile.beta_north) {
    // keep the larger weight at infinity: view the soliton from the other pole
    SolitonProfile flipped = profile;
    std::swap(flipped.beta_north, flipped.beta_south);
    flipped.kappa = -profile.kappa;
    return to_conformal(flipped, disc);
  }
  const ConicMetric ref =
      build_reference_metric(two_pole_divisor(profile.beta_south, profile.beta_north), CutoffSpec{}, disc);
  return to_conformal(profile, ref.reference_ptr());
}

ConformalSoliton to_conformal(const SolitonProfile& profile, std::shared_ptr<const ReferenceSampling> reference) {
  const ReferenceDensity& density = reference->density();
  auto matches = [&](double south, double north) {
    return std::abs(density.weight_low() - south) <= 1e-12 && std::abs(density.weight_high() - north) <= 1e-12;
  };
  if (!matches(profile.beta_south, profile.beta_north)) {
    if (!matches(profile.beta_north, profile.beta_south))
      throw DomainError("reference pole weights do not match the soliton");
    SolitonProfile flipped = profile;
    std::swap(flipped.beta_north, flipped.beta_south);
    flipped.kappa = -profile.kappa;
    return to_conformal(flipped, std::move(reference));
  }
  const Discretization& disc = reference->disc();
  const double gamma = profile.gamma, kappa = profile.kappa;
  const double alpha = 2.0 - 2.0 * profile.beta_south;
  const double q = 4.0 * kPi * gamma;

  // Series start toward the south pole with b0 = 0.
  const double b1 = -(q - kappa * alpha) / (alpha * alpha);
  const double b2 = -b1 * (q - 2.0 * kappa * alpha) / (4.0 * alpha * alpha);
  auto series = [&](double x) {
    const double e = std::exp(alpha * x);
    return std::array<double, 2>{alpha * x + b1 * e + b2 * e * e, alpha + alpha * b1 * e + 2.0 * alpha * b2 * e * e};
  };
  const double x_start = std::log(1e-7 / (std::abs(b1) + 1.0)) / alpha;

  // theta_x = -kappa e^w, theta -> 0 toward the south pole.
  using Y = std::array<double, 3>;  // w, w_x, theta
  auto f = [&](const Y& y) {
    const double e = std::exp(y[0]);
    return Y{y[1], -e * (q - kappa * y[1]), -kappa * e};
  };
  const double h = 2e-4;
  std::vector<double> xs, ws, wxs, ths;
  {
    const auto s0 = series(x_start);
    const double theta0 = -kappa * std::exp(s0[0]) / alpha;
    Y y{s0[0], s0[1], theta0};
    double x = x_start;
    bool passed = false;
    double x_equator = 0.0;
    const double reach = std::max(std::abs(disc.s_min()), std::abs(disc.s_max())) + 2.0;
    for (long step = 0; step < 20'000'000; ++step) {
      xs.push_back(x);
      ws.push_back(y[0]);
      wxs.push_back(y[1]);
      ths.push_back(y[2]);
      if (passed && x > x_equator + reach) break;
      const Y k1 = f(y);
      Y t;
      for (int i = 0; i < 3; ++i) t[i] = y[i] + 0.5 * h * k1[i];
      const Y k2 = f(t);
      for (int i = 0; i < 3; ++i) t[i] = y[i] + 0.5 * h * k2[i];
      const Y k3 = f(t);
      for (int i = 0; i < 3; ++i) t[i] = y[i] + h * k3[i];
      const Y k4 = f(t);
      Y next;
      for (int i = 0; i < 3; ++i) next[i] = y[i] + h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
      if (!passed && y[1] > 0.0 && next[1] <= 0.0) {
        // the circle radius e^(w/2) peaks at the equator
        const double frac = y[1] / (y[1] - next[1]);
        x_equator = x + frac * h;
        passed = true;
      }
      y = next;
      x += h;
      if (!std::isfinite(y[0])) throw GridError("conformal soliton integration diverged");
    }
    if (!passed) throw GridError("conformal soliton integration found no equator");

    ConformalSoliton out;
    out.equator_shift = x_equator;
    out.north_slope_error = wxs.back() - (2.0 * profile.beta_north - 2.0);
    if (std::abs(out.north_slope_error) > 1e-5) throw GridError("soliton profile is under-resolved near the poles");

    // Sample w and theta at grid rows (s = x - x_equator), cubic Hermite in x.
    auto sample = [&](double sv, double& w, double& th) {
      const double xv = sv + x_equator;
      if (xv <= x_start) {
        const auto sr = series(xv);
        w = sr[0];
        th = -kappa * std::exp(sr[0]) / alpha;
        return;
      }
      const double pos = (xv - x_start) / h;
      std::size_t i = std::min(static_cast<std::size_t>(pos), xs.size() - 2);
      const double t = pos - static_cast<double>(i);
      const double t2 = t * t, t3 = t2 * t;
      const double h00 = 2 * t3 - 3 * t2 + 1, h10 = t3 - 2 * t2 + t, h01 = -2 * t3 + 3 * t2, h11 = t3 - t2;
      w = h00 * ws[i] + h10 * h * wxs[i] + h01 * ws[i + 1] + h11 * h * wxs[i + 1];
      const double d0 = -kappa * std::exp(ws[i]), dd1 = -kappa * std::exp(ws[i + 1]);
      th = h00 * ths[i] + h10 * h * d0 + h01 * ths[i + 1] + h11 * h * dd1;
    };
    const GridField& wref = reference->log_density();
    GridField u(disc.size()), theta(disc.size());
    for (int i = 0; i < disc.n_s(); ++i) {
      double w, th;
      sample(disc.s(i), w, th);
      for (int j = 0; j < disc.n_phi(); ++j) {
        const std::size_t k = disc.index(i, j);
        u[k] = w - wref[k];
        theta[k] = th;
      }
    }
    // Exact samples; the grid area differs from 2 only by quadrature error.
    out.metric = ConicMetric(reference, std::move(u));
    // Normalize the integral of e^theta against the grid measure.
    const GridField mu = out.metric.measure();
    double mass = 0.0;
    for (std::size_t k = 0; k < mu.size(); ++k) mass += std::exp(theta[k]) * mu[k];
    const double shift = std::log(2.0 / mass);
    for (double& t : theta) t += shift;
    out.theta = std::move(theta);
    return out;
  }
}

std::shared_ptr<const ReferenceSampling> smooth_pole_reference(double beta_a, double beta_b, int n) {
  const double lo = std::min(beta_a, beta_b), hi = std::max(beta_a, beta_b);
  const Discretization disc = default_symmetric_grid(n, 2.0 - 2.0 * lo, 2.0 - 2.0 * hi);
  return ReferenceSampling::build(ReferenceDensity::two_pole(lo, hi), disc);
}

double soliton_residual(const ConicMetric& metric, const GridField& theta) {
  const Discretization& disc = metric.disc();
  const GridField& w = metric.reference().log_density();
  const GridField& u = metric.potential();
  const int ns = disc.n_s();
  std::vector<double> big_w(ns), th(ns);
  for (int i = 0; i < ns; ++i) {
    const std::size_t k = disc.index(i, 0);
    big_w[i] = w[k] + u[k];
    th[i] = theta[k];
  }
  double worst = 0.0;
  for (int i = 3; i + 3 < ns; ++i) {
    if (big_w[i] < std::log(kResidualFloor)) continue;
    const std::size_t k = static_cast<std::size_t>(i);
    const double wss = d2(big_w, k, disc.h_s()), tss = d2(th, k, disc.h_s());
    const double r = -wss / (4.0 * kPi * std::exp(big_w[i]));
    const double lap = tss / (4.0 * kPi * std::exp(big_w[i]));
    worst = std::max(worst, std::abs(r - metric.gamma() - lap));
  }
  return worst;
}

}  // namespace conic_ricci
