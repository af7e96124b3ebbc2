#include "conic_ricci/deformation.hpp"

#include <algorithm>
#include <boost/math/tools/minima.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "conic_ricci/error.hpp"
#include "conic_ricci/parallel.hpp"
#include "conic_ricci/stability.hpp"

namespace conic_ricci {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double radius(const Discretization& disc, int i, Pole pole) {
  return pole == Pole::South ? std::exp(disc.s(i)) : std::exp(-disc.s(i));
}

// Least-squares line y = a + b x; returns the slope.
double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

struct LinearFit {
  double a0 = 0.0, coefficient = 0.0, rss = 0.0;
};

// Weighted least squares of y against [1, x]: two-column Gram-Schmidt for conditioning.
LinearFit fit_affine(const std::vector<double>& x, const std::vector<double>& y, const std::vector<double>& wt) {
  const std::size_t n = x.size();
  std::vector<double> q1(n), q2(n);
  double n1 = 0.0;
  for (std::size_t i = 0; i < n; ++i) n1 += wt[i] * wt[i];
  n1 = std::sqrt(n1);
  for (std::size_t i = 0; i < n; ++i) q1[i] = wt[i] / n1;
  double r12 = 0.0;
  for (std::size_t i = 0; i < n; ++i) r12 += q1[i] * wt[i] * x[i];
  double n2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    q2[i] = wt[i] * x[i] - r12 * q1[i];
    n2 += q2[i] * q2[i];
  }
  n2 = std::sqrt(n2);
  for (double& v : q2) v /= n2;
  double c1 = 0.0, c2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    c1 += q1[i] * wt[i] * y[i];
    c2 += q2[i] * wt[i] * y[i];
  }
  LinearFit out;
  out.coefficient = c2 / n2;
  out.a0 = (c1 - r12 * out.coefficient) / n1;
  for (std::size_t i = 0; i < n; ++i) {
    const double res = wt[i] * (y[i] - out.a0 - out.coefficient * x[i]);
    out.rss += res * res;
  }
  return out;
}

// Flat Laplacian |d dbar u| = |Laplacian_z u| / 4 at an interior node of the cylinder.
double ddbar(const Discretization& disc, const GridField& u, int i, int j) {
  const int np = disc.n_phi();
  const std::size_t k = disc.index(i, j);
  const double h = disc.h_s();
  double lap = (u[disc.index(i + 1, j)] - 2.0 * u[k] + u[disc.index(i - 1, j)]) / (h * h);
  if (np > 1) {
    const double hp = disc.h_phi();
    lap += (u[disc.index(i, (j + 1) % np)] - 2.0 * u[k] + u[disc.index(i, (j + np - 1) % np)]) / (hp * hp);
  }
  return 0.25 * std::abs(lap) * std::exp(-2.0 * disc.s(i));
}

double member_hessian_constant(const Discretization& disc, const GridField& u, double beta_prime, double radius_b) {
  double worst = 0.0;
  for (int i = 3; i + 1 < disc.n_s(); ++i) {
    const double r = std::exp(disc.s(i));
    if (r >= radius_b) break;
    for (int j = 0; j < disc.n_phi(); ++j)
      worst = std::max(worst, ddbar(disc, u, i, j) * std::pow(r, 2.0 * beta_prime));
  }
  return worst;
}

double mass_of(const GridField& mu, const GridField& f) {
  double s = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) s += mu[k] * f[k] * f[k];
  return s;
}

// Differences to a limit shrink over the last three entries.
bool tail_decreasing(const std::vector<double>& values, double limit) {
  const std::size_t n = values.size();
  if (n < 3) return false;
  const double a = std::abs(values[n - 3] - limit), b = std::abs(values[n - 2] - limit),
               c = std::abs(values[n - 1] - limit);
  return c <= b && b <= a;
}

void check_same_grid(const ConicMetric& metric, const GridField& f) {
  if (f.size() != metric.disc().size()) throw GridError("field does not match the grid");
}

}  // namespace

ConeDivisor scale_divisor(const ConeDivisor& divisor, double t) {
  if (!(t > 0.0) || t > 1.0) throw DomainError("scale parameter must lie in (0, 1]");
  if (divisor.empty()) return divisor;
  const StabilityReport report = classify_divisor(divisor);
  if (divisor.weight_at_infinity() != report.beta_k.value())
    throw DomainError("the largest weight must sit at infinity");
  return t == 1.0 ? divisor : divisor.scaled(t);
}

GridField regularize_potential(const Discretization& disc, const GridField& u_inf, double a0, double t,
                               const CutoffSpec& psi) {
  if (!(t > 0.0)) throw DomainError("scale parameter must be positive");
  if (u_inf.size() != disc.size()) throw GridError("potential does not match the grid");
  const double lo = std::log(psi.inner_radius * t), hi = lo + std::numbers::ln2;
  if (lo < disc.s_min() + 3.0 * disc.h_s()) throw GridError("disk tB falls below the grid resolution; extend the grid");
  if ((hi - lo) / disc.h_s() < 4.0) throw GridError("cutoff transition spans fewer than four rows; refine the grid");
  GridField out(u_inf.size());
  for (int i = 0; i < disc.n_s(); ++i) {
    const double p = psi.psi(std::exp(disc.s(i)) / t);
    for (int j = 0; j < disc.n_phi(); ++j) {
      const std::size_t k = disc.index(i, j);
      out[k] = p == 0.0 ? a0 : p == 1.0 ? u_inf[k] : a0 + p * (u_inf[k] - a0);
    }
  }
  return out;
}

DecayFit decay_exponent_fit(const Discretization& disc, const GridField& u, Pole pole, double r_inner,
                            double r_outer) {
  if (u.size() != disc.size()) throw GridError("potential does not match the grid");
  if (!(r_inner > 0.0) || !(r_outer >= 10.0 * r_inner)) throw DomainError("fit window spans less than one decade");
  const int ns = disc.n_s();
  // rows ordered from the pole outward
  auto row_at = [&](int n) { return pole == Pole::South ? n : ns - 1 - n; };
  std::vector<int> rows;
  for (int n = 0; n < ns; ++n) {
    const double r = radius(disc, row_at(n), pole);
    if (r < r_inner) continue;
    if (r > r_outer) break;
    if (n < 3) throw GridError("fit window reaches the innermost three rows");
    if (n + 1 >= ns) break;
    rows.push_back(row_at(n));
  }
  DecayFit fit;
  fit.r_inner = r_inner;
  fit.r_outer = r_outer;
  fit.samples = static_cast<int>(rows.size());
  if (rows.size() < 8) throw GridError("fit window holds fewer than eight rows");

  std::vector<double> r(rows.size()), y(rows.size());
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (std::size_t n = 0; n < rows.size(); ++n) {
    r[n] = radius(disc, rows[n], pole);
    y[n] = u[disc.index(rows[n], 0)];
    ymin = std::min(ymin, y[n]);
    ymax = std::max(ymax, y[n]);
  }
  if (ymax - ymin <= 1e-12 * (1.0 + std::max(std::abs(ymin), std::abs(ymax)))) {
    fit.signal = false;
    fit.exponent = fit.gradient_exponent = fit.hessian_exponent = kNaN;
    fit.a0 = y.front();
    fit.note = "no signal";
    return fit;
  }
  fit.signal = true;

  // Relative weights from the data so the inner decades count as much as the outer ones.
  const double anchor = u[disc.index(row_at(3), 0)];
  std::vector<double> wt(rows.size());
  const double floor = 1e-14 * (1.0 + std::abs(anchor));
  for (std::size_t n = 0; n < rows.size(); ++n) wt[n] = 1.0 / std::max(std::abs(y[n] - anchor), floor);

  auto rss = [&](double p) {
    std::vector<double> x(r.size());
    for (std::size_t n = 0; n < r.size(); ++n) x[n] = std::pow(r[n], p);
    return fit_affine(x, y, wt);
  };
  double best_p = 0.05, best = std::numeric_limits<double>::infinity();
  for (double p = 0.05; p <= 4.0 + 1e-12; p += 0.05) {
    const double v = rss(p).rss;
    if (v < best) best = v, best_p = p;
  }
  const auto [p, value] = boost::math::tools::brent_find_minima(
      [&](double q) { return rss(q).rss; }, std::max(0.01, best_p - 0.05), best_p + 0.05, 52);
  (void)value;
  const LinearFit lf = rss(p);
  fit.exponent = p;
  fit.a0 = lf.a0;
  fit.coefficient = lf.coefficient;
  double rel = 0.0;
  for (std::size_t n = 0; n < r.size(); ++n) {
    const double model = lf.coefficient * std::pow(r[n], p);
    const double e = (y[n] - lf.a0 - model) / model;
    rel += e * e;
  }
  fit.relative_rms = std::sqrt(rel / static_cast<double>(r.size()));

  // Derivatives along s by central differences, converted to r.
  std::vector<double> lr, lg, lh;
  const double h = disc.h_s();
  for (int row : rows) {
    const double um = u[disc.index(row - 1, 0)], u0 = u[disc.index(row, 0)], up = u[disc.index(row + 1, 0)];
    const double rr = radius(disc, row, pole);
    const double du = (up - um) / (2.0 * h) / rr;
    const double lap = (up - 2.0 * u0 + um) / (h * h) / (rr * rr);
    if (du == 0.0 || lap == 0.0) continue;
    lr.push_back(std::log(rr));
    lg.push_back(std::log(std::abs(du)));
    lh.push_back(std::log(std::abs(lap)));
  }
  fit.gradient_exponent = lr.size() >= 2 ? slope(lr, lg) : kNaN;
  fit.hessian_exponent = lr.size() >= 2 ? slope(lr, lh) : kNaN;
  return fit;
}

DecayFit decay_exponent_fit(const Discretization& disc, const GridField& u, Pole pole) {
  if (u.size() != disc.size()) throw GridError("potential does not match the grid");
  const int ns = disc.n_s();
  auto row_at = [&](int n) { return pole == Pole::South ? n : ns - 1 - n; };
  const double end = u[disc.index(row_at(3), 0)];
  const double scale = 1.0 + std::abs(end);
  double r_inner = 0.0, r_outer = 0.0;
  for (int n = 3; n + 1 < ns; ++n) {
    const double dev = std::abs(u[disc.index(row_at(n), 0)] - end);
    const double r = radius(disc, row_at(n), pole);
    if (r_inner == 0.0 && dev > 1e-9 * scale) r_inner = r;
    if (r_inner > 0.0 && (dev > 1e-3 * scale || r > 0.5)) break;
    r_outer = r;
  }
  if (r_inner == 0.0 || r_outer < 10.0 * r_inner) {
    DecayFit fit;
    fit.exponent = fit.gradient_exponent = fit.hessian_exponent = kNaN;
    fit.a0 = end;
    fit.note = "no signal";
    return fit;
  }
  return decay_exponent_fit(disc, u, pole, r_inner, r_outer);
}

std::vector<double> default_t_list() {
  std::vector<double> t;
  for (int k = 2; k <= 8; ++k) t.push_back(std::ldexp(1.0, -k));
  return t;
}

DeformationFamily build_family(const ConeDivisor& divisor, const std::vector<double>& t_list,
                               const FamilyOptions& opts) {
  const StabilityReport report = classify_divisor(divisor);
  if (report.stability != StabilityClass::Unstable || report.beta_k_prime.units() == 0)
    throw DomainError("deformation needs an unstable divisor with at least two points");
  if (t_list.empty()) throw DomainError("empty parameter list");
  for (std::size_t n = 0; n < t_list.size(); ++n)
    if (!(t_list[n] > 0.0) || t_list[n] > 1.0 || (n > 0 && !(t_list[n] < t_list[n - 1])))
      throw DomainError("parameters must decrease within (0, 1]");

  DeformationFamily fam;
  fam.base = divisor;
  fam.limit_divisor = report.limit;
  fam.beta_k = report.beta_k.value();
  fam.beta_k_prime = report.beta_k_prime.value();
  fam.psi = opts.psi;
  // validates the placement of the largest weight
  (void)scale_divisor(divisor, 1.0);

  fam.soliton = solve_soliton(fam.beta_k, fam.beta_k_prime);
  const double target = -std::log(opts.cap_mass);
  const Discretization disc = Discretization::cylinder_log2_aligned(
      opts.n_phi, -target / (2.0 - 2.0 * fam.beta_k_prime), target / (2.0 - 2.0 * fam.beta_k));

  const ConicMetric limit_ref = build_reference_metric(fam.limit_divisor, opts.psi, disc);
  const ConformalSoliton conformal = to_conformal(fam.soliton, limit_ref.reference_ptr());
  fam.limit = conformal.metric.normalized();
  fam.u_inf = fam.limit.potential();
  fam.pole_fit = decay_exponent_fit(disc, fam.u_inf, Pole::South);
  if (!fam.pole_fit.signal) throw ConvergenceError("soliton potential shows no decay toward the origin");
  fam.a0 = fam.pole_fit.a0;

  fam.members.resize(t_list.size());
  parallel_for(t_list.size(), [&](std::size_t n) {
    FamilyMember& m = fam.members[n];
    m.t = t_list[n];
    m.divisor = scale_divisor(divisor, m.t);
    const ConicMetric ref = build_reference_metric(m.divisor, opts.psi, disc);
    GridField u = regularize_potential(disc, fam.u_inf, fam.a0, m.t, opts.psi);
    m.hessian_constant = member_hessian_constant(disc, u, fam.beta_k_prime, opts.psi.inner_radius);
    const ConicMetric raw = ref.with_potential(std::move(u));
    m.raw_area = raw.area();
    m.metric = raw.normalized();
    const double disk = opts.psi.inner_radius * m.t;
    const GridField& v = m.metric.potential();
    const double inside = v[0];
    m.regular = true;
    for (int i = 0; i < disc.n_s() && std::exp(disc.s(i)) <= disk; ++i)
      for (int j = 0; j < disc.n_phi(); ++j) m.regular = m.regular && v[disc.index(i, j)] == inside;
  });
  return fam;
}

double lq_exponent_limit(const DeformationFamily& family) { return 1.0 / family.beta_k_prime; }

LqReport lq_curvature_report(const DeformationFamily& family, double q) {
  if (!(q > 1.0) || !(q < lq_exponent_limit(family)))
    throw DomainError("q must satisfy 1 < q and 2 q beta_k' < 2");
  auto norm = [q](const ConicMetric& m) {
    const GridField r = scalar_curvature(m);
    const GridField mu = m.measure();
    const std::vector<char> ok = resolved_nodes(m);
    double acc = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k)
      if (ok[k]) acc += std::pow(std::abs(r[k]), q) * mu[k];
    return std::pow(acc, 1.0 / q);
  };
  LqReport out;
  out.q = q;
  out.norms.resize(family.members.size());
  parallel_for(family.members.size(), [&](std::size_t n) { out.norms[n] = norm(family.members[n].metric); });
  for (const FamilyMember& m : family.members) out.t.push_back(m.t);
  out.limit_norm = norm(family.limit);
  out.sup = *std::max_element(out.norms.begin(), out.norms.end());
  out.min = *std::min_element(out.norms.begin(), out.norms.end());
  bool finite = std::isfinite(out.limit_norm);
  for (double v : out.norms) finite = finite && std::isfinite(v);
  out.uniformly_bounded = finite && out.min > 0.0 && out.sup / out.min < 10.0;
  out.converging = tail_decreasing(out.norms, out.limit_norm);
  return out;
}

ConicMetric pullback_by_dilation(const ConicMetric& metric, double t) {
  if (!(t > 0.0)) throw DomainError("scale parameter must be positive");
  const double ds = std::log(t);
  const ReferenceSampling& ref = metric.reference();
  const auto pulled = ReferenceSampling::build(ref.density().dilated(ds), metric.disc().shifted(-ds));
  return ConicMetric(pulled, metric.potential());
}

MuConvergence mu_convergence_report(const DeformationFamily& family, const PartitionTable& table) {
  MuConvergence out;
  const std::size_t n = family.members.size();
  for (const FamilyMember& m : family.members) out.t.push_back(m.t);
  out.mu1 = table.mu1;
  out.mu2 = table.mu2;
  const EntropyResult limit = minimize_mu(family.limit);
  out.mu_limit = limit.mu;

  std::vector<EntropyResult> results(n);
  out.pullback_mu.resize(n);
  // one task per member and per pullback
  parallel_for(2 * n, [&](std::size_t task) {
    const FamilyMember& m = family.members[task % n];
    if (task < n) {
      results[task] = minimize_mu(m.metric);
    } else {
      // the built-in starts plus the member's own minimizer, which the chart change leaves untouched
      MuOptions opts;
      opts.extra_starts.push_back(minimize_mu(m.metric).phi);
      out.pullback_mu[task - n] = minimize_mu(pullback_by_dilation(m.metric, m.t), opts).mu;
    }
  });
  const GridField mu_lim = family.limit.measure();
  for (std::size_t k = 0; k < n; ++k) {
    out.mu.push_back(results[k].mu);
    GridField phi = results[k].phi;
    const double scale = 1.0 / std::sqrt(mass_of(mu_lim, phi));
    for (double& v : phi) v *= scale;
    out.transported.push_back(w_functional(family.limit, phi));
  }

  const double last = out.mu.back();
  out.smallest_close = std::abs(last - out.mu_limit) < 0.01 * std::abs(out.mu_limit) + 1e-3;
  out.tail_above_mu2 = n >= 3;
  for (std::size_t k = n >= 3 ? n - 3 : 0; k < n; ++k)
    out.tail_above_mu2 = out.tail_above_mu2 && !(std::isnan(out.mu2)) && out.mu[k] > out.mu2;
  out.gap_decreasing = tail_decreasing(out.mu, out.mu_limit);
  out.no_contradiction = true;
  for (double v : out.transported) out.no_contradiction = out.no_contradiction && v >= out.mu_limit - 1e-6;
  out.upper_semicontinuous = out.mu_limit >= *std::max_element(out.mu.begin(), out.mu.end()) - 1e-3;
  return out;
}

LimitFunctionals limit_functional_check(const DeformationFamily& family, const GridField& phi) {
  check_same_grid(family.limit, phi);
  for (double v : phi)
    if (!(v > 0.0) || !std::isfinite(v)) throw DomainError("test function must be positive");
  struct Values {
    double curvature, mass, entropy, dirichlet;
  };
  // Dirichlet energy is conformally invariant; only the normalization changes per member.
  const GridField kphi = stiffness_apply(family.limit.disc(), phi);
  double energy = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) energy += phi[k] * kphi[k];
  auto evaluate = [&](const ConicMetric& m) {
    const GridField mu = m.measure();
    const GridField q = curvature_mass(m);
    const double scale = 1.0 / mass_of(mu, phi);
    Values v{0.0, 0.0, 0.0, energy * scale};
    for (std::size_t k = 0; k < phi.size(); ++k) {
      const double f2 = phi[k] * phi[k] * scale;
      v.curvature += f2 * q[k];
      v.mass += f2 * mu[k];
      v.entropy += f2 * std::log(f2) * mu[k];
    }
    return v;
  };
  LimitFunctionals out;
  std::vector<Values> values(family.members.size());
  parallel_for(values.size(), [&](std::size_t n) { values[n] = evaluate(family.members[n].metric); });
  for (std::size_t n = 0; n < values.size(); ++n) {
    out.t.push_back(family.members[n].t);
    out.curvature.push_back(values[n].curvature);
    out.mass.push_back(values[n].mass);
    out.entropy.push_back(values[n].entropy);
    out.dirichlet.push_back(values[n].dirichlet);
  }
  const Values lim = evaluate(family.limit);
  out.limit_curvature = lim.curvature;
  out.limit_mass = lim.mass;
  out.limit_entropy = lim.entropy;
  out.limit_dirichlet = lim.dirichlet;
  auto settles = [](const std::vector<double>& v, double limit) {
    // already at the limit to roundoff, or still approaching it
    const double tol = 1e-12 * (1.0 + std::abs(limit));
    const std::size_t n = v.size();
    bool flat = n >= 3;
    for (std::size_t k = n >= 3 ? n - 3 : 0; k < n; ++k) flat = flat && std::abs(v[k] - limit) <= tol;
    return flat || tail_decreasing(v, limit);
  };
  out.converges = settles(out.curvature, lim.curvature) && settles(out.mass, lim.mass) &&
                  settles(out.entropy, lim.entropy);
  const std::size_t n = out.dirichlet.size();
  double liminf = std::numeric_limits<double>::infinity();
  for (std::size_t k = n >= 3 ? n - 3 : 0; k < n; ++k) liminf = std::min(liminf, out.dirichlet[k]);
  out.dirichlet_lower_semicontinuous = liminf >= lim.dirichlet - 1e-3;
  return out;
}

double entropy_continuity_ratio(const ConicMetric& metric, const GridField& x, const GridField& y) {
  check_same_grid(metric, x);
  check_same_grid(metric, y);
  const GridField mu = metric.measure();
  auto ent = [](double v) { return v == 0.0 ? 0.0 : v * v * std::log(v * v); };
  double l1 = 0.0, x4 = 0.0, y4 = 0.0, d2 = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) {
    l1 += std::abs(ent(x[k]) - ent(y[k])) * mu[k];
    x4 += std::pow(x[k], 4) * mu[k];
    y4 += std::pow(y[k], 4) * mu[k];
    d2 += (x[k] - y[k]) * (x[k] - y[k]) * mu[k];
  }
  const double bound = (1.0 + std::sqrt(x4) + std::sqrt(y4)) * std::sqrt(d2);
  return bound == 0.0 ? 0.0 : l1 / bound;
}

}  // namespace conic_ricci
