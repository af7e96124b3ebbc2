#include "conic_ricci/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "conic_ricci/distance.hpp"
#include "conic_ricci/error.hpp"
#include "conic_ricci/linear_solver.hpp"
#include "conic_ricci/parallel.hpp"
#include "conic_ricci/soliton.hpp"
#include "conic_ricci/stability.hpp"

namespace conic_ricci {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFloor = 1e-12;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double dot(const GridField& a, const GridField& b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// Discrete W on a fixed metric: W = phi' A phi - sum M phi^2 log phi^2 - 3/2 with
// A = K / (pi gamma) + diag(q / gamma).
struct Problem {
  const Discretization& disc;
  GridField m, q;
  double gamma;
  double grad_coef;

  explicit Problem(const ConicMetric& metric)
      : disc(metric.disc()), m(metric.measure()), q(curvature_mass(metric)), gamma(metric.gamma()),
        grad_coef(1.0 / (kPi * metric.gamma())) {}

  GridField apply_a(const GridField& v) const {
    GridField out = stiffness_apply(disc, v);
    for (std::size_t k = 0; k < v.size(); ++k) out[k] = grad_coef * out[k] + q[k] / gamma * v[k];
    return out;
  }

  double value(const GridField& phi) const {
    const GridField a = apply_a(phi);
    double w = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) {
      const double p2 = phi[k] * phi[k];
      w += phi[k] * a[k] - m[k] * p2 * std::log(p2);
    }
    return w - 1.5;
  }

  double norm2(const GridField& phi) const {
    double s = 0.0;
    for (std::size_t k = 0; k < phi.size(); ++k) s += m[k] * phi[k] * phi[k];
    return s;
  }

  void normalize(GridField& phi) const {
    for (double& v : phi) v = std::max(v, kFloor);
    const double scale = 1.0 / std::sqrt(norm2(phi));
    for (double& v : phi) v *= scale;
  }

  // Gradient g, multiplier lambda and projected residual r = g - 2 lambda M phi. Its
  // size is sqrt(r' P^-1 r / 2) with P = 2 (K / (pi gamma) + M): the L2(dmu) norm of the
  // pointwise residual r / 2M for smooth residuals, and blind to rounding in cells of
  // negligible measure.
  struct Gradient {
    GridField r;
    double lambda = 0.0;
    double norm = 0.0;
  };
  GridField precondition(const ConformalSolver& solver, const GridField& r) const {
    GridField two_m(m.size()), z(m.size(), 0.0);
    for (std::size_t k = 0; k < m.size(); ++k) two_m[k] = 2.0 * m[k];
    solver.solve(two_m, 2.0 * grad_coef, r, z, 1e-12, 1000);
    return z;
  }
  Gradient gradient(const GridField& phi, const ConformalSolver& solver) const {
    Gradient out;
    GridField g = apply_a(phi);
    for (std::size_t k = 0; k < phi.size(); ++k) {
      g[k] = 2.0 * g[k] - 2.0 * m[k] * phi[k] * (std::log(phi[k] * phi[k]) + 1.0);
    }
    out.lambda = dot(phi, g) / (2.0 * norm2(phi));
    out.r = std::move(g);
    for (std::size_t k = 0; k < phi.size(); ++k) out.r[k] -= 2.0 * out.lambda * m[k] * phi[k];
    out.norm = std::sqrt(std::max(0.0, dot(out.r, precondition(solver, out.r))) / 2.0);
    return out;
  }
};

struct StartResult {
  double mu = kNaN;
  GridField phi;
  double residual = kNaN;
  int iterations = 0;
  bool converged = false;
};

StartResult descend(const Problem& pb, const ConformalSolver& solver, GridField phi, const MuOptions& opts) {
  const std::size_t n = phi.size();
  pb.normalize(phi);
  auto precondition = [&](const GridField& r) { return pb.precondition(solver, r); };

  StartResult out;
  double w = pb.value(phi);
  auto grad = pb.gradient(phi, solver);
  int it = 0;

  // Preconditioned projected gradient until the residual is moderate.
  double step = 1.0;
  while (it < opts.max_iterations && grad.norm > std::max(1e-5, opts.tolerance)) {
    ++it;
    GridField p = precondition(grad.r);
    double along = 0.0;
    for (std::size_t k = 0; k < n; ++k) along += pb.m[k] * phi[k] * p[k];
    for (std::size_t k = 0; k < n; ++k) p[k] = -(p[k] - along * phi[k]);
    const double slope = dot(grad.r, p);
    if (!(slope < 0.0)) break;
    bool accepted = false;
    for (int bt = 0; bt < 40; ++bt) {
      GridField trial(n);
      for (std::size_t k = 0; k < n; ++k) trial[k] = phi[k] + step * p[k];
      pb.normalize(trial);
      const double wt = pb.value(trial);
      if (wt <= w + 1e-4 * step * slope) {
        phi = std::move(trial);
        w = wt;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    step = std::min(1.0, 2.0 * step);
    grad = pb.gradient(phi, solver);
  }

  // Projected Newton-CG with the constraint-preconditioned conjugate gradient.
  while (it < opts.max_iterations && grad.norm > opts.tolerance) {
    ++it;
    GridField shift(n);
    for (std::size_t k = 0; k < n; ++k)
      shift[k] = 2.0 * pb.m[k] * (std::log(phi[k] * phi[k]) + 3.0 + grad.lambda);
    auto hess = [&](const GridField& v) {
      GridField out = pb.apply_a(v);
      for (std::size_t k = 0; k < n; ++k) out[k] = 2.0 * out[k] - shift[k] * v[k];
      return out;
    };
    GridField c(n);
    for (std::size_t k = 0; k < n; ++k) c[k] = pb.m[k] * phi[k];
    const GridField y = precondition(c);
    const double cy = dot(c, y);
    auto project = [&](const GridField& rho) {
      GridField z = precondition(rho);
      const double f = dot(c, z) / cy;
      for (std::size_t k = 0; k < n; ++k) z[k] -= f * y[k];
      return z;
    };
    GridField delta(n, 0.0), rho(n);
    for (std::size_t k = 0; k < n; ++k) rho[k] = -grad.r[k];
    GridField z = project(rho), d = z;
    double rz = dot(rho, z);
    const double rz0 = rz;
    for (int cg = 0; cg < 200 && rz > 1e-24 * rz0; ++cg) {
      const GridField hd = hess(d);
      const double curv = dot(d, hd);
      if (!(curv > 0.0)) {
        if (cg == 0) delta = d;
        break;
      }
      const double alpha = rz / curv;
      for (std::size_t k = 0; k < n; ++k) {
        delta[k] += alpha * d[k];
        rho[k] -= alpha * hd[k];
      }
      z = project(rho);
      const double rz_new = dot(rho, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t k = 0; k < n; ++k) d[k] = z[k] + beta * d[k];
    }
    bool accepted = false;
    double t = 1.0;
    for (int bt = 0; bt < 30; ++bt) {
      GridField trial(n);
      for (std::size_t k = 0; k < n; ++k) trial[k] = phi[k] + t * delta[k];
      pb.normalize(trial);
      const double wt = pb.value(trial);
      const auto gt = pb.gradient(trial, solver);
      if (wt <= w + 1e-13 * std::abs(w) || gt.norm < grad.norm) {
        phi = std::move(trial);
        w = wt;
        grad = gt;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;
  }

  out.mu = w;
  out.phi = std::move(phi);
  out.residual = grad.norm;
  out.iterations = it;
  out.converged = grad.norm <= opts.tolerance;
  return out;
}

// Logistic ramp equal to 1 well below edge and 0 well above.
double ramp(double x, double edge, double width) { return 1.0 / (1.0 + std::exp((x - edge) / width)); }

}  // namespace

double w_functional(const ConicMetric& metric, const GridField& phi) {
  if (phi.size() != metric.disc().size()) throw GridError("test function does not match the grid");
  for (double v : phi)
    if (!(v > 0.0)) throw DomainError("test function must be positive");
  const Problem pb(metric);
  if (std::abs(pb.norm2(phi) - 1.0) > 1e-8) throw DomainError("test function must have unit L2 norm");
  return pb.value(phi);
}

double euler_lagrange_residual(const ConicMetric& metric, const GridField& phi) {
  const Problem pb(metric);
  const ConformalSolver solver(metric.disc());
  return pb.gradient(phi, solver).norm;
}

std::vector<GridField> mu_starts(const ConicMetric& metric) {
  const Discretization& disc = metric.disc();
  const GridField mu = metric.measure();
  std::vector<GridField> out;
  out.emplace_back(disc.size(), 1.0);
  // Row position where the measure below (above) reaches 15%.
  std::vector<double> row_mass(disc.n_s(), 0.0);
  for (int i = 0; i < disc.n_s(); ++i)
    for (int j = 0; j < disc.n_phi(); ++j) row_mass[i] += mu[disc.index(i, j)];
  double total = 0.0;
  for (double v : row_mass) total += v;
  auto quantile = [&](double frac) {
    double acc = 0.0;
    for (int i = 0; i < disc.n_s(); ++i) {
      acc += row_mass[i];
      if (acc >= frac * total) return disc.s(i);
    }
    return disc.s_max();
  };
  for (const SamplePoint& p : cone_samples(metric)) {
    GridField f(disc.size());
    for (int i = 0; i < disc.n_s(); ++i) {
      for (int j = 0; j < disc.n_phi(); ++j) {
        const std::size_t k = disc.index(i, j);
        double bump = 0.0;
        if (p.kind == SamplePoint::Kind::SouthPole) {
          bump = ramp(disc.s(i), quantile(0.15), 0.5);
        } else if (p.kind == SamplePoint::Kind::NorthPole) {
          bump = ramp(-disc.s(i), -quantile(0.85), 0.5);
        } else {
          const double ds = disc.s(i) - disc.s(disc.row(p.node));
          double dp = std::remainder(disc.phi(j) - disc.phi(disc.column(p.node)), 2.0 * kPi);
          bump = std::exp(-(ds * ds + dp * dp) / (2.0 * 0.25));
        }
        f[k] = 1.0 + 4.0 * bump;
      }
    }
    out.push_back(std::move(f));
  }
  return out;
}

EntropyResult minimize_mu(const ConicMetric& metric, const MuOptions& opts) {
  std::vector<GridField> starts;
  if (opts.constant_only) {
    starts.emplace_back(metric.disc().size(), 1.0);
  } else {
    starts = mu_starts(metric);
  }
  for (const GridField& s : opts.extra_starts) {
    if (s.size() != metric.disc().size()) throw GridError("start does not match the grid");
    starts.push_back(s);
  }
  std::vector<int> order = opts.start_order;
  if (order.empty()) {
    for (std::size_t i = 0; i < starts.size(); ++i) order.push_back(static_cast<int>(i));
  } else {
    std::vector<int> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < sorted.size(); ++i)
      if (sorted[i] != static_cast<int>(i) || sorted.size() != starts.size())
        throw DomainError("start order must be a permutation of the starts");
  }

  const Problem pb(metric);
  const ConformalSolver solver(metric.disc());
  std::vector<StartResult> results(starts.size());
  parallel_for(order.size(), [&](std::size_t slot) {
    const int idx = order[slot];
    results[idx] = descend(pb, solver, starts[idx], opts);
  });

  int best = -1;
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (!std::isfinite(results[i].mu)) continue;
    if (best < 0 || results[i].mu < results[best].mu - 1e-12) best = static_cast<int>(i);
  }
  if (best < 0) throw ConvergenceError("no entropy start produced a finite value");
  EntropyResult out;
  StartResult& r = results[best];
  out.mu = r.mu;
  out.phi = std::move(r.phi);
  out.residual = r.residual;
  out.iterations = r.iterations;
  out.start_index = best;
  out.converged = r.converged;
  return out;
}

PartitionTable mu_comparison(const ConeDivisor& divisor, int n_s) {
  const StabilityReport report = classify_divisor(divisor);
  if (report.stability != StabilityClass::Unstable) throw DomainError("partition comparison needs an unstable divisor");
  const std::size_t k = divisor.size();
  if (k < 2 || k > 6) throw DomainError("partition comparison needs between 2 and 6 cone points");

  // The largest weight (last index) always sits on the north side.
  PartitionTable table;
  const int largest = static_cast<int>(k) - 1;
  for (unsigned mask = 0; mask < (1u << largest); ++mask) {
    PartitionRow row;
    row.north.push_back(largest);
    for (int j = 0; j < largest; ++j) ((mask >> j) & 1u ? row.north : row.south).push_back(j);
    if (row.south.empty()) continue;
    std::sort(row.north.begin(), row.north.end());
    std::int64_t north_units = 0, south_units = 0;
    for (int j : row.north) north_units += divisor.entries()[j].weight.units();
    for (int j : row.south) south_units += divisor.entries()[j].weight.units();
    row.beta_north = ExactWeight::from_units(north_units).value();
    row.beta_south = ExactWeight::from_units(south_units).value();
    table.rows.push_back(std::move(row));
  }
  std::sort(table.rows.begin(), table.rows.end(),
            [](const PartitionRow& a, const PartitionRow& b) { return a.north < b.north; });

  parallel_for(table.rows.size(), [&](std::size_t i) {
    PartitionRow& row = table.rows[i];
    try {
      if (row.beta_north >= 1.0 || row.beta_south >= 1.0) throw DomainError("merged weight is not below 1");
      const SolitonProfile profile = solve_soliton(row.beta_north, row.beta_south);
      row.kappa = profile.kappa;
      const auto reference = smooth_pole_reference(row.beta_north, row.beta_south, n_s);
      const Discretization& disc = reference->disc();
      const ConformalSoliton c = to_conformal(profile, reference);
      MuOptions opts;
      GridField candidate(disc.size());
      for (std::size_t j = 0; j < disc.size(); ++j) candidate[j] = std::exp(0.5 * c.theta[j]);
      opts.extra_starts.push_back(std::move(candidate));
      const EntropyResult e = minimize_mu(c.metric, opts);
      row.mu = e.mu;
      row.residual = e.residual;
      row.ok = e.converged;
      if (!e.converged) row.error = "entropy minimization did not converge";
    } catch (const Error& ex) {
      row.ok = false;
      row.error = ex.what();
    }
  });

  table.mu1 = kNaN;
  table.mu2 = kNaN;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (!table.rows[i].ok) continue;
    if (table.best_row < 0 || table.rows[i].mu > table.mu1) {
      table.best_row = static_cast<int>(i);
      table.mu1 = table.rows[i].mu;
    }
  }
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    if (!table.rows[i].ok || static_cast<int>(i) == table.best_row) continue;
    if (std::isnan(table.mu2) || table.rows[i].mu > table.mu2) table.mu2 = table.rows[i].mu;
  }
  if (table.best_row >= 0) {
    const PartitionRow& best = table.rows[table.best_row];
    table.largest_alone_wins = best.north.size() == 1 && best.north[0] == largest;
  }
  return table;
}

}  // namespace conic_ricci
