#include "conic_ricci/metric.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <limits>
#include <numbers>

#include "conic_ricci/error.hpp"

namespace conic_ricci {

namespace {

constexpr double kPi = std::numbers::pi;
using Gauss = boost::math::quadrature::gauss<double, 20>;
using GaussSmall = boost::math::quadrature::gauss<double, 5>;

// Integral of e^w over the cell [-a, a] x [-b, b] centred on a cone point of weight
// beta, in polar coordinates with rho = rho_max * v^(1/(2-2 beta)).
double cone_cell_mass(const ReferenceDensity& density, double s0, double phi0, double a, double b, double beta) {
  const double alpha = 2.0 - 2.0 * beta;
  const double corner = std::atan2(b, a);
  auto radial = [&](double theta, double rho_max) {
    const double c = std::cos(theta), s = std::sin(theta);
    auto inner = [&](double v) {
      const double rho = rho_max * std::pow(v, 1.0 / alpha);
      const double w = density.evaluate(s0 + rho * c, phi0 + rho * s).w;
      return std::exp(w + 2.0 * beta * std::log(rho));
    };
    return std::pow(rho_max, alpha) / alpha * Gauss::integrate(inner, 0.0, 1.0);
  };
  double total = 0.0;
  total += Gauss::integrate([&](double t) { return radial(t, a / std::cos(t)); }, -corner, corner);
  total += Gauss::integrate([&](double t) { return radial(t, b / std::sin(t)); }, corner, kPi - corner);
  total += Gauss::integrate([&](double t) { return radial(t, -a / std::cos(t)); }, kPi - corner, kPi + corner);
  total += Gauss::integrate([&](double t) { return radial(t, -b / std::sin(t)); }, kPi + corner, 2.0 * kPi - corner);
  return total;
}

// Tensor Gauss rule on a cell split into sub_s x sub_phi pieces, with extra cuts at the
// given s-values (where the density is only finitely smooth).
void cell_integrals(const ReferenceDensity& density, double s0, double phi0, double a, double b, int sub_s,
                    int sub_phi, const std::vector<double>& cuts, double& mass, double& curvature_mass) {
  std::vector<double> edges{s0 - a};
  for (double c : cuts)
    if (c > s0 - a && c < s0 + a) edges.push_back(c);
  edges.push_back(s0 + a);
  mass = 0.0;
  curvature_mass = 0.0;
  const auto& xs = GaussSmall::abscissa();
  const auto& ws = GaussSmall::weights();
  // expand the symmetric half rule to the full rule on [-1, 1]
  std::vector<double> x, w;
  for (std::size_t k = 0; k < xs.size(); ++k) {
    x.push_back(xs[k]);
    w.push_back(ws[k]);
    if (xs[k] != 0.0) {
      x.push_back(-xs[k]);
      w.push_back(ws[k]);
    }
  }
  const double hp = 2.0 * b / sub_phi;
  for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
    const double hs = (edges[e + 1] - edges[e]) / sub_s;
    for (int p = 0; p < sub_s; ++p)
      for (int q = 0; q < sub_phi; ++q) {
        const double sa = edges[e] + p * hs, pa = phi0 - b + q * hp;
        for (std::size_t k = 0; k < x.size(); ++k)
          for (std::size_t l = 0; l < x.size(); ++l) {
            const ReferenceSample r = density.evaluate(sa + 0.5 * hs * (1 + x[k]), pa + 0.5 * hp * (1 + x[l]));
            const double weight = 0.25 * hs * hp * w[k] * w[l];
            const double ew = std::exp(r.w);
            mass += weight * ew;
            curvature_mass += weight * ew * r.curvature;
          }
      }
  }
}

}  // namespace

std::shared_ptr<const ReferenceSampling> ReferenceSampling::build(const ReferenceDensity& density_in,
                                                                  const Discretization& disc) {
  auto out = std::make_shared<ReferenceSampling>();
  out->density_ = density_in;
  out->disc_ = disc;
  const ReferenceDensity& density = out->density_;
  const std::size_t n = disc.size();
  const int ns = disc.n_s(), np = disc.n_phi();
  const double hs = disc.h_s(), hp = disc.h_phi();
  out->mass_.assign(n, 0.0);
  out->curvature_mass_.assign(n, 0.0);
  out->w_.assign(n, 0.0);
  out->curvature_.assign(n, 0.0);
  out->cone_mask_.assign(n, 0);

  for (const auto& e : density.interior_cones()) {
    if (disc.kind() == GridKind::Symmetric1D)
      throw GridError("a rotationally symmetric grid cannot carry a cone point away from the poles");
    const auto node = disc.locate(e.point.z);
    if (!node) throw GridError("cone point does not lie on a grid node");
    const int i = disc.row(*node);
    if (i < 3 || i > ns - 4) throw GridError("cone point too close to the end of the grid");
    out->cones_.push_back({*node, e.weight.value(), e.point.z});
    out->cone_mask_[*node] = 1;
  }
  // Ring cells of distinct cone points must not overlap.
  std::vector<int> ring_owner(n, -1);
  for (std::size_t c = 0; c < out->cones_.size(); ++c) {
    const int ic = disc.row(out->cones_[c].node), jc = disc.column(out->cones_[c].node);
    for (int di = -2; di <= 2; ++di)
      for (int dj = -2; dj <= 2; ++dj) {
        const std::size_t k = disc.index(ic + di, ((jc + dj) % np + np) % np);
        if (ring_owner[k] >= 0) throw GridError("cone points are too close for the grid spacing");
        ring_owner[k] = static_cast<int>(c);
      }
  }

  // The cutoff transition is only finitely smooth at its two radii, so cells get a Gauss
  // rule with cuts there.
  double annulus_lo = INFINITY, annulus_hi = -INFINITY;
  if (density.kind() == ReferenceDensity::Kind::Cutoff) {
    annulus_lo = std::log(density.cutoff_spec().inner_radius) - density.shift();
    annulus_hi = annulus_lo + std::numbers::ln2;
  }
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < np; ++j) {
      const std::size_t k = disc.index(i, j);
      const double s = disc.s(i), phi = disc.phi(j);
      if (out->cone_mask_[k]) {
        const double beta = out->cones_[static_cast<std::size_t>(ring_owner[k])].weight;
        out->mass_[k] = cone_cell_mass(density, s, phi, 0.5 * hs, 0.5 * hp, beta);
        out->curvature_mass_[k] = 0.0;
        out->w_[k] = std::numeric_limits<double>::infinity();
        out->curvature_[k] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      const ReferenceSample r = density.evaluate(s, phi);
      out->w_[k] = r.w;
      out->curvature_[k] = r.curvature;
      if (ring_owner[k] >= 0) {
        cell_integrals(density, s, phi, 0.5 * hs, 0.5 * hp, 6, 6, {}, out->mass_[k], out->curvature_mass_[k]);
      } else {
        // the transition has large high derivatives; a coarse split converges erratically
        const bool annulus = s + 0.5 * hs > annulus_lo && s - 0.5 * hs < annulus_hi;
        const int sub_s = annulus ? 6 : 1, sub_phi = annulus && np > 1 ? 6 : 1;
        cell_integrals(density, s, phi, 0.5 * hs, 0.5 * hp, sub_s, sub_phi, {annulus_lo, annulus_hi}, out->mass_[k],
                       out->curvature_mass_[k]);
      }
      if (i == 0) {
        const double sb = s - 0.5 * hs;
        out->mass_[k] += hp * density.tail_mass_low(sb, phi);
        out->curvature_mass_[k] += hp * density.tail_curvature_low(sb, phi);
      }
      if (i == ns - 1) {
        const double sb = s + 0.5 * hs;
        out->mass_[k] += hp * density.tail_mass_high(sb, phi);
        out->curvature_mass_[k] += hp * density.tail_curvature_high(sb, phi);
      }
    }
  }

  // Across the transition the two closed forms differ by a large factor, so w has a
  // feature about one cell wide that a potential compensating it cannot resolve. On the
  // radial edges there, swap the exact flux of w for its difference quotient; the cell
  // curvature then sees the difference quotient of w + u, which stays smooth. Each
  // correction enters two cells with opposite signs, so the total is unchanged.
  if (density.kind() == ReferenceDensity::Kind::Cutoff) {
    const auto& xs = GaussSmall::abscissa();
    const auto& ws = GaussSmall::weights();
    constexpr int pieces = 6;
    for (int i = 0; i + 1 < ns; ++i) {
      const double se = disc.s(i) + 0.5 * hs;
      if (!(se > annulus_lo && se < annulus_hi)) continue;
      for (int j = 0; j < np; ++j) {
        const std::size_t lo = disc.index(i, j), hi = disc.index(i + 1, j);
        if (ring_owner[lo] >= 0 || ring_owner[hi] >= 0) continue;
        double exact = 0.0;
        const double piece = hp / pieces;
        for (int p = 0; p < pieces; ++p) {
          const double mid = disc.phi(j) - 0.5 * hp + (p + 0.5) * piece;
          for (std::size_t q = 0; q < xs.size(); ++q) {
            exact += 0.5 * piece * ws[q] * density.evaluate(se, mid + 0.5 * piece * xs[q]).w_s;
            if (xs[q] != 0.0) exact += 0.5 * piece * ws[q] * density.evaluate(se, mid - 0.5 * piece * xs[q]).w_s;
          }
        }
        const double quotient = hp * (out->w_[hi] - out->w_[lo]) / hs;
        const double c = (exact - quotient) / (4.0 * kPi);
        out->curvature_mass_[lo] += c;
        out->curvature_mass_[hi] -= c;
      }
    }
  }

  double total = 0.0;
  for (double m : out->mass_) total += m;
  if (!(total > 0.0) || !std::isfinite(total)) throw GridError("reference measure is not finite");
  for (const auto& c : out->cones_)
    if (out->mass_[c.node] > 0.05 * total) throw GridError("grid is under-resolved near a cone point");
  const double factor = 2.0 / total;
  const double log_factor = std::log(factor);
  for (std::size_t k = 0; k < n; ++k) {
    out->mass_[k] *= factor;
    out->w_[k] += log_factor;
    out->curvature_[k] /= factor;
  }
  out->density_ = density.with_scale(density.scale() * factor);
  return out;
}

ConicMetric::ConicMetric(std::shared_ptr<const ReferenceSampling> reference, GridField potential)
    : reference_(std::move(reference)), u_(std::move(potential)) {
  if (!reference_) throw DomainError("metric needs a reference");
  if (u_.size() != reference_->disc().size()) throw GridError("potential does not match the grid");
  for (double v : u_)
    if (!std::isfinite(v)) throw DomainError("potential is not finite");
}

GridField ConicMetric::measure() const {
  GridField out(u_.size());
  const GridField& m = reference_->mass();
  for (std::size_t k = 0; k < u_.size(); ++k) out[k] = std::exp(u_[k]) * m[k];
  return out;
}

double ConicMetric::area() const {
  double total = 0.0;
  const GridField& m = reference_->mass();
  for (std::size_t k = 0; k < u_.size(); ++k) total += std::exp(u_[k]) * m[k];
  return total;
}

ConicMetric ConicMetric::with_potential(GridField potential) const { return ConicMetric(reference_, std::move(potential)); }

ConicMetric ConicMetric::normalized() const {
  const double shift = std::log(2.0 / area());
  GridField u = u_;
  for (double& v : u) v += shift;
  return ConicMetric(reference_, std::move(u));
}

ConicMetric build_reference_metric(const ConeDivisor& divisor, const CutoffSpec& cutoff, const Discretization& disc) {
  if (!(divisor.gamma() > 0.0)) throw DomainError("gamma must be positive");
  const ConeDivisor placed = divisor.with_largest_at_infinity();
  for (const auto& e : placed.entries()) {
    if (e.point.at_infinity) continue;
    const double r = std::abs(e.point.z);
    if (r >= cutoff.inner_radius && r <= 2.0 * cutoff.inner_radius)
      throw DomainError("cone point lies on the cutoff annulus");
  }
  // Without cone points the reference is the round metric itself.
  const ReferenceDensity density =
      placed.empty() ? ReferenceDensity::football(0.0) : ReferenceDensity::cutoff(placed, cutoff);
  const auto sampling = ReferenceSampling::build(density, disc);
  return ConicMetric(sampling, GridField(disc.size(), 0.0));
}

Discretization default_symmetric_grid(int n, double alpha_low, double alpha_high) {
  const double target = std::log(1e10);
  const double s = std::max(target / alpha_low, target / alpha_high);
  return Discretization::symmetric(n, -s, s);
}

GridField stiffness_apply(const Discretization& disc, const GridField& u) {
  const int ns = disc.n_s(), np = disc.n_phi();
  const double wr = disc.radial_edge_weight(), wa = disc.angular_edge_weight();
  GridField out(u.size(), 0.0);
  for (int i = 0; i < ns; ++i) {
    for (int j = 0; j < np; ++j) {
      const std::size_t k = disc.index(i, j);
      double acc = 0.0;
      if (i > 0) acc += wr * (u[k] - u[k - np]);
      if (i < ns - 1) acc += wr * (u[k] - u[k + np]);
      if (np > 1) {
        const std::size_t left = disc.index(i, j == 0 ? np - 1 : j - 1);
        const std::size_t right = disc.index(i, j == np - 1 ? 0 : j + 1);
        acc += wa * (2.0 * u[k] - u[left] - u[right]);
      }
      out[k] = acc;
    }
  }
  return out;
}

GridField curvature_mass(const ConicMetric& metric) {
  GridField out = stiffness_apply(metric.disc(), metric.potential());
  const GridField& kref = metric.reference().curvature_mass();
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = kref[k] + out[k] / (4.0 * kPi);
  return out;
}

std::vector<char> resolved_nodes(const ConicMetric& metric) {
  const Discretization& disc = metric.disc();
  const GridField mu = metric.measure();
  double umax = 0.0;
  for (double v : metric.potential()) umax = std::max(umax, std::abs(v));
  const double spread = std::numeric_limits<double>::epsilon() * (1.0 + umax);
  const double weight = 2.0 * disc.radial_edge_weight() + (disc.n_phi() > 1 ? 2.0 * disc.angular_edge_weight() : 0.0);
  std::vector<char> out(mu.size(), 0);
  for (std::size_t k = 0; k < mu.size(); ++k)
    out[k] = !metric.reference().is_cone(k) && spread * weight / (4.0 * kPi * mu[k]) <= 1e-9;
  return out;
}

GridField scalar_curvature(const ConicMetric& metric) {
  const ReferenceSampling& ref = metric.reference();
  const GridField& u = metric.potential();
  const GridField ku = stiffness_apply(metric.disc(), u);
  GridField out(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    if (ref.is_cone(k)) {
      out[k] = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    out[k] = (ref.curvature_mass()[k] + ku[k] / (4.0 * kPi)) / (std::exp(u[k]) * ref.mass()[k]);
  }
  return out;
}

GaussBonnet area_and_gauss_bonnet(const ConicMetric& metric) {
  const ReferenceSampling& ref = metric.reference();
  const GridField ku = stiffness_apply(metric.disc(), metric.potential());
  GaussBonnet out;
  out.area = metric.area();
  for (std::size_t k = 0; k < ku.size(); ++k) {
    if (ref.is_cone(k)) continue;
    out.curvature_integral += ref.curvature_mass()[k] + ku[k] / (4.0 * kPi);
  }
  out.defect = out.curvature_integral - 2.0 * metric.gamma();
  if (!std::isfinite(out.curvature_integral)) throw GridError("curvature quadrature diverged near a cone point");
  return out;
}

}  // namespace conic_ricci
