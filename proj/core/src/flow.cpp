#include "conic_ricci/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <sstream>

#include "conic_ricci/distance.hpp"
#include "conic_ricci/entropy.hpp"
#include "conic_ricci/error.hpp"
#include "conic_ricci/linear_solver.hpp"

namespace conic_ricci {

namespace {

constexpr double kPi = std::numbers::pi;

std::string format12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

// d(w + u)/ds per node, exact for w and centred for u (zero flux at the ends).
GridField log_density_slope(const ConicMetric& metric) {
  const Discretization& disc = metric.disc();
  const ReferenceDensity& density = metric.reference().density();
  const GridField& u = metric.potential();
  GridField out(disc.size());
  for (int i = 0; i < disc.n_s(); ++i) {
    for (int j = 0; j < disc.n_phi(); ++j) {
      const std::size_t k = disc.index(i, j);
      double us = 0.0;
      if (i > 0 && i + 1 < disc.n_s()) us = (u[disc.index(i + 1, j)] - u[disc.index(i - 1, j)]) / (2.0 * disc.h_s());
      out[k] = density.evaluate(disc.s(i), disc.phi(j)).w_s + us;
    }
  }
  return out;
}

double sup_abs(const GridField& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double sup_resolved(const GridField& v, const std::vector<char>& mask, double offset = 0.0) {
  double m = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (mask[k]) m = std::max(m, std::abs(v[k] - offset));
  return m;
}

void check_regular(const ConicMetric& metric) {
  const Discretization& disc = metric.disc();
  const GridField& u = metric.potential();
  for (const ConeNode& c : metric.reference().cone_nodes()) {
    const int i0 = disc.row(c.node), j0 = disc.column(c.node);
    for (int di = -2; di <= 2; ++di) {
      for (int dj = -2; dj <= 2; ++dj) {
        const int j = ((j0 + dj) % disc.n_phi() + disc.n_phi()) % disc.n_phi();
        const double diff = u[disc.index(i0 + di, j)] - u[c.node];
        if (std::abs(diff) > 1e-10 * (1.0 + std::abs(u[c.node])))
          throw DomainError("initial potential must be constant near every cone point");
      }
    }
  }
}

}  // namespace

GridField flow_velocity(const ConicMetric& metric, bool dilation_gauge) {
  const GridField m = metric.measure();
  const GridField q = curvature_mass(metric);
  const double gamma = metric.gamma();
  GridField v(m.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = gamma - q[k] / m[k];
  if (dilation_gauge) {
    if (metric.disc().kind() != GridKind::Symmetric1D)
      throw GridError("the dilation gauge needs a rotationally symmetric grid");
    const GridField slope = log_density_slope(metric);
    double num = 0.0, den = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      num += m[k] * v[k] * slope[k];
      den += m[k] * slope[k] * slope[k];
    }
    const double kappa = -num / den;
    // the dilation field preserves area only up to quadrature error; drop its mean
    double mean = 0.0, mass = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] += kappa * slope[k];
      mean += m[k] * v[k];
      mass += m[k];
    }
    mean /= mass;
    for (double& x : v) x -= mean;
  }
  return v;
}

FlowState flow_step(const FlowState& state, double dt, const FlowConfig& config) {
  if (!(dt > 0.0)) throw DomainError("time step must be positive");
  const ConicMetric& metric = state.metric;
  const Discretization& disc = metric.disc();
  const GridField m = metric.measure();
  const GridField v = flow_velocity(metric, config.dilation_gauge);
  GridField b(m.size());
  for (std::size_t k = 0; k < b.size(); ++k) b[k] = dt * m[k] * v[k];
  GridField delta(m.size(), 0.0);
  const ConformalSolver solver(disc);
  solver.solve(m, dt / (4.0 * kPi), b, delta, 1e-13, 2000);
  const double change = sup_abs(delta);
  if (!std::isfinite(change)) throw BlowUpError("flow step produced a non-finite potential");
  if (change > config.safeguard)
    throw CflError("flow step changed the potential by " + format12(change) + ", above the safeguard");
  GridField u = metric.potential();
  for (std::size_t k = 0; k < u.size(); ++k) u[k] += delta[k];
  FlowState out;
  out.metric = metric.with_potential(std::move(u));
  if (config.renormalize) out.metric = out.metric.normalized();
  out.t = state.t + dt;
  out.dt = dt;
  out.steps = state.steps + 1;
  return out;
}

FlowRecord observables(const FlowState& state, bool with_mu, bool with_distances, GridField* phi) {
  const ConicMetric& metric = state.metric;
  FlowRecord rec;
  rec.t = state.t;
  rec.area = metric.area();
  const std::vector<char> mask = resolved_nodes(metric);
  rec.sup_r_dev = sup_resolved(scalar_curvature(metric), mask, metric.gamma());
  const auto [lo, hi] = std::minmax_element(metric.potential().begin(), metric.potential().end());
  rec.u_min = *lo;
  rec.u_max = *hi;
  rec.sup_velocity = sup_resolved(flow_velocity(metric), mask);
  if (with_mu) {
    MuOptions opts;
    if (phi && !phi->empty()) opts.extra_starts.push_back(*phi);
    EntropyResult e = minimize_mu(metric, opts);
    rec.mu = e.mu;
    if (phi) *phi = std::move(e.phi);
  } else {
    rec.mu = std::numeric_limits<double>::quiet_NaN();
  }
  if (with_distances) {
    const auto samples = cone_samples(metric);
    if (samples.size() >= 2) {
      const DistanceMatrix d = distance_matrix(metric, samples);
      for (std::size_t a = 0; a < d.size(); ++a)
        for (std::size_t b2 = a + 1; b2 < d.size(); ++b2) rec.distances.push_back(d(a, b2));
    }
  }
  return rec;
}

FlowTrace run_flow(const ConicMetric& initial, const FlowConfig& config) {
  if (!(config.dt > 0.0) || !(config.dt_max > 0.0) || !(config.cfl > 0.0) || !(config.stop_threshold > 0.0) ||
      !(config.max_time > 0.0) || !(config.safeguard > 0.0) || config.observe_every < 0.0)
    throw DomainError("flow configuration needs positive steps and thresholds");
  check_regular(initial);

  FlowTrace trace;
  if (config.track_distances) {
    const auto samples = cone_samples(initial);
    for (std::size_t a = 0; a < samples.size(); ++a)
      for (std::size_t b = a + 1; b < samples.size(); ++b)
        trace.distance_labels.push_back("d_" + samples[a].id + "_" + samples[b].id);
  }
  FlowState state;
  state.metric = config.renormalize ? initial.normalized() : initial;
  GridField phi;
  auto record = [&] {
    trace.records.push_back(observables(state, config.track_mu, config.track_distances, &phi));
  };
  record();
  double next_record = config.observe_every;
  double dt = std::min(config.dt, config.dt_max);
  const double gamma = initial.gamma();

  while (true) {
    const std::vector<char> mask = resolved_nodes(state.metric);
    const double speed = sup_resolved(flow_velocity(state.metric, config.dilation_gauge), mask);
    if (speed < config.stop_threshold) {
      trace.converged = true;
      break;
    }
    if (sup_resolved(scalar_curvature(state.metric), mask) > config.blowup_factor * gamma)
        throw BlowUpError("curvature exceeded " + format12(config.blowup_factor) + " gamma at t = " +
                          format12(state.t));
    if (state.t >= config.max_time * (1.0 - 1e-12) || state.steps >= config.max_steps) break;

    if (config.policy == FlowConfig::StepPolicy::Adaptive)
      dt = std::min({config.dt_max, config.cfl / speed, 2.0 * dt});
    dt = std::min(dt, config.max_time - state.t);
    while (true) {
      try {
        state = flow_step(state, dt, config);
        break;
      } catch (const CflError&) {
        if (config.policy == FlowConfig::StepPolicy::Fixed) throw;
        ++trace.rejected_steps;
        dt *= 0.5;
        if (dt < 1e-12) throw;
      }
    }
    if (config.observe_every == 0.0 || state.t >= next_record - 1e-12) {
      record();
      while (next_record <= state.t + 1e-12) next_record += config.observe_every;
    }
  }
  if (trace.records.back().t < state.t) record();
  trace.final_state = state;
  return trace;
}

std::string FlowTrace::to_csv() const {
  std::ostringstream o;
  o << "t,mu,sup_R_dev,area";
  for (const auto& l : distance_labels) o << ',' << l;
  o << ",u_min,u_max\n";
  for (const FlowRecord& r : records) {
    o << format12(r.t) << ',' << format12(r.mu) << ',' << format12(r.sup_r_dev) << ',' << format12(r.area);
    for (double d : r.distances) o << ',' << format12(d);
    o << ',' << format12(r.u_min) << ',' << format12(r.u_max) << '\n';
  }
  return o.str();
}

}  // namespace conic_ricci
