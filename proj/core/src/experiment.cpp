#include "conic_ricci/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "conic_ricci/deformation.hpp"
#include "conic_ricci/distance.hpp"
#include "conic_ricci/entropy.hpp"
#include "conic_ricci/flow.hpp"
#include "conic_ricci/metric.hpp"
#include "conic_ricci/soliton.hpp"
#include "conic_ricci/stability.hpp"

namespace conic_ricci {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

const std::map<ExperimentKind, std::string>& kind_names() {
  static const std::map<ExperimentKind, std::string> names{
      {ExperimentKind::Classify, "classify"}, {ExperimentKind::Flow, "flow"},
      {ExperimentKind::Mu, "mu"},             {ExperimentKind::Soliton, "soliton"},
      {ExperimentKind::Partitions, "partitions"}, {ExperimentKind::Deform, "deform"},
      {ExperimentKind::Compare, "compare"}};
  return names;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

[[noreturn]] void field_error(const std::string& field, const std::string& what) {
  throw ConfigError("field '" + field + "': " + what);
}

void allow_only(const json& object, const std::string& where, std::initializer_list<const char*> keys) {
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : object.items())
    if (!allowed.count(key)) field_error(where.empty() ? key : where + "." + key, "unknown field");
}

double number_at(const json& object, const char* key, const std::string& where, double fallback) {
  if (!object.contains(key)) return fallback;
  const json& v = object.at(key);
  if (!v.is_number()) field_error(where + key, "expected a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) field_error(where + key, "expected a finite number");
  return x;
}

double positive_at(const json& object, const char* key, const std::string& where, double fallback) {
  const double x = number_at(object, key, where, fallback);
  if (!(x > 0.0)) field_error(where + key, "must be positive");
  return x;
}

int int_at(const json& object, const char* key, const std::string& where, int fallback) {
  if (!object.contains(key)) return fallback;
  const json& v = object.at(key);
  if (!v.is_number_integer()) field_error(where + key, "expected an integer");
  return v.get<int>();
}

std::pair<int, int> line_column(const std::string& text, std::size_t byte) {
  int line = 1, column = 1;
  for (std::size_t k = 0; k < std::min(byte, text.size()); ++k) {
    if (text[k] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
  return {line, column};
}

json point_json(const PointSpec& p) {
  json point = p.at_infinity ? json("inf") : json::array({p.re, p.im});
  return json{{"point", point}, {"weight", p.weight}};
}

json divisor_json(const ConeDivisor& d) {
  json out = json::array();
  for (const ConeEntry& e : d.entries()) {
    PointSpec p{e.point.at_infinity, e.point.z.real(), e.point.z.imag(), e.weight.text()};
    out.push_back(point_json(p));
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text, std::vector<std::string>& files) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
  files.push_back(path.filename().string());
}

void write_json(const fs::path& path, const json& j, std::vector<std::string>& files) {
  write_text(path, j.dump(2) + "\n", files);
}

std::vector<double> weights_of(const ConeDivisor& d) {
  std::vector<double> w;
  for (std::size_t j = 0; j < d.size(); ++j) w.push_back(d.weight(j));
  return w;
}

/// 1D: the weights go to the poles of a smooth two-pole reference; 2D: the cutoff
/// reference on a log2-aligned cylinder.
ConicMetric reference_for(const ExperimentConfig& c, const ConeDivisor& d) {
  if (c.grid.dimension == 1) {
    std::vector<double> w = weights_of(d);
    w.resize(2, 0.0);
    return ConicMetric(smooth_pole_reference(w[0], w[1], c.grid.resolution),
                       GridField(static_cast<std::size_t>(c.grid.resolution), 0.0));
  }
  return build_reference_metric(d, CutoffSpec{},
                                Discretization::cylinder_log2_aligned(c.grid.resolution, -c.grid.extent, c.grid.extent));
}

/// Smooth seeded perturbation, bounded by the amplitude and flat at both poles.
GridField perturbed_start(const ExperimentConfig& c, const ConicMetric& m) {
  GridField u = m.potential();
  if (c.perturbation == 0.0) return u;
  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const double a = coef(rng), b = coef(rng), shift = 3.0 * coef(rng);
  const Discretization& disc = m.disc();
  for (int i = 0; i < disc.n_s(); ++i) {
    const double s = disc.s(i);
    const double bump = 0.5 * (a * std::tanh((s - shift) / 2.0) + b * std::exp(-(s - shift) * (s - shift) / 4.0));
    for (int j = 0; j < disc.n_phi(); ++j) u[disc.index(i, j)] += c.perturbation * bump;
  }
  return u;
}

std::string row_profile_csv(const Discretization& disc, const GridField& field, const char* name) {
  std::string csv = std::string("s,") + name + "\n";
  for (int i = 0; i < disc.n_s(); ++i) {
    double sum = 0.0;
    for (int j = 0; j < disc.n_phi(); ++j) sum += field[disc.index(i, j)];
    csv += fmt(disc.s(i)) + "," + fmt(sum / disc.n_phi()) + "\n";
  }
  return csv;
}

bool mu_nondecreasing(const FlowTrace& trace) {
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    const FlowRecord &a = trace.records[k - 1], &b = trace.records[k];
    if (b.mu < a.mu - 1e-6 * (b.t - a.t)) return false;
  }
  return true;
}

FlowConfig flow_config(const ExperimentConfig& c) {
  FlowConfig cfg;
  cfg.max_time = c.max_time;
  cfg.observe_every = c.observe_every;
  cfg.stop_threshold = c.tolerances.flow;
  cfg.dilation_gauge = c.dilation_gauge;
  return cfg;
}

struct Outcome {
  json summary;
  int exit_code = 0;
};

Outcome run_classify(const ExperimentConfig&, const ConeDivisor& d, const fs::path& dir, std::vector<std::string>& files) {
  const StabilityReport r = classify_divisor(d);
  std::string csv = "point,weight\n";
  for (const ConeEntry& e : r.limit.entries())
    csv += (e.point.at_infinity ? std::string("inf") : fmt(e.point.z.real()) + " " + fmt(e.point.z.imag())) + "," +
           e.weight.text() + "\n";
  write_text(dir / "limit_divisor.csv", csv, files);
  json s{{"class", to_string(r.stability)},
         {"predicted", to_string(r.prediction)},
         {"beta_k", r.beta_k.text()},
         {"beta_k_prime", r.beta_k_prime.text()},
         {"gamma", d.gamma()},
         {"limit_divisor", divisor_json(r.limit)},
         {"checks", json::object()}};
  return {s, 0};
}

Outcome run_flow_kind(const ExperimentConfig& c, const ConeDivisor& d, const fs::path& dir,
                      std::vector<std::string>& files) {
  const ConicMetric ref = reference_for(c, d);
  const ConicMetric start = ref.with_potential(perturbed_start(c, ref)).normalized();
  const FlowTrace trace = run_flow(start, flow_config(c));
  write_text(dir / "trace.csv", trace.to_csv(), files);
  const FlowRecord& first = trace.records.front();
  const FlowRecord& last = trace.records.back();
  json s{{"status", trace.status()},
         {"final_time", trace.final_state.t},
         {"steps", trace.final_state.steps},
         {"rejected_steps", trace.rejected_steps},
         {"gamma", start.gamma()},
         {"final_sup_R_dev", last.sup_r_dev},
         {"final_area", last.area},
         {"mu_initial", first.mu},
         {"mu_final", last.mu},
         {"distance_labels", trace.distance_labels},
         {"distances_initial", first.distances},
         {"distances_final", last.distances}};
  s["checks"] = json{{"converged", trace.converged},
                     {"mu_nondecreasing", mu_nondecreasing(trace)},
                     {"area_preserved", std::abs(last.area - 2.0) < 1e-6}};
  return {s, trace.converged ? 0 : 2};
}

Outcome run_mu(const ExperimentConfig& c, const ConeDivisor& d, const fs::path& dir, std::vector<std::string>& files) {
  const ConicMetric m = reference_for(c, d).normalized();
  MuOptions opts;
  opts.tolerance = c.tolerances.mu;
  const EntropyResult r = minimize_mu(m, opts);
  write_text(dir / "minimizer.csv", row_profile_csv(m.disc(), r.phi, "phi"), files);
  const GridField constant(m.disc().size(), 1.0 / std::sqrt(m.area()));
  json s{{"status", r.converged ? "CONVERGED" : "NOT_CONVERGED"},
         {"mu", r.mu},
         {"euler_lagrange_residual", r.residual},
         {"iterations", r.iterations},
         {"start_index", r.start_index},
         {"w_constant", w_functional(m, constant)},
         {"gamma", m.gamma()}};
  s["checks"] = json{{"converged", r.converged}, {"mu_below_w_constant", r.mu <= w_functional(m, constant) + 1e-12}};
  return {s, r.converged ? 0 : 2};
}

Outcome run_soliton(const ExperimentConfig& c, const ConeDivisor& d, const fs::path& dir,
                    std::vector<std::string>& files) {
  if (d.size() > 2) throw DomainError("a soliton takes at most two cone points");
  std::vector<double> w = weights_of(d);
  w.resize(2, 0.0);
  const double north = std::max(w[0], w[1]), south = std::min(w[0], w[1]);
  const SolitonProfile p = solve_soliton(north, south, c.tolerances.soliton);
  write_text(dir / "profile.csv", p.to_csv(), files);
  json s{{"status", "CONVERGED"},
         {"beta_north", north},
         {"beta_south", south},
         {"gamma", p.gamma},
         {"kappa", p.kappa},
         {"length", p.length},
         {"area", p.area},
         {"theta_mass", p.theta_mass},
         {"matching_defect", p.matching_defect},
         {"hessian_residual", p.hessian_residual},
         {"curvature_residual", p.curvature_residual}};
  s["checks"] = json{{"residuals_below_1e-6", p.hessian_residual < 1e-6 && p.curvature_residual < 1e-6}};
  return {s, 0};
}

Outcome run_partitions(const ExperimentConfig& c, const ConeDivisor& d, const fs::path& dir,
                       std::vector<std::string>& files) {
  const PartitionTable t = mu_comparison(d, c.grid.dimension == 1 ? c.grid.resolution : 4096);
  std::string csv = "north,south,beta_north,beta_south,kappa,mu,residual,ok\n";
  auto join = [](const std::vector<int>& v) {
    std::string out;
    for (std::size_t k = 0; k < v.size(); ++k) out += (k ? " " : "") + std::to_string(v[k]);
    return out;
  };
  json rows = json::array();
  for (const PartitionRow& r : t.rows) {
    csv += join(r.north) + "," + join(r.south) + "," + fmt(r.beta_north) + "," + fmt(r.beta_south) + "," +
           fmt(r.kappa) + "," + fmt(r.mu) + "," + fmt(r.residual) + "," + (r.ok ? "1" : "0") + "\n";
    rows.push_back(json{{"north", r.north}, {"south", r.south}, {"mu", r.mu}, {"ok", r.ok}, {"error", r.error}});
  }
  write_text(dir / "partitions.csv", csv, files);
  json s{{"status", "CONVERGED"}, {"mu1", t.mu1}, {"mu2", t.mu2}, {"best_row", t.best_row}, {"rows", rows}};
  s["checks"] = json{{"largest_alone_wins", t.largest_alone_wins},
                     {"gap_exceeds_10x_tolerance", t.mu1 - t.mu2 > 10.0 * c.tolerances.mu}};
  return {s, 0};
}

Outcome run_deform(const ExperimentConfig& c, const ConeDivisor& d, const fs::path& dir,
                   std::vector<std::string>& files) {
  if (c.grid.dimension != 2) throw DomainError("deform runs on the 2D grid");
  FamilyOptions opts;
  opts.n_phi = c.grid.resolution;
  const DeformationFamily fam = build_family(d, c.t_list.empty() ? default_t_list() : c.t_list, opts);
  const double q_max = lq_exponent_limit(fam);
  const LqReport lq = lq_curvature_report(fam, c.q);
  const PartitionTable table = mu_comparison(d);
  const MuConvergence mc = mu_convergence_report(fam, table);
  const LimitFunctionals constant = limit_functional_check(fam, GridField(fam.limit.disc().size(), 1.0));
  const EntropyResult best = minimize_mu(fam.limit);
  const LimitFunctionals minimizer = limit_functional_check(fam, best.phi);

  std::string csv = "t,raw_area,area,regular,hessian_constant,lq_norm,mu,pullback_mu,transported,"
                    "dirichlet\n";
  bool regular = true, area_two = true, mass_one = true;
  for (std::size_t n = 0; n < fam.members.size(); ++n) {
    const FamilyMember& m = fam.members[n];
    const double area = m.metric.area();
    regular = regular && m.regular;
    area_two = area_two && std::abs(area - 2.0) < 1e-3;
    mass_one = mass_one && std::abs(constant.mass[n] - 1.0) < 1e-12;
    csv += fmt(m.t) + "," + fmt(m.raw_area) + "," + fmt(area) + "," + (m.regular ? "1" : "0") + "," +
           fmt(m.hessian_constant) + "," + fmt(lq.norms[n]) + "," + fmt(mc.mu[n]) + "," + fmt(mc.pullback_mu[n]) +
           "," + fmt(mc.transported[n]) + "," + fmt(minimizer.dirichlet[n]) + "\n";
  }
  write_text(dir / "family.csv", csv, files);
  json s{{"status", "CONVERGED"},
         {"beta_k", fam.beta_k},
         {"beta_k_prime", fam.beta_k_prime},
         {"a0", fam.a0},
         {"pole_decay_exponent", fam.pole_fit.exponent},
         {"q", c.q},
         {"q_limit", q_max},
         {"lq_limit_norm", lq.limit_norm},
         {"lq_sup", lq.sup},
         {"mu_limit", mc.mu_limit},
         {"mu1", mc.mu1},
         {"mu2", mc.mu2},
         {"mu_smallest_t", mc.mu.back()},
         {"limit_dirichlet", minimizer.limit_dirichlet}};
  s["checks"] = json{{"a_regular_area_two", regular && area_two},
                     {"b_lq_bounded_converging", c.q > 1.0 && c.q < q_max && lq.uniformly_bounded && lq.converging},
                     {"c_mu_converges_above_mu2", mc.smallest_close && mc.tail_above_mu2},
                     {"d_limit_functionals",
                      mass_one && constant.converges && minimizer.converges && minimizer.dirichlet_lower_semicontinuous},
                     {"e_upper_semicontinuous", mc.upper_semicontinuous},
                     {"pullback_invariant",
                      [&] {
                        for (std::size_t n = 0; n < mc.mu.size(); ++n)
                          if (std::abs(mc.mu[n] - mc.pullback_mu[n]) > 1e-8) return false;
                        return true;
                      }()},
                     {"transport_consistent", mc.no_contradiction}};
  return {s, 0};
}

Outcome run_compare(const ExperimentConfig& c, const ConeDivisor& d, const fs::path& dir,
                    std::vector<std::string>& files) {
  if (c.grid.dimension != 1 || d.size() != 2) throw DomainError("compare needs two cone points on the 1D grid");
  const ConicMetric ref = reference_for(c, d);
  const SolitonProfile p = solve_soliton(std::max(d.weight(0), d.weight(1)), std::min(d.weight(0), d.weight(1)),
                                         c.tolerances.soliton);
  const ConformalSoliton target = to_conformal(p, ref.reference_ptr());
  const FlowTrace trace = run_flow(ref.with_potential(perturbed_start(c, ref)).normalized(), flow_config(c));
  const ConicMetric& m = trace.final_state.metric;
  const auto s_flow = meridian_samples(m, 8), s_lim = meridian_samples(target.metric, 8);
  const DistanceMatrix d_flow = distance_matrix(m, s_flow), d_lim = distance_matrix(target.metric, s_lim);
  write_text(dir / "distances_flow.csv", d_flow.to_csv(), files);
  write_text(dir / "distances_limit.csv", d_lim.to_csv(), files);
  write_text(dir / "trace.csv", trace.to_csv(), files);
  const double gh = gh_distortion(d_flow, d_lim);
  // circumference radius against the shooting profile, both by arc length from the north pole
  const GridField& w = m.reference().log_density();
  const GridField& u = m.potential();
  const std::vector<double> arc = meridian_arc_length(m);
  const double total = arc.back() + 2.0 * std::exp(0.5 * (w.back() + u.back())) / m.reference().density().alpha_high();
  double profile = 0.0;
  for (int i = 0; i < m.disc().n_s(); ++i) {
    const double from_north = total - arc[i];
    const auto it = std::lower_bound(p.s.begin(), p.s.end(), from_north);
    if (it == p.s.begin() || it == p.s.end()) continue;
    const std::size_t k = static_cast<std::size_t>(it - p.s.begin());
    const double f = (from_north - p.s[k - 1]) / (p.s[k] - p.s[k - 1]);
    const double r_sol = p.r[k - 1] + f * (p.r[k] - p.r[k - 1]);
    profile = std::max(profile, std::abs(std::exp(0.5 * (w[i] + u[i])) - r_sol));
  }
  json s{{"status", trace.status()},
         {"class", to_string(classify_divisor(d).stability)},
         {"final_time", trace.final_state.t},
         {"gh_distortion", gh},
         {"profile_sup_difference", profile},
         {"length", total},
         {"soliton_length", p.length},
         {"mu_nondecreasing", mu_nondecreasing(trace)},
         {"final_sup_R_dev", trace.records.back().sup_r_dev}};
  s["checks"] = json{{"converged", trace.converged},
                     {"gh_below_1e-2", gh < 1e-2},
                     {"profile_below_1e-3", profile < 1e-3},
                     {"mu_nondecreasing", mu_nondecreasing(trace)}};
  return {s, trace.converged ? 0 : 2};
}

}  // namespace

std::string to_string(ExperimentKind kind) { return kind_names().at(kind); }

ExperimentKind experiment_kind_from_string(const std::string& text) {
  for (const auto& [kind, name] : kind_names())
    if (name == text) return kind;
  throw ConfigError("unknown experiment kind '" + text + "'");
}

ConeDivisor divisor_from_spec(const std::vector<PointSpec>& points) {
  std::vector<ConeEntry> entries;
  for (const PointSpec& p : points)
    entries.push_back({p.at_infinity ? ConePoint::infinity() : ConePoint::finite({p.re, p.im}), ExactWeight::parse(p.weight)});
  return ConeDivisor::make(std::move(entries));
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, column] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column) + ": malformed JSON");
  }
  if (!root.is_object()) throw ConfigError("line 1: the config must be a JSON object");
  allow_only(root, "", {"kind", "divisor", "grid", "tolerances", "flow", "deform", "out", "seed"});

  ExperimentConfig c;
  if (!root.contains("kind") || !root["kind"].is_string()) field_error("kind", "required string");
  try {
    c.kind = experiment_kind_from_string(root["kind"].get<std::string>());
  } catch (const ConfigError& e) {
    field_error("kind", e.what());
  }

  if (root.contains("divisor")) {
    const json& list = root["divisor"];
    if (!list.is_array()) field_error("divisor", "expected an array");
    for (std::size_t k = 0; k < list.size(); ++k) {
      const std::string where = "divisor[" + std::to_string(k) + "]";
      const json& e = list[k];
      if (!e.is_object()) field_error(where, "expected an object");
      allow_only(e, where, {"point", "weight"});
      PointSpec p;
      if (!e.contains("point")) field_error(where + ".point", "required");
      const json& pt = e["point"];
      if (pt.is_string() && pt.get<std::string>() == "inf") {
        p.at_infinity = true;
      } else if (pt.is_array() && pt.size() == 2 && pt[0].is_number() && pt[1].is_number()) {
        p.re = pt[0].get<double>();
        p.im = pt[1].get<double>();
        if (!std::isfinite(p.re) || !std::isfinite(p.im)) field_error(where + ".point", "must be finite");
      } else {
        field_error(where + ".point", "expected [re, im] or \"inf\"");
      }
      if (!e.contains("weight") || !e["weight"].is_string())
        field_error(where + ".weight", "required decimal string, e.g. \"0.3\"");
      p.weight = e["weight"].get<std::string>();
      try {
        const ExactWeight w = ExactWeight::parse(p.weight);
        if (w.units() <= 0 || w.units() >= ExactWeight::kScale)
          field_error(where + ".weight", "weight " + p.weight + " must lie in the open interval (0,1)");
      } catch (const DomainError& err) {
        field_error(where + ".weight", err.what());
      }
      c.divisor.push_back(p);
    }
    try {
      divisor_from_spec(c.divisor);
    } catch (const DomainError& err) {
      field_error("divisor", err.what());
    }
  }

  if (root.contains("grid")) {
    const json& g = root["grid"];
    if (!g.is_object()) field_error("grid", "expected an object");
    allow_only(g, "grid", {"dimension", "resolution", "extent"});
    c.grid.dimension = int_at(g, "dimension", "grid.", 1);
    if (c.grid.dimension != 1 && c.grid.dimension != 2) field_error("grid.dimension", "must be 1 or 2");
    c.grid.resolution = int_at(g, "resolution", "grid.", c.grid.dimension == 1 ? 2048 : 128);
    c.grid.extent = positive_at(g, "extent", "grid.", c.grid.extent);
  }
  const int min_res = c.grid.dimension == 1 ? 64 : 16;
  if (c.grid.resolution < min_res) field_error("grid.resolution", "must be at least " + std::to_string(min_res));
  if (c.grid.dimension == 2 && c.grid.resolution % 4 != 0) field_error("grid.resolution", "must be a multiple of 4 in 2D");

  if (root.contains("tolerances")) {
    const json& t = root["tolerances"];
    if (!t.is_object()) field_error("tolerances", "expected an object");
    allow_only(t, "tolerances", {"mu", "soliton", "flow"});
    c.tolerances.mu = positive_at(t, "mu", "tolerances.", c.tolerances.mu);
    c.tolerances.soliton = positive_at(t, "soliton", "tolerances.", c.tolerances.soliton);
    c.tolerances.flow = positive_at(t, "flow", "tolerances.", c.tolerances.flow);
  }

  if (root.contains("flow")) {
    const json& f = root["flow"];
    if (!f.is_object()) field_error("flow", "expected an object");
    allow_only(f, "flow", {"max_time", "observe_every", "dilation_gauge", "perturbation"});
    c.max_time = positive_at(f, "max_time", "flow.", c.max_time);
    c.observe_every = positive_at(f, "observe_every", "flow.", c.observe_every);
    if (f.contains("dilation_gauge")) {
      if (!f["dilation_gauge"].is_boolean()) field_error("flow.dilation_gauge", "expected true or false");
      c.dilation_gauge = f["dilation_gauge"].get<bool>();
    }
    c.perturbation = number_at(f, "perturbation", "flow.", 0.0);
    if (c.perturbation != 0.0 && c.grid.dimension != 1)
      field_error("flow.perturbation", "only supported on the 1D grid (2D starts must stay regular at the cones)");
  }

  if (root.contains("deform")) {
    const json& d = root["deform"];
    if (!d.is_object()) field_error("deform", "expected an object");
    allow_only(d, "deform", {"t", "q"});
    if (d.contains("t")) {
      if (!d["t"].is_array()) field_error("deform.t", "expected an array of numbers");
      for (const json& v : d["t"]) {
        if (!v.is_number()) field_error("deform.t", "expected an array of numbers");
        const double t = v.get<double>();
        if (!(t > 0.0 && t <= 1.0)) field_error("deform.t", "values must lie in (0, 1]");
        if (!c.t_list.empty() && !(t < c.t_list.back())) field_error("deform.t", "values must decrease");
        c.t_list.push_back(t);
      }
    }
    c.q = number_at(d, "q", "deform.", c.q);
    if (!(c.q > 1.0)) field_error("deform.q", "must exceed 1");
  }

  if (root.contains("out")) {
    if (!root["out"].is_string()) field_error("out", "expected a string");
    c.out_dir = root["out"].get<std::string>();
  }
  if (root.contains("seed")) {
    if (!root["seed"].is_number_unsigned()) field_error("seed", "expected a non-negative integer");
    c.seed = root["seed"].get<std::uint64_t>();
  }

  const std::size_t points = c.divisor.size();
  switch (c.kind) {
    case ExperimentKind::Classify:
    case ExperimentKind::Partitions:
      if (points == 0) field_error("divisor", "required for " + to_string(c.kind));
      break;
    case ExperimentKind::Deform:
      if (points < 2) field_error("divisor", "deform needs at least two cone points");
      if (c.grid.dimension != 2) field_error("grid.dimension", "deform runs on the 2D grid");
      break;
    case ExperimentKind::Soliton:
      if (points > 2) field_error("divisor", "a soliton takes at most two cone points");
      break;
    case ExperimentKind::Compare:
      if (points != 2) field_error("divisor", "compare needs exactly two cone points");
      if (c.grid.dimension != 1) field_error("grid.dimension", "compare runs on the 1D grid");
      break;
    case ExperimentKind::Flow:
    case ExperimentKind::Mu:
      if (c.grid.dimension == 1 && points > 2) field_error("divisor", "the 1D grid holds at most two cone points");
      break;
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string serialize_config(const ExperimentConfig& c) {
  json root;
  root["kind"] = to_string(c.kind);
  json divisor = json::array();
  for (const PointSpec& p : c.divisor) divisor.push_back(point_json(p));
  root["divisor"] = divisor;
  root["grid"] = json{{"dimension", c.grid.dimension}, {"resolution", c.grid.resolution}, {"extent", c.grid.extent}};
  root["tolerances"] = json{{"mu", c.tolerances.mu}, {"soliton", c.tolerances.soliton}, {"flow", c.tolerances.flow}};
  root["flow"] = json{{"max_time", c.max_time},
                      {"observe_every", c.observe_every},
                      {"dilation_gauge", c.dilation_gauge},
                      {"perturbation", c.perturbation}};
  root["deform"] = json{{"t", c.t_list}, {"q", c.q}};
  if (!c.out_dir.empty()) root["out"] = c.out_dir;
  root["seed"] = c.seed;
  return root.dump(2) + "\n";
}

RunResult run_config(const ExperimentConfig& config) {
  RunResult result;
  if (config.out_dir.empty()) {
    result.message = "no output directory given";
    result.status = "ERROR";
    return result;
  }
  const fs::path dir(config.out_dir);
  try {
    fs::create_directories(dir);
    ExperimentConfig stored = config;
    stored.out_dir.clear();
    write_text(dir / "config.json", serialize_config(stored), result.files);
  } catch (const std::exception& e) {
    result.message = e.what();
    result.status = "ERROR";
    return result;
  }
  const auto started = std::chrono::steady_clock::now();
  Outcome outcome;
  try {
    const ConeDivisor d = divisor_from_spec(config.divisor);
    switch (config.kind) {
      case ExperimentKind::Classify: outcome = run_classify(config, d, dir, result.files); break;
      case ExperimentKind::Flow: outcome = run_flow_kind(config, d, dir, result.files); break;
      case ExperimentKind::Mu: outcome = run_mu(config, d, dir, result.files); break;
      case ExperimentKind::Soliton: outcome = run_soliton(config, d, dir, result.files); break;
      case ExperimentKind::Partitions: outcome = run_partitions(config, d, dir, result.files); break;
      case ExperimentKind::Deform: outcome = run_deform(config, d, dir, result.files); break;
      case ExperimentKind::Compare: outcome = run_compare(config, d, dir, result.files); break;
    }
    if (!outcome.summary.contains("status")) outcome.summary["status"] = "OK";
  } catch (const ConvergenceError& e) {
    outcome = {json{{"status", "NOT_CONVERGED"}, {"error", e.what()}, {"checks", json::object()}}, 2};
  } catch (const std::exception& e) {
    outcome = {json{{"status", "ERROR"}, {"error", e.what()}, {"checks", json::object()}}, 1};
  }
  outcome.summary["kind"] = to_string(config.kind);
  outcome.summary["seed"] = config.seed;
  outcome.summary["exit_code"] = outcome.exit_code;
  try {
    write_json(dir / "summary.json", outcome.summary, result.files);
    // wall time lives apart from the summary so that reruns stay byte-identical
    const std::chrono::duration<double> wall = std::chrono::steady_clock::now() - started;
    write_json(dir / "timing.json", json{{"wall_seconds", wall.count()}}, result.files);
  } catch (const std::exception& e) {
    result.message = e.what();
    result.status = "ERROR";
    result.exit_code = 1;
    return result;
  }
  result.exit_code = outcome.exit_code;
  result.status = outcome.summary["status"].get<std::string>();
  if (outcome.summary.contains("error")) result.message = outcome.summary["error"].get<std::string>();
  return result;
}

ReportResult emit_report(const std::string& dir, const std::string& report_path) {
  ReportResult out;
  const fs::path root(dir);
  if (!fs::is_directory(root)) {
    out.message = "'" + dir + "' is not a directory";
    return out;
  }
  std::vector<fs::path> summaries, configs;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    if (entry.path().filename() == "summary.json") summaries.push_back(entry.path());
    if (entry.path().filename() == "config.json") configs.push_back(entry.path());
  }
  std::sort(summaries.begin(), summaries.end());
  std::sort(configs.begin(), configs.end());
  for (const fs::path& c : configs)
    if (!fs::exists(c.parent_path() / "summary.json"))
      out.missing.push_back(fs::relative(c.parent_path(), root).generic_string() + "/summary.json");

  json runs = json::array();
  for (const fs::path& path : summaries) {
    json entry{{"path", fs::relative(path.parent_path(), root).generic_string()}};
    std::ifstream in(path, std::ios::binary);
    json s;
    try {
      s = json::parse(in);
    } catch (const json::exception&) {
      out.missing.push_back(fs::relative(path, root).generic_string() + " (unreadable)");
      continue;
    }
    for (const char* key : {"kind", "status", "exit_code", "criterion"})
      if (s.contains(key)) entry[key] = s[key];
    json checks = json::object();
    if (s.contains("checks") && s["checks"].is_object())
      for (const auto& [name, value] : s["checks"].items()) {
        const bool pass = value.is_boolean() && value.get<bool>();
        checks[name] = pass ? "PASS" : "FAIL";
        (pass ? out.passed_checks : out.failed_checks)++;
      }
    entry["checks"] = checks;
    runs.push_back(entry);
    ++out.runs;
  }
  if (out.runs == 0 && out.missing.empty()) {
    out.message = "no run artifacts found under '" + dir + "'";
    return out;
  }
  json report{{"runs", runs},
              {"missing", out.missing},
              {"totals", json{{"runs", out.runs}, {"passed_checks", out.passed_checks}, {"failed_checks", out.failed_checks}}}};
  try {
    std::vector<std::string> files;
    write_json(fs::path(report_path), report, files);
  } catch (const std::exception& e) {
    out.message = e.what();
    return out;
  }
  out.exit_code = out.runs == 0 ? 1 : 0;
  if (!out.missing.empty()) out.message = std::to_string(out.missing.size()) + " artifact(s) missing";
  return out;
}

}  // namespace conic_ricci
