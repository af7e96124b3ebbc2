// Acceptance suite: one PASS/FAIL line per criterion, artifacts under --out.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "conic_ricci/deformation.hpp"
#include "conic_ricci/distance.hpp"
#include "conic_ricci/entropy.hpp"
#include "conic_ricci/experiment.hpp"
#include "conic_ricci/flow.hpp"
#include "conic_ricci/metric.hpp"
#include "conic_ricci/soliton.hpp"
#include "conic_ricci/stability.hpp"

using namespace conic_ricci;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = std::numbers::pi;
const double kRoundMu = std::log(2.0) - 0.5;

struct Verdict {
  json checks = json::object();
  json values = json::object();
  std::vector<std::string> notes;

  void check(const std::string& name, bool pass) { checks[name] = pass; }
  bool pass() const {
    for (const auto& [k, v] : checks.items())
      if (!v.get<bool>()) return false;
    return !checks.empty();
  }
  std::string failed() const {
    std::string out;
    for (const auto& [k, v] : checks.items())
      if (!v.get<bool>()) out += (out.empty() ? "" : ", ") + k;
    return out;
  }
};

ConeDivisor three_points() {
  return ConeDivisor::from_weights(
      {{ConePoint::finite({1.0, 0.0}), 0.2}, {ConePoint::finite({0.0, 1.0}), 0.3}, {ConePoint::infinity(), 0.6}});
}

ConeDivisor pole_pair(double south, double north) {
  return ConeDivisor::from_weights({{ConePoint::finite(0.0), south}, {ConePoint::infinity(), north}});
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

double sup_diff(const GridField& a, const GridField& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

bool mu_nondecreasing(const FlowTrace& trace) {
  for (std::size_t k = 1; k < trace.records.size(); ++k) {
    const FlowRecord &a = trace.records[k - 1], &b = trace.records[k];
    if (b.mu < a.mu - 1e-6 * (b.t - a.t)) return false;
  }
  return true;
}

// Experiment configs of the suite, run through the same path as the command line.
std::vector<std::pair<std::string, std::string>> suite_configs() {
  const std::string three = R"([{"point": [1, 0], "weight": "0.2"}, {"point": [0, 1], "weight": "0.3"},
                               {"point": "inf", "weight": "0.6"}])";
  std::vector<std::pair<std::string, std::string>> out;
  out.push_back({"classify_unstable", R"({"kind": "classify", "divisor": )" + three + "}"});
  out.push_back({"mu_round", R"({"kind": "mu", "divisor": [], "grid": {"dimension": 1, "resolution": 2048}})"});
  out.push_back({"soliton_06_03", R"({"kind": "soliton", "divisor": [{"point": [0, 0], "weight": "0.3"},
                  {"point": "inf", "weight": "0.6"}], "tolerances": {"soliton": 1e-10}})"});
  out.push_back({"flow_semistable", R"({"kind": "flow", "divisor": [{"point": [0, 0], "weight": "0.4"},
                  {"point": "inf", "weight": "0.4"}], "grid": {"dimension": 1, "resolution": 2048},
                  "flow": {"perturbation": 0.5}})"});
  for (int seed : {1, 2, 3})
    out.push_back({"compare_unstable_seed" + std::to_string(seed),
                   R"({"kind": "compare", "divisor": [{"point": [0, 0], "weight": "0.2"}, {"point": "inf", "weight": "0.6"}],
                       "grid": {"dimension": 1, "resolution": 2048}, "flow": {"perturbation": 0.6, "observe_every": 2},
                       "seed": )" + std::to_string(seed) + "}"});
  out.push_back({"partitions_unstable", R"({"kind": "partitions", "divisor": )" + three +
                                            R"(, "grid": {"dimension": 1, "resolution": 4096}})"});
  out.push_back({"deform_unstable", R"({"kind": "deform", "divisor": )" + three +
                                        R"(, "grid": {"dimension": 2, "resolution": 128}, "deform": {"q": 1.2}})"});
  return out;
}

json run_suite_config(const fs::path& runs, const std::string& name) {
  for (const auto& [n, text] : suite_configs())
    if (n == name) {
      ExperimentConfig c = parse_config(text);
      c.out_dir = (runs / name).string();
      const RunResult r = run_config(c);
      json s = read_json(runs / name / "summary.json");
      s["__exit"] = r.exit_code;
      return s;
    }
  throw Error("unknown suite config " + name);
}

// ---------------------------------------------------------------------------

Verdict criterion1() {
  Verdict v;
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> coef(-0.5, 0.5);
  // Below this the defect is summation roundoff and halving the spacing cannot shrink it.
  const double floor = 1e-10;
  auto converges = [&](double coarse, double fine) {
    return std::abs(fine) < floor || std::abs(fine) <= 0.5 * std::abs(coarse);
  };
  // 1D
  {
    std::vector<std::array<double, 3>> coeffs(5);
    for (auto& c : coeffs) c = {coef(rng), coef(rng), coef(rng)};
    auto family = [&](int n) {
      std::vector<std::pair<std::string, ConicMetric>> out;
      const ConicMetric round = build_reference_metric(ConeDivisor{}, {}, default_symmetric_grid(n, 2.0, 2.0));
      out.push_back({"round", round});
      out.push_back({"football_0.5", football_metric(0.5, default_symmetric_grid(n, 1.0, 1.0))});
      out.push_back({"reference_0.5_0.6", build_reference_metric(pole_pair(0.5, 0.6), {}, default_symmetric_grid(n, 1.0, 0.8))});
      for (std::size_t t = 0; t < coeffs.size(); ++t) {
        const Discretization& disc = round.disc();
        GridField u(disc.size());
        for (int i = 0; i < disc.n_s(); ++i) {
          const double x = std::tanh(disc.s(i));
          u[i] = coeffs[t][0] * x + coeffs[t][1] * (1.5 * x * x - 0.5) + coeffs[t][2] * x * x * x;
        }
        out.push_back({"random_" + std::to_string(t), round.with_potential(u)});
      }
      return out;
    };
    const auto fine = family(4096), coarse = family(2048);
    double worst = 0.0;
    bool halving = true;
    for (std::size_t k = 0; k < fine.size(); ++k) {
      const double df = area_and_gauss_bonnet(fine[k].second).defect;
      const double dc = area_and_gauss_bonnet(coarse[k].second).defect;
      v.values["defect_1d_" + fine[k].first] = df;
      worst = std::max(worst, std::abs(df));
      halving = halving && converges(dc, df);
    }
    v.values["worst_defect_1d"] = worst;
    v.check("defect_1d_below_1e-6", worst < 1e-6);
    v.check("halving_1d", halving);
  }
  // 2D
  {
    struct Bump {
      double a, s0, m, phase;
    };
    std::vector<std::array<Bump, 3>> coeffs(5);
    std::uniform_real_distribution<double> centre(-2.0, 2.0), phase(0.0, 2.0 * kPi);
    for (auto& c : coeffs)
      for (auto& b : c) b = {coef(rng), centre(rng), std::floor(4.0 * (coef(rng) + 0.5)), phase(rng)};
    auto family = [&](int n) {
      const Discretization disc = Discretization::cylinder_log2_aligned(n, -14.0, 14.0);
      std::vector<std::pair<std::string, ConicMetric>> out;
      out.push_back({"round", build_reference_metric(ConeDivisor{}, {}, disc)});
      out.push_back({"football_0.5", football_metric(0.5, disc)});
      const ConicMetric ref = build_reference_metric(three_points(), {}, disc);
      out.push_back({"reference_three_points", ref});
      for (std::size_t t = 0; t < coeffs.size(); ++t) {
        GridField u(disc.size());
        for (int i = 0; i < disc.n_s(); ++i)
          for (int j = 0; j < disc.n_phi(); ++j) {
            double val = 0.0;
            for (const Bump& b : coeffs[t])
              val += b.a * std::exp(-(disc.s(i) - b.s0) * (disc.s(i) - b.s0)) * std::cos(b.m * disc.phi(j) + b.phase);
            u[disc.index(i, j)] = val;
          }
        out.push_back({"random_" + std::to_string(t), ref.with_potential(u)});
      }
      return out;
    };
    std::vector<double> dc;
    for (const auto& [name, m] : family(256)) dc.push_back(area_and_gauss_bonnet(m).defect);
    double worst = 0.0;
    bool halving = true;
    std::size_t k = 0;
    for (const auto& [name, m] : family(512)) {
      const double df = area_and_gauss_bonnet(m).defect;
      v.values["defect_2d_" + name] = df;
      worst = std::max(worst, std::abs(df));
      halving = halving && converges(dc[k++], df);
    }
    v.values["worst_defect_2d"] = worst;
    v.check("defect_2d_below_1e-3", worst < 1e-3);
    v.check("halving_2d", halving);
  }
  return v;
}

Verdict criterion2() {
  Verdict v;
  const ConicMetric round =
      build_reference_metric(ConeDivisor{}, CutoffSpec{}, Discretization::symmetric(2048, -24.0, 24.0));
  const EntropyResult r = minimize_mu(round);
  const auto [lo, hi] = std::minmax_element(r.phi.begin(), r.phi.end());
  v.values["mu_round"] = r.mu;
  v.values["residual"] = r.residual;
  v.values["minimizer_spread"] = *hi - *lo;
  v.check("mu_round_within_1e-4", std::abs(r.mu - kRoundMu) < 1e-4);
  v.check("euler_lagrange_below_1e-8", r.residual < 1e-8);
  v.check("minimizer_constant", *hi - *lo < 1e-6);

  const Discretization cyl = Discretization::cylinder_log2_aligned(128, -14.0, 14.0);
  const auto pole_ref = smooth_pole_reference(0.2, 0.6, 2048);
  GridField tilt(pole_ref->disc().size());
  for (int i = 0; i < pole_ref->disc().n_s(); ++i) tilt[i] = 0.5 * std::tanh(pole_ref->disc().s(i));
  const std::vector<std::pair<std::string, ConicMetric>> metrics = {
      {"round", round},
      {"stable_0.3_0.4_0.5",
       build_reference_metric(ConeDivisor::from_weights({{ConePoint::finite(0.0), 0.3},
                                                         {ConePoint::finite(1.0), 0.4},
                                                         {ConePoint::infinity(), 0.5}}),
                              {}, cyl)},
      {"semistable_football_0.4", football_metric(0.4, Discretization::symmetric(4096, -40.0, 40.0))},
      {"semistable_0.4_0.4_2d", build_reference_metric(pole_pair(0.4, 0.4), {}, cyl)},
      {"unstable_three_points", build_reference_metric(three_points(), {}, cyl)},
      {"unstable_0.2_0.6_tilted", ConicMetric(pole_ref, tilt).normalized()}};
  double worst = 0.0;
  for (const auto& [name, m] : metrics) {
    const double w = w_functional(m, GridField(m.disc().size(), 1.0 / std::sqrt(m.area())));
    v.values["w_constant_" + name] = w;
    worst = std::max(worst, std::abs(w - kRoundMu));
  }
  v.check("w_constant_within_1e-8", worst < 1e-8);
  return v;
}

Verdict criterion3(const fs::path& runs) {
  Verdict v;
  auto spread = [](const SolitonProfile& p) {
    const auto [lo, hi] = std::minmax_element(p.theta.begin(), p.theta.end());
    return *hi - *lo;
  };
  const SolitonProfile round = solve_soliton(0.0, 0.0);
  const double rho = 1.0 / std::sqrt(2.0 * kPi);
  double worst = 0.0;
  for (std::size_t i = 0; i < round.s.size(); ++i)
    worst = std::max(worst, std::abs(round.r[i] - rho * std::sin(round.s[i] / rho)));
  v.values["round_theta_spread"] = spread(round);
  v.values["round_profile_error"] = worst;
  v.check("round_theta_zero", spread(round) < 1e-8);
  v.check("round_closed_form", worst < 1e-8 && std::abs(round.length - kPi * rho) < 1e-8);

  const SolitonProfile ball = solve_soliton(0.5, 0.5);
  const double rho_f = 1.0 / std::sqrt(2.0 * kPi * 0.5);
  worst = 0.0;
  for (std::size_t i = 0; i < ball.s.size(); ++i)
    worst = std::max(worst, std::abs(ball.r[i] - 0.5 * rho_f * std::sin(ball.s[i] / rho_f)));
  v.values["football_theta_spread"] = spread(ball);
  v.values["football_profile_error"] = worst;
  v.check("football_theta_zero", spread(ball) < 1e-8);
  v.check("football_closed_form", worst < 1e-8);

  const json s = run_suite_config(runs, "soliton_06_03");
  v.values["hessian_residual"] = s["hessian_residual"];
  v.values["curvature_residual"] = s["curvature_residual"];
  v.check("soliton_run_ok", s["__exit"] == 0);
  v.check("profile_residuals_below_1e-6", s["checks"]["residuals_below_1e-6"].get<bool>());

  const SolitonProfile p = solve_soliton(0.6, 0.3);
  const Discretization disc = default_symmetric_grid(4096, 1.4, 0.8);
  const ConformalSoliton c = to_conformal(p, disc);
  const double interior = soliton_residual(c.metric, c.theta);
  const DecayFit fit = decay_exponent_fit(disc, c.metric.potential(), Pole::South);
  v.values["conformal_residual"] = interior;
  v.values["decay_exponent"] = fit.exponent;
  v.check("interior_residual_below_1e-6", interior < 1e-6);
  v.check("decay_exponent_within_5pct", fit.signal && std::abs(fit.exponent - 1.4) < 0.05 * 1.4);
  return v;
}

Verdict criterion4() {
  Verdict v;
  auto drift = [](const ConicMetric& m) {
    FlowState s;
    s.metric = m;
    for (int k = 0; k < 10; ++k) s = flow_step(s, 0.1);
    return sup_diff(s.metric.potential(), m.potential()) / s.t;
  };
  const std::vector<std::pair<std::string, ConicMetric>> fixed = {
      {"football_0.5_1d", football_metric(0.5, Discretization::symmetric(4096, -40.0, 40.0))},
      {"football_0.4_2d", football_metric(0.4, Discretization::cylinder_log2_aligned(128, -14.0, 14.0))},
      {"round_2d", build_reference_metric(ConeDivisor{}, {}, Discretization::cylinder_log2_aligned(128, -10.0, 10.0))}};
  double worst = 0.0;
  for (const auto& [name, m] : fixed) {
    const double d = drift(m);
    v.values["drift_" + name] = d;
    worst = std::max(worst, d);
  }
  v.check("fixed_points_below_1e-10", worst < 1e-10);

  // mu along the test flows
  bool monotone = true;
  {
    const ConicMetric m = build_reference_metric(
        ConeDivisor::from_weights(
            {{ConePoint::finite(0.0), 0.3}, {ConePoint::finite(1.0), 0.4}, {ConePoint::infinity(), 0.5}}),
        {}, Discretization::cylinder_log2_aligned(128, -14.0, 14.0));
    FlowConfig cfg;
    cfg.stop_threshold = 1e-4;
    cfg.observe_every = 4.0;
    const FlowTrace t = run_flow(m, cfg);
    v.values["stable_2d_records"] = t.records.size();
    v.values["stable_2d_final_sup_R_dev"] = t.records.back().sup_r_dev;
    v.check("stable_2d_mu_nondecreasing", mu_nondecreasing(t));
    monotone = monotone && mu_nondecreasing(t);
  }
  for (auto [south, north] : {std::pair{0.4, 0.4}, std::pair{0.2, 0.6}, std::pair{0.3, 0.6}}) {
    const auto ref = smooth_pole_reference(south, north, 2048);
    GridField u(ref->disc().size());
    for (int i = 0; i < ref->disc().n_s(); ++i) {
      const double s = ref->disc().s(i);
      u[i] = 0.5 * std::tanh(s / 2) + 0.25 * std::exp(-s * s / 4);
    }
    FlowConfig cfg;
    cfg.dilation_gauge = true;
    cfg.observe_every = 1.0;
    const FlowTrace t = run_flow(ConicMetric(ref, u), cfg);
    const std::string name = "poles_" + std::to_string(south).substr(0, 3) + "_" + std::to_string(north).substr(0, 3);
    v.check(name + "_mu_nondecreasing", mu_nondecreasing(t));
    monotone = monotone && mu_nondecreasing(t);
  }
  {
    // unstable three points on the cylinder, first stretch of the flow
    const ConicMetric m = build_reference_metric(three_points(), {}, Discretization::cylinder_log2_aligned(128, -14.0, 14.0));
    FlowConfig cfg;
    cfg.observe_every = 1.0;
    cfg.max_time = 10.0;
    const FlowTrace t = run_flow(m, cfg);
    v.check("unstable_2d_mu_nondecreasing", mu_nondecreasing(t));
    monotone = monotone && mu_nondecreasing(t);
  }
  v.values["all_flows_monotone"] = monotone;
  return v;
}

Verdict criterion5(const fs::path& runs) {
  Verdict v;
  const json semi = run_suite_config(runs, "flow_semistable");
  v.values["semistable_sup_R_dev"] = semi["final_sup_R_dev"];
  v.check("semistable_converged", semi["status"] == "CONVERGED");
  v.check("semistable_sup_R_below_1e-4", semi["final_sup_R_dev"].get<double>() < 1e-4);
  for (int seed : {1, 2, 3}) {
    const std::string name = "compare_unstable_seed" + std::to_string(seed);
    const json s = run_suite_config(runs, name);
    v.values[name + "_gh"] = s.value("gh_distortion", json());
    v.values[name + "_profile"] = s.value("profile_sup_difference", json());
    v.check(name + "_converged", s["status"] == "CONVERGED");
    v.check(name + "_gh_below_1e-2", s["checks"].value("gh_below_1e-2", false));
    v.check(name + "_profile_below_1e-3", s["checks"].value("profile_below_1e-3", false));
  }
  // the three starts differ
  std::set<std::string> traces;
  for (int seed : {1, 2, 3}) {
    const std::string csv = slurp(runs / ("compare_unstable_seed" + std::to_string(seed)) / "trace.csv");
    traces.insert(csv.substr(0, csv.find('\n', csv.find('\n') + 1)));
  }
  v.check("starts_distinct", traces.size() == 3);
  return v;
}

Verdict criterion6(double max_time) {
  Verdict v;
  const ConicMetric start =
      build_reference_metric(three_points(), {}, Discretization::cylinder_log2_aligned(256, -14.0, 14.0));
  FlowConfig cfg;
  cfg.max_time = max_time;
  cfg.observe_every = 2.0;
  const FlowTrace t = run_flow(start, cfg);
  const auto it = std::find(t.distance_labels.begin(), t.distance_labels.end(), "d_p1_p2");
  if (it == t.distance_labels.end()) {
    v.check("finite_pair_tracked", false);
    return v;
  }
  const std::size_t idx = static_cast<std::size_t>(it - t.distance_labels.begin());
  const double d0 = t.records.front().distances[idx];
  double d_min = d0;
  for (const FlowRecord& r : t.records) d_min = std::min(d_min, r.distances[idx]);
  const PartitionTable table = mu_comparison(three_points());
  const double mu_end = t.records.back().mu;
  v.values["grid_nodes"] = start.disc().size();
  v.values["final_time"] = t.final_state.t;
  v.values["d_initial"] = d0;
  v.values["d_final"] = t.records.back().distances[idx];
  v.values["d_ratio"] = d_min / d0;
  v.values["mu_initial"] = t.records.front().mu;
  v.values["mu_final"] = mu_end;
  v.values["mu_limit"] = table.mu1;
  v.values["mu_relative_gap"] = std::abs(mu_end - table.mu1) / std::abs(table.mu1);
  json series = json::array();
  for (const FlowRecord& r : t.records) series.push_back(json{{"t", r.t}, {"mu", r.mu}, {"d12", r.distances[idx]}});
  v.values["series"] = series;
  v.check("distance_below_0.2_initial", d_min < 0.2 * d0);
  v.check("mu_within_5pct_of_limit", std::abs(mu_end - table.mu1) < 0.05 * std::abs(table.mu1));
  v.check("mu_nondecreasing", mu_nondecreasing(t));
  return v;
}

Verdict criterion7(const fs::path& runs) {
  Verdict v;
  const json s = run_suite_config(runs, "partitions_unstable");
  v.values["mu1"] = s["mu1"];
  v.values["mu2"] = s["mu2"];
  v.check("largest_alone_wins", s["checks"]["largest_alone_wins"].get<bool>());
  v.check("gap_exceeds_10x_tolerance", s["checks"]["gap_exceeds_10x_tolerance"].get<bool>());
  return v;
}

Verdict criterion8(const fs::path& runs) {
  Verdict v;
  const json s = run_suite_config(runs, "deform_unstable");
  for (const char* key : {"mu_limit", "mu_smallest_t", "mu1", "mu2", "lq_sup", "lq_limit_norm", "q", "q_limit"})
    v.values[key] = s.value(key, json());
  if (!s.contains("checks") || s["checks"].empty()) {
    v.check("deform_run", false);
    v.notes.push_back(s.value("error", std::string("no checks")));
    return v;
  }
  for (const auto& [name, value] : s["checks"].items()) v.check(name, value.get<bool>());
  return v;
}

Verdict criterion9(const fs::path& out) {
  Verdict v;
  const fs::path first = out / "runs", second = out / "rerun";
  fs::remove_all(second);
  std::size_t compared = 0, differing = 0;
  for (const auto& [name, text] : suite_configs()) {
    if (!fs::exists(first / name)) continue;
    ExperimentConfig c = parse_config(text);
    c.out_dir = (second / name).string();
    run_config(c);
    for (const auto& entry : fs::directory_iterator(first / name)) {
      if (entry.path().filename() == "timing.json") continue;
      ++compared;
      const fs::path other = second / name / entry.path().filename();
      if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) {
        ++differing;
        v.notes.push_back("differs: " + name + "/" + entry.path().filename().string());
      }
    }
  }
  const ReportResult a = emit_report(first.string(), (out / "runs_report.json").string());
  const ReportResult b = emit_report(second.string(), (out / "rerun_report.json").string());
  v.values["files_compared"] = compared;
  v.values["files_differing"] = differing;
  v.check("artifacts_byte_identical", compared > 0 && differing == 0);
  v.check("reports_byte_identical", a.exit_code == 0 && b.exit_code == 0 &&
                                        slurp(out / "runs_report.json") == slurp(out / "rerun_report.json"));
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance suite"};
  std::string out_dir = "acceptance_out";
  std::vector<int> only;
  double flow_time = 32.0;
  app.add_option("--out", out_dir, "Artifact directory");
  app.add_option("--only", only, "Run only these criteria")->delimiter(',');
  app.add_option("--flow-time", flow_time, "Flow time for the 2D multi-point run")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const fs::path out(out_dir);
  fs::create_directories(out);
  const fs::path runs = out / "runs";
  const std::map<int, std::pair<std::string, std::function<Verdict()>>> criteria{
      {1, {"Gauss-Bonnet", [] { return criterion1(); }}},
      {2, {"entropy baseline", [] { return criterion2(); }}},
      {3, {"soliton solver", [&] { return criterion3(runs); }}},
      {4, {"flow fixed points and monotonicity", [] { return criterion4(); }}},
      {5, {"two-point trichotomy", [&] { return criterion5(runs); }}},
      {6, {"unstable multi-point 2D flow", [&] { return criterion6(flow_time); }}},
      {7, {"partition comparison", [&] { return criterion7(runs); }}},
      {8, {"deformation program", [&] { return criterion8(runs); }}},
      {9, {"determinism", [&] { return criterion9(out); }}}};

  bool all = true;
  for (const auto& [id, entry] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = entry.second();
    } catch (const std::exception& e) {
      v.check("completed", false);
      v.notes.push_back(e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = v.pass();
    all = all && pass;
    const fs::path dir = out / "criteria" / ("criterion_" + std::to_string(id));
    fs::create_directories(dir);
    json summary{{"kind", "acceptance"},
                 {"criterion", id},
                 {"title", entry.first},
                 {"status", pass ? "PASS" : "FAIL"},
                 {"checks", v.checks},
                 {"values", v.values},
                 {"notes", v.notes}};
    std::ofstream(dir / "summary.json", std::ios::binary) << summary.dump(2) << "\n";
    std::string detail = pass ? "" : " failed: " + v.failed();
    for (const std::string& n : v.notes) detail += " [" + n + "]";
    std::printf("CRITERION %d %s: %s (%.1f s)%s\n", id, entry.first.c_str(), pass ? "PASS" : "FAIL", secs,
                detail.c_str());
    std::fflush(stdout);
  }
  const ReportResult report = emit_report((out / "criteria").string(), (out / "report.json").string());
  if (report.exit_code != 0) std::printf("report: %s\n", report.message.c_str());
  return all ? 0 : 1;
}
