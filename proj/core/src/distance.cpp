#include "conic_ricci/distance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "conic_ricci/error.hpp"
#include "conic_ricci/parallel.hpp"

namespace conic_ricci {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr int kReplicatedColumns = 64;

struct Edge {
  std::size_t to;
  double length;
};

// Weighted graph over the (possibly coarsened) grid plus virtual nodes.
struct Graph {
  int rows = 0, cols = 0;
  std::vector<double> s;          // per row
  std::vector<double> half_log;   // per graph node: (w + u)/2, +inf on cone nodes
  std::vector<double> cone_beta;  // per graph node, 0 when regular
  std::vector<std::vector<Edge>> adj;
  std::size_t south = 0, north = 0;

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(i) * cols + j; }
  void link(std::size_t a, std::size_t b, double length) {
    adj[a].push_back({b, length});
    adj[b].push_back({a, length});
  }
};

double edge_length(const Graph& g, std::size_t a, std::size_t b, double ds, double dphi) {
  const double euclid = std::hypot(ds, dphi);
  const bool ca = std::isinf(g.half_log[a]), cb = std::isinf(g.half_log[b]);
  if (ca && cb) return kInf;
  if (ca) return std::exp(g.half_log[b]) * euclid / (1.0 - g.cone_beta[a]);
  if (cb) return std::exp(g.half_log[a]) * euclid / (1.0 - g.cone_beta[b]);
  return 0.5 * (std::exp(g.half_log[a]) + std::exp(g.half_log[b])) * euclid;
}

Graph build_graph(const ConicMetric& metric, std::vector<int>& row_of_graph_row) {
  const Discretization& disc = metric.disc();
  const ReferenceSampling& ref = metric.reference();
  const GridField& u = metric.potential();
  const GridField& w = ref.log_density();
  Graph g;
  const bool replicate = disc.kind() == GridKind::Symmetric1D;
  g.cols = replicate ? kReplicatedColumns : disc.n_phi();
  const double hphi = 2.0 * std::numbers::pi / g.cols;
  row_of_graph_row.clear();
  if (replicate) {
    const int stride = std::max(1, static_cast<int>(std::lround(hphi / disc.h_s())));
    for (int i = 0; i < disc.n_s(); i += stride) row_of_graph_row.push_back(i);
    if (row_of_graph_row.back() != disc.n_s() - 1) row_of_graph_row.push_back(disc.n_s() - 1);
  } else {
    for (int i = 0; i < disc.n_s(); ++i) row_of_graph_row.push_back(i);
  }
  g.rows = static_cast<int>(row_of_graph_row.size());
  const std::size_t n = static_cast<std::size_t>(g.rows) * g.cols;
  g.half_log.assign(n + 2, 0.0);
  g.cone_beta.assign(n + 2, 0.0);
  g.adj.assign(n + 2, {});
  g.south = n;
  g.north = n + 1;
  for (int gi = 0; gi < g.rows; ++gi) {
    const int i = row_of_graph_row[gi];
    g.s.push_back(disc.s(i));
    for (int j = 0; j < g.cols; ++j) {
      const std::size_t k = replicate ? static_cast<std::size_t>(i) : disc.index(i, j);
      g.half_log[g.index(gi, j)] = 0.5 * (w[k] + u[k]);
    }
  }
  for (const auto& c : ref.cone_nodes()) g.cone_beta[c.node] = c.weight;

  // Radial lengths along a column integrate the fine profile when rows are strided.
  auto radial = [&](int gi, int j) {
    if (!replicate) return edge_length(g, g.index(gi, j), g.index(gi + 1, j), disc.h_s(), 0.0);
    double total = 0.0;
    for (int i = row_of_graph_row[gi]; i < row_of_graph_row[gi + 1]; ++i)
      total += 0.5 * (std::exp(0.5 * (w[i] + u[i])) + std::exp(0.5 * (w[i + 1] + u[i + 1]))) * disc.h_s();
    return total;
  };
  for (int gi = 0; gi < g.rows; ++gi) {
    for (int j = 0; j < g.cols; ++j) {
      const std::size_t a = g.index(gi, j);
      const int jr = (j + 1) % g.cols;
      if (g.cols > 1) g.link(a, g.index(gi, jr), edge_length(g, a, g.index(gi, jr), 0.0, hphi));
      if (gi + 1 < g.rows) {
        const double ds = g.s[gi + 1] - g.s[gi];
        const double lr = radial(gi, j);
        g.link(a, g.index(gi + 1, j), lr);
        if (g.cols > 1) {
          for (int jj : {jr, (j + g.cols - 1) % g.cols}) {
            const std::size_t b = g.index(gi + 1, jj);
            double len;
            if (std::isinf(g.half_log[a]) || std::isinf(g.half_log[b])) {
              len = edge_length(g, a, b, ds, hphi);
            } else {
              const double la = 0.5 * (std::exp(g.half_log[a]) + std::exp(g.half_log[b])) * hphi;
              len = std::hypot(lr, la);
            }
            g.link(a, b, len);
          }
        }
      }
    }
  }
  // Polar caps: e^(w+u) ~ C e^(alpha s) toward the south pole, C e^(-alpha s) north.
  const double alpha_s = ref.density().alpha_low(), alpha_n = ref.density().alpha_high();
  for (int j = 0; j < g.cols; ++j) {
    const std::size_t lo = g.index(0, j), hi = g.index(g.rows - 1, j);
    g.link(g.south, lo, 2.0 * std::exp(g.half_log[lo]) / alpha_s);
    g.link(g.north, hi, 2.0 * std::exp(g.half_log[hi]) / alpha_n);
  }
  return g;
}

// Adds a virtual node on the meridian of column j at position s, between graph rows.
std::size_t add_meridian_node(Graph& g, const ConicMetric& metric, double s, int j) {
  const Discretization& disc = metric.disc();
  const GridField& w = metric.reference().log_density();
  const GridField& u = metric.potential();
  const bool replicate = disc.kind() == GridKind::Symmetric1D;
  auto half_log_at = [&](double sv) {
    const double x = std::clamp((sv - disc.s_min()) / disc.h_s(), 0.0, static_cast<double>(disc.n_s() - 1));
    const int i = std::min(static_cast<int>(x), disc.n_s() - 2);
    const double f = x - i;
    const std::size_t a = replicate ? static_cast<std::size_t>(i) : disc.index(i, j);
    const std::size_t b = replicate ? static_cast<std::size_t>(i + 1) : disc.index(i + 1, j);
    return 0.5 * ((1 - f) * (w[a] + u[a]) + f * (w[b] + u[b]));
  };
  // Metric length along the meridian between two s values.
  auto along = [&](double s0, double s1) {
    const int steps = std::max(2, static_cast<int>(std::ceil(std::abs(s1 - s0) / disc.h_s())) * 2);
    const double h = (s1 - s0) / steps;
    double total = 0.0;
    for (int k = 0; k < steps; ++k)
      total += 0.5 * (std::exp(half_log_at(s0 + k * h)) + std::exp(half_log_at(s0 + (k + 1) * h))) * h;
    return std::abs(total);
  };
  const std::size_t v = g.adj.size();
  g.adj.emplace_back();
  g.half_log.push_back(half_log_at(s));
  g.cone_beta.push_back(0.0);
  const double hphi = 2.0 * std::numbers::pi / g.cols;
  const auto upper = std::upper_bound(g.s.begin(), g.s.end(), s);
  int below = static_cast<int>(upper - g.s.begin()) - 1;
  below = std::clamp(below, 0, g.rows - 2);
  for (int gi : {below, below + 1}) {
    const double lr = along(s, g.s[gi]);
    g.link(v, g.index(gi, j), lr);
    if (g.cols > 1) {
      for (int jj : {(j + 1) % g.cols, (j + g.cols - 1) % g.cols}) {
        const std::size_t b = g.index(gi, jj);
        const double la = 0.5 * (std::exp(g.half_log[v]) + std::exp(g.half_log[b])) * hphi;
        g.link(v, b, std::hypot(lr, la));
      }
    }
  }
  return v;
}

std::vector<double> dijkstra(const Graph& g, std::size_t source) {
  std::vector<double> dist(g.adj.size(), kInf);
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[source] = 0.0;
  heap.push({0.0, source});
  while (!heap.empty()) {
    const auto [d, a] = heap.top();
    heap.pop();
    if (d > dist[a]) continue;
    for (const Edge& e : g.adj[a]) {
      const double nd = d + e.length;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        heap.push({nd, e.to});
      }
    }
  }
  return dist;
}

std::string format12(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

}  // namespace

DistanceMatrix::DistanceMatrix(std::vector<std::string> ids, std::vector<double> values)
    : ids_(std::move(ids)), values_(std::move(values)) {
  if (values_.size() != ids_.size() * ids_.size()) throw DomainError("distance matrix has the wrong size");
}

double DistanceMatrix::max() const {
  double m = 0.0;
  for (double v : values_) m = std::max(m, v);
  return m;
}

std::string DistanceMatrix::to_csv() const {
  std::ostringstream out;
  out << "id";
  for (const auto& id : ids_) out << ',' << id;
  out << '\n';
  for (std::size_t a = 0; a < size(); ++a) {
    out << ids_[a];
    for (std::size_t b = 0; b < size(); ++b) out << ',' << format12((*this)(a, b));
    out << '\n';
  }
  return out.str();
}

std::vector<SamplePoint> cone_samples(const ConicMetric& metric) {
  std::vector<SamplePoint> out;
  const ReferenceSampling& ref = metric.reference();
  const Discretization& disc = metric.disc();
  int label = 1;
  for (const auto& c : ref.cone_nodes()) {
    SamplePoint p;
    p.kind = SamplePoint::Kind::Node;
    p.node = c.node;
    p.s = disc.s(disc.row(c.node));
    p.phi = disc.phi(disc.column(c.node));
    p.id = "p" + std::to_string(label++);
    out.push_back(p);
  }
  if (ref.density().weight_low() > 0.0) out.push_back({SamplePoint::Kind::SouthPole, 0, -kInf, 0.0, "south"});
  if (ref.density().weight_high() > 0.0) out.push_back({SamplePoint::Kind::NorthPole, 0, kInf, 0.0, "north"});
  return out;
}

std::vector<double> meridian_arc_length(const ConicMetric& metric) {
  const Discretization& disc = metric.disc();
  const GridField& w = metric.reference().log_density();
  const GridField& u = metric.potential();
  std::vector<double> out(disc.n_s());
  auto half = [&](int i) { return 0.5 * (w[disc.index(i, 0)] + u[disc.index(i, 0)]); };
  out[0] = 2.0 * std::exp(half(0)) / metric.reference().density().alpha_low();
  for (int i = 1; i < disc.n_s(); ++i)
    out[i] = out[i - 1] + 0.5 * (std::exp(half(i - 1)) + std::exp(half(i))) * disc.h_s();
  return out;
}

std::vector<SamplePoint> meridian_samples(const ConicMetric& metric, int count) {
  const Discretization& disc = metric.disc();
  if (disc.kind() != GridKind::Symmetric1D) throw GridError("meridian samples need a rotationally symmetric grid");
  if (count < 2) throw DomainError("need at least two meridian intervals");
  const auto arc = meridian_arc_length(metric);
  const double total =
      arc.back() + 2.0 * std::exp(0.5 * (metric.reference().log_density().back() + metric.potential().back())) /
                       metric.reference().density().alpha_high();
  std::vector<SamplePoint> out;
  out.push_back({SamplePoint::Kind::SouthPole, 0, -kInf, 0.0, "south"});
  for (double phi : {0.0, std::numbers::pi}) {
    for (int k = 1; k < count; ++k) {
      const double target = total * k / count;
      const auto it = std::lower_bound(arc.begin(), arc.end(), target);
      if (it == arc.begin() || it == arc.end()) throw GridError("meridian sample falls in a polar cap");
      const std::size_t i = static_cast<std::size_t>(it - arc.begin());
      const double f = (target - arc[i - 1]) / (arc[i] - arc[i - 1]);
      SamplePoint p;
      p.kind = SamplePoint::Kind::Meridian;
      p.s = disc.s(static_cast<int>(i) - 1) + f * disc.h_s();
      p.phi = phi;
      p.id = (phi == 0.0 ? "m0_" : "m1_") + std::to_string(k);
      out.push_back(p);
    }
  }
  out.push_back({SamplePoint::Kind::NorthPole, 0, kInf, 0.0, "north"});
  return out;
}

DistanceMatrix distance_matrix(const ConicMetric& metric, const std::vector<SamplePoint>& samples) {
  std::vector<int> rows;
  Graph g = build_graph(metric, rows);
  std::vector<std::size_t> nodes;
  for (const auto& p : samples) {
    switch (p.kind) {
      case SamplePoint::Kind::SouthPole: nodes.push_back(g.south); break;
      case SamplePoint::Kind::NorthPole: nodes.push_back(g.north); break;
      case SamplePoint::Kind::Node:
        if (metric.disc().kind() == GridKind::Symmetric1D) throw GridError("node samples need a cylinder grid");
        nodes.push_back(p.node);
        break;
      case SamplePoint::Kind::Meridian: {
        const int j = static_cast<int>(std::lround(p.phi / (2.0 * std::numbers::pi) * g.cols)) % g.cols;
        nodes.push_back(add_meridian_node(g, metric, p.s, j));
        break;
      }
    }
  }
  const std::size_t n = samples.size();
  std::vector<double> values(n * n, 0.0);
  parallel_for(n, [&](std::size_t a) {
    const auto dist = dijkstra(g, nodes[a]);
    for (std::size_t b = 0; b < n; ++b) values[a * n + b] = dist[nodes[b]];
  });
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b) {
      if (!std::isfinite(values[a * n + b])) throw GridError("distance graph is disconnected near a cone point");
      if (b > a) {
        // Dijkstra from either end gives the same path length up to rounding.
        const double m = std::min(values[a * n + b], values[b * n + a]);
        values[a * n + b] = values[b * n + a] = m;
      }
    }
  std::vector<std::string> ids;
  for (const auto& p : samples) ids.push_back(p.id);
  return DistanceMatrix(std::move(ids), std::move(values));
}

double gh_distortion(const DistanceMatrix& d1, const DistanceMatrix& d2) {
  if (d1.size() != d2.size()) throw DomainError("distance matrices have different sample counts");
  double worst = 0.0;
  for (std::size_t a = 0; a < d1.size(); ++a)
    for (std::size_t b = 0; b < d1.size(); ++b) worst = std::max(worst, std::abs(d1(a, b) - d2(a, b)));
  return worst;
}

double gh_distortion(const ConicMetric& m1, const std::vector<SamplePoint>& s1, const ConicMetric& m2,
                     const std::vector<SamplePoint>& s2) {
  if (s1.size() != s2.size()) throw DomainError("correspondence has mismatched sample counts");
  return gh_distortion(distance_matrix(m1, s1), distance_matrix(m2, s2));
}

}  // namespace conic_ricci
