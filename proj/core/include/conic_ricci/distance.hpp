#pragma once

#include <string>
#include <vector>

#include "conic_ricci/metric.hpp"

namespace conic_ricci {

/// A point at which distances are measured. Node samples sit on a grid node (cone
/// points do); poles are the two ends of the cylinder; meridian samples sit at an
/// arbitrary s on the meridian of angle phi.
struct SamplePoint {
  enum class Kind { Node, SouthPole, NorthPole, Meridian };
  Kind kind = Kind::Node;
  std::size_t node = 0;
  double s = 0.0;
  double phi = 0.0;
  std::string id;
};

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::vector<std::string> ids, std::vector<double> values);

  std::size_t size() const { return ids_.size(); }
  const std::vector<std::string>& ids() const { return ids_; }
  double operator()(std::size_t a, std::size_t b) const { return values_[a * ids_.size() + b]; }
  double max() const;
  /// Header row and column carry the sample ids; 12 significant digits.
  std::string to_csv() const;

 private:
  std::vector<std::string> ids_;
  std::vector<double> values_;
};

/// Cone points of the metric: interior cone nodes, then the south (origin) and north
/// (infinity) poles when they carry weight.
std::vector<SamplePoint> cone_samples(const ConicMetric& metric);

/// Both poles plus points at equal arc-length fractions 1/count ... (count-1)/count
/// along the meridians phi = 0 and phi = pi. Rotationally symmetric metrics only.
std::vector<SamplePoint> meridian_samples(const ConicMetric& metric, int count);

/// Arc length from the south pole along the meridian phi = 0, at every row.
std::vector<double> meridian_arc_length(const ConicMetric& metric);

/// Shortest paths on the 8-neighbour grid graph with metric edge lengths, one Dijkstra
/// pass per sample. Rotationally symmetric metrics are replicated onto a 64-column
/// graph first. Throws GridError when a sample is unreachable.
DistanceMatrix distance_matrix(const ConicMetric& metric, const std::vector<SamplePoint>& samples);

/// max over index pairs of |d1 - d2|; the correspondence is the sample order.
double gh_distortion(const DistanceMatrix& d1, const DistanceMatrix& d2);
double gh_distortion(const ConicMetric& m1, const std::vector<SamplePoint>& s1, const ConicMetric& m2,
                     const std::vector<SamplePoint>& s2);

}  // namespace conic_ricci
