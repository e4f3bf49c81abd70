#pragma once

// Walk-to-network mapping and the graph statistics reported on it.
//
// Starting from a single vertex at the origin, at every step t with jump dx,
// each site i with P_t(i) above threshold is linked to j = i +- dx whenever
// P_{t-1}(j) is above threshold and the link does not exist yet.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "eqw/ensemble.hpp"
#include "eqw/observables.hpp"

namespace eqw {

class WalkGraph {
 public:
  struct Edge {
    std::int64_t a;  // a < b
    std::int64_t b;
    std::int64_t created;
  };

  /// Graph holding only the origin vertex.
  WalkGraph();

  /// Adds the vertex if absent; returns true when it was new.
  bool add_vertex(std::int64_t site, std::int64_t created);

  /// Adds the undirected edge (and missing endpoints). Self-loops are
  /// rejected with std::invalid_argument. Returns true when the edge was new.
  bool add_edge(std::int64_t i, std::int64_t j, std::int64_t created);

  bool has_vertex(std::int64_t site) const { return index_.contains(site); }
  bool has_edge(std::int64_t i, std::int64_t j) const;

  std::size_t vertex_count() const { return sites_.size(); }
  std::size_t edge_count() const { return edges_.size(); }

  /// Sites in insertion order.
  std::span<const std::int64_t> sites() const { return sites_; }
  std::span<const std::int64_t> vertex_created() const { return vertex_created_; }
  /// Edges in insertion order.
  std::span<const Edge> edges() const { return edges_; }

  /// Neighbour lists by vertex index (same order as sites()).
  const std::vector<std::vector<std::size_t>>& adjacency() const { return adjacency_; }

  std::vector<std::size_t> degrees() const;

  /// One "i j t_created" line per edge, insertion order.
  void write_edge_list(std::ostream& os) const;

 private:
  static std::uint64_t edge_key(std::int64_t a, std::int64_t b);

  std::vector<std::int64_t> sites_;
  std::vector<std::int64_t> vertex_created_;
  std::unordered_map<std::int64_t, std::size_t> index_;
  std::vector<std::vector<std::size_t>> adjacency_;
  std::vector<Edge> edges_;
  std::unordered_set<std::uint64_t> edge_keys_;
};

/// Incremental construction from consecutive distributions.
class GraphBuilder {
 public:
  explicit GraphBuilder(double threshold = kOccupancyThreshold) : threshold_(threshold) {}

  /// Applies the linking rule for the step that produced `current` (time t)
  /// from `previous` (time t - 1) with jump `dx`.
  void add_step(std::int64_t t, const SpatialDistribution& previous,
                const SpatialDistribution& current, std::int64_t dx);

  const WalkGraph& graph() const { return graph_; }
  WalkGraph take() { return std::move(graph_); }

 private:
  double threshold_;
  WalkGraph graph_;
};

/// Graph of a recorded trajectory up to time `upto` (default: all steps).
/// Throws std::invalid_argument if the record lacks per-step jumps or the
/// per-time distributions they refer to.
WalkGraph build_graph(const TrajectoryRecord& trajectory, double threshold = kOccupancyThreshold,
                      std::optional<std::int64_t> upto = std::nullopt);

struct DegreeStats {
  std::map<std::size_t, double> histogram;  // degree -> fraction of vertices
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<double> skewness;  // undefined when stddev = 0
  double entropy = 0.0;            // natural log, of the histogram
};

struct StructuralStats {
  std::size_t n_vertices = 0;
  std::size_t n_edges = 0;
  std::optional<double> average_path_length;  // over the largest component
  std::optional<double> assortativity;
};

DegreeStats degree_stats(const WalkGraph& graph);
StructuralStats structural_stats(const WalkGraph& graph);

/// Mean shortest-path length over unordered pairs of the largest connected
/// component; nullopt when that component has fewer than two vertices.
std::optional<double> average_path_length(const WalkGraph& graph);

/// Pearson correlation of endpoint degrees, each edge counted in both
/// directions; nullopt when the endpoint degree variance vanishes.
std::optional<double> degree_assortativity(const WalkGraph& graph);

struct GraphSample {
  std::int64_t t = 0;
  DegreeStats degree;
  StructuralStats structure;
};

/// Statistics of the cumulative graph at each sample time. Sample times must
/// lie in [1, t_max] of the record; they are visited in ascending order.
std::vector<GraphSample> graph_timeseries(const TrajectoryRecord& trajectory,
                                          std::span<const std::int64_t> sample_times,
                                          double threshold = kOccupancyThreshold);

}  // namespace eqw
