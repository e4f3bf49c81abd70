#include "eqw/netmap.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace eqw {

WalkGraph::WalkGraph() { add_vertex(0, 0); }

std::uint64_t WalkGraph::edge_key(std::int64_t a, std::int64_t b) {
  constexpr std::int64_t lim = std::numeric_limits<std::int32_t>::max();
  if (a < -lim || a > lim || b < -lim || b > lim) {
    throw std::out_of_range("lattice site outside the 32-bit edge key range");
  }
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

bool WalkGraph::add_vertex(std::int64_t site, std::int64_t created) {
  if (index_.contains(site)) return false;
  index_.emplace(site, sites_.size());
  sites_.push_back(site);
  vertex_created_.push_back(created);
  adjacency_.emplace_back();
  return true;
}

bool WalkGraph::has_edge(std::int64_t i, std::int64_t j) const {
  if (i > j) std::swap(i, j);
  return edge_keys_.contains(edge_key(i, j));
}

bool WalkGraph::add_edge(std::int64_t i, std::int64_t j, std::int64_t created) {
  if (i == j) throw std::invalid_argument("self-loop at site " + std::to_string(i));
  if (i > j) std::swap(i, j);
  if (!edge_keys_.insert(edge_key(i, j)).second) return false;
  add_vertex(i, created);
  add_vertex(j, created);
  const std::size_t a = index_.at(i);
  const std::size_t b = index_.at(j);
  adjacency_[a].push_back(b);
  adjacency_[b].push_back(a);
  edges_.push_back({i, j, created});
  return true;
}

std::vector<std::size_t> WalkGraph::degrees() const {
  std::vector<std::size_t> d(adjacency_.size());
  for (std::size_t i = 0; i < d.size(); ++i) d[i] = adjacency_[i].size();
  return d;
}

void WalkGraph::write_edge_list(std::ostream& os) const {
  for (const Edge& e : edges_) os << e.a << ' ' << e.b << ' ' << e.created << '\n';
}

void GraphBuilder::add_step(std::int64_t t, const SpatialDistribution& previous,
                            const SpatialDistribution& current, std::int64_t dx) {
  if (dx < 1) throw std::invalid_argument("jump length must be >= 1");
  for (std::size_t k = 0; k < current.p.size(); ++k) {
    if (!(current.p[k] > threshold_)) continue;
    const std::int64_t i = current.x_min + static_cast<std::int64_t>(k);
    for (const std::int64_t j : {i - dx, i + dx}) {
      if (previous.at(j) > threshold_) graph_.add_edge(i, j, t);
    }
  }
}

WalkGraph build_graph(const TrajectoryRecord& trajectory, double threshold,
                      std::optional<std::int64_t> upto) {
  const std::int64_t steps = upto.value_or(trajectory.t_max());
  if (steps < 0 || steps > trajectory.t_max()) {
    throw std::invalid_argument("graph horizon outside the recorded trajectory");
  }
  if (steps > 0 && trajectory.jumps.empty()) {
    throw std::invalid_argument("trajectory carries no per-step jump values");
  }
  if (static_cast<std::int64_t>(trajectory.distributions.size()) < steps + 1) {
    throw std::invalid_argument("trajectory carries no per-step distributions");
  }
  GraphBuilder builder(threshold);
  for (std::int64_t t = 1; t <= steps; ++t) {
    const auto i = static_cast<std::size_t>(t);
    builder.add_step(t, trajectory.distributions[i - 1], trajectory.distributions[i],
                     trajectory.jumps[i - 1]);
  }
  return builder.take();
}

DegreeStats degree_stats(const WalkGraph& graph) {
  const auto deg = graph.degrees();
  const double n = static_cast<double>(deg.size());
  DegreeStats out;
  std::map<std::size_t, std::size_t> counts;
  double sum = 0.0;
  for (const std::size_t d : deg) {
    ++counts[d];
    sum += static_cast<double>(d);
  }
  out.mean = sum / n;
  double m2 = 0.0, m3 = 0.0;
  for (const std::size_t d : deg) {
    const double c = static_cast<double>(d) - out.mean;
    m2 += c * c;
    m3 += c * c * c;
  }
  m2 /= n;
  m3 /= n;
  out.stddev = std::sqrt(m2);
  if (out.stddev > 0.0) out.skewness = m3 / (out.stddev * out.stddev * out.stddev);
  for (const auto& [d, c] : counts) {
    const double p = static_cast<double>(c) / n;
    out.histogram[d] = p;
    out.entropy -= p * std::log(p);
  }
  return out;
}

std::optional<double> average_path_length(const WalkGraph& graph) {
  const auto& adj = graph.adjacency();
  const std::size_t n = adj.size();

  // Largest component; ties go to the one containing the lowest vertex index.
  std::vector<int> component(n, -1);
  std::vector<std::size_t> best;
  int label = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (component[s] >= 0) continue;
    std::vector<std::size_t> members{s};
    component[s] = label;
    for (std::size_t k = 0; k < members.size(); ++k) {
      for (const std::size_t v : adj[members[k]]) {
        if (component[v] < 0) {
          component[v] = label;
          members.push_back(v);
        }
      }
    }
    if (members.size() > best.size()) best = std::move(members);
    ++label;
  }
  if (best.size() < 2) return std::nullopt;

  // Breadth-first search from 64 sources at once: bit k of a word marks
  // "reached from source k". Sources are batched in site order so their
  // frontiers overlap on the lattice-like walk graphs.
  std::vector<std::size_t> sources = best;
  const auto sites = graph.sites();
  std::sort(sources.begin(), sources.end(),
            [&](std::size_t x, std::size_t y) { return sites[x] < sites[y]; });
  std::vector<std::uint64_t> seen(n, 0), frontier(n, 0), next(n, 0);
  std::vector<std::size_t> current, upcoming;
  std::uint64_t total = 0;
  for (std::size_t first = 0; first < sources.size(); first += 64) {
    const std::size_t batch = std::min<std::size_t>(64, sources.size() - first);
    for (const std::size_t v : best) seen[v] = 0;
    current.clear();
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t s = sources[first + k];
      seen[s] = frontier[s] = std::uint64_t{1} << k;
      current.push_back(s);
    }
    for (std::uint64_t depth = 1; !current.empty(); ++depth) {
      upcoming.clear();
      for (const std::size_t u : current) {
        const std::uint64_t bits = frontier[u];
        for (const std::size_t v : adj[u]) {
          const std::uint64_t fresh = bits & ~seen[v];
          if (fresh == 0) continue;
          if (next[v] == 0) upcoming.push_back(v);
          next[v] |= fresh;
        }
      }
      for (const std::size_t u : current) frontier[u] = 0;
      for (const std::size_t v : upcoming) {
        total += depth * static_cast<std::uint64_t>(std::popcount(next[v]));
        seen[v] |= next[v];
        frontier[v] = next[v];
        next[v] = 0;
      }
      current.swap(upcoming);
    }
  }
  const double m = static_cast<double>(best.size());
  return static_cast<double>(total) / (m * (m - 1.0));
}

std::optional<double> degree_assortativity(const WalkGraph& graph) {
  if (graph.edge_count() == 0) return std::nullopt;
  const auto deg = graph.degrees();
  const auto& adj = graph.adjacency();
  // Directed endpoint pairs (u, v) for every edge in both orientations.
  double sum = 0.0, count = 0.0;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    sum += static_cast<double>(deg[u]) * static_cast<double>(adj[u].size());
    count += static_cast<double>(adj[u].size());
  }
  const double mean = sum / count;
  double cov = 0.0, var = 0.0;
  for (std::size_t u = 0; u < adj.size(); ++u) {
    const double du = static_cast<double>(deg[u]) - mean;
    for (const std::size_t v : adj[u]) {
      cov += du * (static_cast<double>(deg[v]) - mean);
      var += du * du;
    }
  }
  if (!(var > 0.0)) return std::nullopt;
  return cov / var;
}

StructuralStats structural_stats(const WalkGraph& graph) {
  StructuralStats out;
  out.n_vertices = graph.vertex_count();
  out.n_edges = graph.edge_count();
  out.average_path_length = average_path_length(graph);
  out.assortativity = degree_assortativity(graph);
  return out;
}

std::vector<GraphSample> graph_timeseries(const TrajectoryRecord& trajectory,
                                          std::span<const std::int64_t> sample_times,
                                          double threshold) {
  std::vector<std::int64_t> times(sample_times.begin(), sample_times.end());
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  if (!times.empty() && (times.front() < 1 || times.back() > trajectory.t_max())) {
    throw std::invalid_argument("sample times must lie in [1, " +
                                std::to_string(trajectory.t_max()) + "]");
  }
  if (trajectory.jumps.empty()) {
    throw std::invalid_argument("trajectory carries no per-step jump values");
  }
  if (static_cast<std::int64_t>(trajectory.distributions.size()) < trajectory.t_max() + 1) {
    throw std::invalid_argument("trajectory carries no per-step distributions");
  }
  std::vector<GraphSample> out;
  out.reserve(times.size());
  GraphBuilder builder(threshold);
  std::int64_t built = 0;
  for (const std::int64_t ts : times) {
    for (; built < ts; ++built) {
      const auto i = static_cast<std::size_t>(built + 1);
      builder.add_step(built + 1, trajectory.distributions[i - 1], trajectory.distributions[i],
                       trajectory.jumps[i - 1]);
    }
    out.push_back({ts, degree_stats(builder.graph()), structural_stats(builder.graph())});
  }
  return out;
}

}  // namespace eqw
