#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <vector>

#include "eqw/netmap.hpp"
#include "oracle.hpp"

using eqw::CoinFamily;
using eqw::WalkGraph;

namespace {

WalkGraph from_edges(const std::vector<std::pair<int, int>>& edges) {
  WalkGraph g;
  for (const auto& [a, b] : edges) g.add_edge(a, b, 1);
  return g;
}

WalkGraph path3() { return from_edges({{0, 1}, {1, 2}}); }
WalkGraph k4() { return from_edges({{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}}); }
WalkGraph star4() { return from_edges({{0, 1}, {0, 2}, {0, 3}, {0, 4}}); }

// Adjacency matrix in sites() order for the brute-force oracles.
std::vector<std::vector<int>> adjacency_matrix(const WalkGraph& g) {
  const auto sites = g.sites();
  std::vector<std::vector<int>> m(sites.size(), std::vector<int>(sites.size(), 0));
  for (std::size_t i = 0; i < sites.size(); ++i)
    for (std::size_t j = 0; j < sites.size(); ++j)
      if (i != j && g.has_edge(sites[i], sites[j])) m[i][j] = 1;
  return m;
}

std::vector<int> degree_list(const WalkGraph& g) {
  std::vector<int> d;
  for (const auto& row : adjacency_matrix(g)) d.push_back(std::accumulate(row.begin(), row.end(), 0));
  return d;
}

void expect_matches_oracles(const WalkGraph& g) {
  const auto ds = eqw::degree_stats(g);
  const auto om = oracle::degree_moments(degree_list(g));
  EXPECT_NEAR(ds.mean, om.mean, 1e-12);
  EXPECT_NEAR(ds.stddev, om.stddev, 1e-12);
  EXPECT_NEAR(ds.entropy, om.entropy, 1e-12);
  if (om.stddev > 0) {
    ASSERT_TRUE(ds.skewness.has_value());
    EXPECT_NEAR(*ds.skewness, om.skew, 1e-12);
  }
  const auto adj = adjacency_matrix(g);
  const auto apl = eqw::average_path_length(g);
  ASSERT_TRUE(apl.has_value());
  EXPECT_NEAR(*apl, oracle::all_pairs_mean_distance(adj), 1e-12);
  const auto r = eqw::degree_assortativity(g);
  if (r) EXPECT_NEAR(*r, oracle::pearson_assortativity(adj), 1e-12);
}

eqw::TrajectoryRecord standard_trace(std::int64_t t_max) {
  eqw::RunConfig c;
  c.q = 0.5;
  c.coin = eqw::CoinParams::symmetric(CoinFamily::K, std::numbers::pi / 4);
  c.t_max = t_max;
  eqw::TrajectoryOptions opt;
  opt.keep_distributions = true;
  return eqw::run_trajectory(c, 1, opt);
}

eqw::TrajectoryRecord memory_trace(double q, std::int64_t t_max, std::uint64_t seed) {
  eqw::RunConfig c;
  c.q = q;
  c.coin = eqw::CoinParams::symmetric(CoinFamily::K, std::numbers::pi / 4);
  c.t_max = t_max;
  eqw::TrajectoryOptions opt;
  opt.keep_distributions = true;
  opt.localization = false;
  return eqw::run_trajectory(c, seed, opt);
}

std::set<std::pair<std::int64_t, std::int64_t>> edge_set(const WalkGraph& g) {
  std::set<std::pair<std::int64_t, std::int64_t>> s;
  for (const auto& e : g.edges()) s.insert({e.a, e.b});
  return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// Graph container
// ---------------------------------------------------------------------------

TEST(WalkGraph, StartsWithOrigin) {
  const WalkGraph g;
  EXPECT_EQ(g.vertex_count(), 1u);
  EXPECT_TRUE(g.has_vertex(0));
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(WalkGraph, SimpleByConstruction) {
  WalkGraph g;
  EXPECT_TRUE(g.add_edge(0, 3, 1));
  EXPECT_FALSE(g.add_edge(3, 0, 2));
  EXPECT_FALSE(g.add_edge(0, 3, 5));
  EXPECT_THROW(g.add_edge(4, 4, 1), std::invalid_argument);
  EXPECT_EQ(g.edge_count(), 1u);
  EXPECT_EQ(g.vertex_count(), 2u);
  EXPECT_TRUE(g.has_edge(3, 0));
  EXPECT_EQ(g.edges()[0].a, 0);
  EXPECT_EQ(g.edges()[0].b, 3);
  EXPECT_EQ(g.edges()[0].created, 1);
}

TEST(WalkGraph, NegativeSitesKeyedDistinctly) {
  WalkGraph g;
  g.add_edge(-1, 1, 1);
  g.add_edge(-2, 2, 1);
  EXPECT_TRUE(g.has_edge(-1, 1));
  EXPECT_FALSE(g.has_edge(-1, 2));
  EXPECT_FALSE(g.has_edge(-2, 1));
}

TEST(WalkGraph, EdgeListFormat) {
  WalkGraph g;
  g.add_edge(0, -1, 1);
  g.add_edge(2, 1, 4);
  std::ostringstream os;
  g.write_edge_list(os);
  EXPECT_EQ(os.str(), "-1 0 1\n1 2 4\n");
}

// ---------------------------------------------------------------------------
// Construction from walks
// ---------------------------------------------------------------------------

TEST(BuildGraph, EmptyTrajectory) {
  eqw::TrajectoryRecord r;
  r.distributions.push_back({0, {1.0}, 0});
  const auto g = eqw::build_graph(r);
  EXPECT_EQ(g.vertex_count(), 1u);
  EXPECT_EQ(g.edge_count(), 0u);
}

TEST(BuildGraph, OneStandardStep) {
  const auto g = eqw::build_graph(standard_trace(2), eqw::kOccupancyThreshold, 1);
  std::vector<std::int64_t> v(g.sites().begin(), g.sites().end());
  std::sort(v.begin(), v.end());
  EXPECT_EQ(v, (std::vector<std::int64_t>{-1, 0, 1}));
  EXPECT_EQ(edge_set(g), (std::set<std::pair<std::int64_t, std::int64_t>>{{-1, 0}, {0, 1}}));
}

TEST(BuildGraph, TwoStandardStepsBipartite) {
  const auto g = eqw::build_graph(standard_trace(2));
  EXPECT_EQ(edge_set(g), (std::set<std::pair<std::int64_t, std::int64_t>>{
                             {-2, -1}, {-1, 0}, {0, 1}, {1, 2}}));
  for (const auto& e : g.edges()) EXPECT_NE((e.a - e.b) % 2, 0);
}

TEST(BuildGraph, RequiresJumpsAndDistributions) {
  auto r = standard_trace(5);
  auto no_dist = r;
  no_dist.distributions.clear();
  EXPECT_THROW(eqw::build_graph(no_dist), std::invalid_argument);
  auto no_jumps = r;
  no_jumps.jumps.clear();
  no_jumps.distributions.resize(1);
  EXPECT_NO_THROW(eqw::build_graph(no_jumps));  // t = 0 graph
  auto partial = r;
  partial.jumps.clear();
  EXPECT_THROW(eqw::build_graph(partial, eqw::kOccupancyThreshold, 3), std::invalid_argument);
}

TEST(BuildGraph, StandardWalkIsAPath) {
  const auto r = standard_trace(10);
  const auto g = eqw::build_graph(r);
  for (const auto& e : g.edges()) EXPECT_EQ(e.b - e.a, 1);
  // Visited interval [-10, 10] with every neighbour pair linked.
  EXPECT_EQ(g.vertex_count(), 21u);
  EXPECT_EQ(g.edge_count(), 20u);
  const auto d = eqw::degree_stats(g);
  EXPECT_EQ(d.histogram.at(1), 2.0 / 21.0);
}

TEST(BuildGraph, EdgesSpanThatStepsJump) {
  const auto r = memory_trace(1.4, 40, 3);
  const auto g = eqw::build_graph(r);
  for (const auto& e : g.edges())
    EXPECT_EQ(e.b - e.a, r.jumps[static_cast<std::size_t>(e.created - 1)]);
}

TEST(BuildGraph, Idempotent) {
  const auto r = memory_trace(1.2, 40, 9);
  const auto a = eqw::build_graph(r);
  const auto b = eqw::build_graph(r);
  EXPECT_EQ(edge_set(a), edge_set(b));
  std::ostringstream sa, sb;
  a.write_edge_list(sa);
  b.write_edge_list(sb);
  EXPECT_EQ(sa.str(), sb.str());
}

TEST(BuildGraph, BruteForceLinkRule) {
  const auto r = memory_trace(1.6, 25, 17);
  std::set<std::pair<std::int64_t, std::int64_t>> expected;
  for (std::size_t t = 1; t < r.distributions.size(); ++t) {
    const auto& cur = r.distributions[t];
    const auto& prev = r.distributions[t - 1];
    const auto dx = r.jumps[t - 1];
    for (std::int64_t i = cur.x_min; i <= cur.x_max(); ++i) {
      if (cur.at(i) <= 1e-9) continue;
      for (const auto j : {i - dx, i + dx})
        if (prev.at(j) > 1e-9) expected.insert({std::min(i, j), std::max(i, j)});
    }
  }
  EXPECT_EQ(edge_set(eqw::build_graph(r)), expected);
}

// ---------------------------------------------------------------------------
// Fixture statistics
// ---------------------------------------------------------------------------

TEST(DegreeStats, Path) {
  const auto d = eqw::degree_stats(path3());
  EXPECT_NEAR(d.mean, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.histogram.at(1), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(d.histogram.at(2), 1.0 / 3.0, 1e-15);
  ASSERT_TRUE(d.skewness.has_value());
}

TEST(DegreeStats, CompleteGraph) {
  const auto d = eqw::degree_stats(k4());
  EXPECT_EQ(d.mean, 3.0);
  EXPECT_EQ(d.stddev, 0.0);
  EXPECT_FALSE(d.skewness.has_value());
  EXPECT_EQ(d.entropy, 0.0);
}

TEST(DegreeStats, HistogramSumsToOne) {
  const auto g = eqw::build_graph(memory_trace(1.5, 60, 2));
  double s = 0.0;
  for (const auto& [k, p] : eqw::degree_stats(g).histogram) s += p;
  EXPECT_NEAR(s, 1.0, 1e-12);
}

TEST(StructuralStats, Path) {
  const auto s = eqw::structural_stats(path3());
  EXPECT_EQ(s.n_vertices, 3u);
  EXPECT_EQ(s.n_edges, 2u);
  EXPECT_NEAR(*s.average_path_length, 4.0 / 3.0, 1e-15);
  EXPECT_NEAR(*s.assortativity, -1.0, 1e-12);
}

TEST(StructuralStats, CompleteGraph) {
  const auto s = eqw::structural_stats(k4());
  EXPECT_EQ(*s.average_path_length, 1.0);
  EXPECT_FALSE(s.assortativity.has_value());
}

TEST(StructuralStats, Star) {
  const auto s = eqw::structural_stats(star4());
  EXPECT_NEAR(*s.average_path_length, 1.6, 1e-15);
  EXPECT_NEAR(*s.assortativity, -1.0, 1e-12);
}

TEST(StructuralStats, SingleVertexUndefined) {
  const auto s = eqw::structural_stats(WalkGraph{});
  EXPECT_FALSE(s.average_path_length.has_value());
  EXPECT_FALSE(s.assortativity.has_value());
  EXPECT_EQ(eqw::degree_stats(WalkGraph{}).mean, 0.0);
}

TEST(StructuralStats, LargestComponentOnly) {
  // Triangle plus a detached edge.
  const auto g = from_edges({{0, 1}, {1, 2}, {0, 2}, {10, 11}});
  EXPECT_EQ(*eqw::average_path_length(g), 1.0);
}

TEST(GraphOracles, FixturesMatchBruteForce) {
  for (const auto& g : {path3(), k4(), star4()}) expect_matches_oracles(g);
}

TEST(GraphOracles, RandomGraphsMatchBruteForce) {
  std::mt19937_64 gen(31);
  for (int trial = 0; trial < 30; ++trial) {
    std::uniform_int_distribution<int> site(-6, 6);
    WalkGraph g;
    for (int e = 0; e < 4 + trial; ++e) {
      const int a = site(gen), b = site(gen);
      if (a != b) g.add_edge(a, b, e);
    }
    expect_matches_oracles(g);
  }
}

TEST(GraphOracles, WalkGraphsMatchBruteForce) {
  for (const std::uint64_t seed : {1u, 2u, 3u})
    expect_matches_oracles(eqw::build_graph(memory_trace(1.3, 30, seed)));
}

// Several 64-source batches, the last one partial, plus a second component.
TEST(GraphOracles, LargeSparseGraphsMatchBruteForce) {
  std::mt19937_64 gen(32);
  for (const int n : {64, 65, 150, 200}) {
    WalkGraph g;
    for (int v = 1; v < n; ++v) g.add_edge(std::uniform_int_distribution<int>(0, v - 1)(gen), v, v);
    for (int e = 0; e < n / 4; ++e) {
      const int a = static_cast<int>(gen() % n), b = static_cast<int>(gen() % n);
      if (a != b) g.add_edge(a, b, n + e);
    }
    for (int v = 1; v < 20; ++v) g.add_edge(1000 + v - 1, 1000 + v, 1);
    expect_matches_oracles(g);
  }
  expect_matches_oracles(eqw::build_graph(memory_trace(1e6, 30, 4)));
}

// ---------------------------------------------------------------------------
// Time series
// ---------------------------------------------------------------------------

TEST(GraphTimeseries, LastSampleEqualsOneShot) {
  const auto r = memory_trace(1.5, 50, 4);
  const std::int64_t at[] = {50};
  const auto ts = eqw::graph_timeseries(r, at);
  ASSERT_EQ(ts.size(), 1u);
  const auto g = eqw::build_graph(r);
  EXPECT_EQ(ts[0].structure.n_vertices, g.vertex_count());
  EXPECT_EQ(ts[0].structure.n_edges, g.edge_count());
  EXPECT_EQ(ts[0].degree.mean, eqw::degree_stats(g).mean);
  EXPECT_EQ(ts[0].structure.average_path_length, eqw::average_path_length(g));
}

TEST(GraphTimeseries, GrowthIsMonotone) {
  for (const double q : {0.5, 0.8, 1.5, 1e6}) {
    const auto r = memory_trace(q, 60, 6);
    std::vector<std::int64_t> at(60);
    std::iota(at.begin(), at.end(), 1);
    const auto ts = eqw::graph_timeseries(r, at);
    for (std::size_t i = 1; i < ts.size(); ++i) {
      EXPECT_GE(ts[i].structure.n_vertices, ts[i - 1].structure.n_vertices);
      EXPECT_GE(ts[i].structure.n_edges, ts[i - 1].structure.n_edges);
      const auto n = ts[i].structure.n_vertices;
      EXPECT_LE(ts[i].structure.n_edges, n * (n - 1) / 2);
    }
  }
}

TEST(GraphTimeseries, RejectsOutOfRangeSamples) {
  const auto r = memory_trace(1.5, 20, 4);
  const std::int64_t late[] = {5, 21};
  EXPECT_THROW(eqw::graph_timeseries(r, late), std::invalid_argument);
  const std::int64_t zero[] = {0};
  EXPECT_THROW(eqw::graph_timeseries(r, zero), std::invalid_argument);
}

TEST(GraphTimeseries, MeanDegreeGrowsWithQ) {
  // Averaged over a few realisations to keep the comparison stable.
  double low = 0.0, high = 0.0;
  const std::int64_t at[] = {200};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    low += eqw::graph_timeseries(memory_trace(0.7, 200, seed), at)[0].degree.mean;
    high += eqw::graph_timeseries(memory_trace(1.5, 200, seed), at)[0].degree.mean;
  }
  EXPECT_GT(high, low);
}
