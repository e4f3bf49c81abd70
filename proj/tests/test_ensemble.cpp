#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "eqw/ensemble.hpp"

using eqw::AveragingMode;
using eqw::CoinFamily;
using eqw::CoinParams;
using eqw::RunConfig;

namespace {

constexpr double kQuarterPi = std::numbers::pi / 4;

RunConfig make_config(double q, CoinFamily f, std::int64_t t_max, std::int64_t n,
                      AveragingMode mode = AveragingMode::AverageDistributions) {
  RunConfig c;
  c.q = q;
  c.coin = CoinParams::symmetric(f, kQuarterPi);
  c.t_max = t_max;
  c.n_trajectories = n;
  c.seed = 2024;
  c.mode = mode;
  c.threads = 1;
  return c;
}

void expect_same_records(const eqw::TrajectoryRecord& a, const eqw::TrajectoryRecord& b) {
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.jumps, b.jumps);
  EXPECT_EQ(a.x2, b.x2);
  EXPECT_EQ(a.shannon, b.shannon);
  EXPECT_EQ(a.ipr, b.ipr);
  EXPECT_EQ(a.occupancy, b.occupancy);
  EXPECT_EQ(a.entanglement, b.entanglement);
  EXPECT_EQ(a.norm_deviation, b.norm_deviation);
  EXPECT_EQ(a.final_distribution.x_min, b.final_distribution.x_min);
  EXPECT_EQ(a.final_distribution.p, b.final_distribution.p);
}

void expect_same_results(const eqw::EnsembleResult& a, const eqw::EnsembleResult& b) {
  EXPECT_EQ(a.x2.mean, b.x2.mean);
  EXPECT_EQ(a.x2.stderr_, b.x2.stderr_);
  EXPECT_EQ(a.shannon.mean, b.shannon.mean);
  EXPECT_EQ(a.ipr.mean, b.ipr.mean);
  EXPECT_EQ(a.occupancy.mean, b.occupancy.mean);
  EXPECT_EQ(a.entanglement.mean, b.entanglement.mean);
  EXPECT_EQ(a.final_distribution.x_min, b.final_distribution.x_min);
  EXPECT_EQ(a.final_distribution.p, b.final_distribution.p);
  EXPECT_EQ(a.alpha, b.alpha);
  EXPECT_EQ(a.alpha_stderr, b.alpha_stderr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

TEST(RunConfig, Validation) {
  auto c = make_config(1.0, CoinFamily::K, 10, 1);
  EXPECT_NO_THROW(c.validate());
  auto bad = c;
  bad.q = 0.3;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.t_max = 1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.n_trajectories = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = c;
  bad.threshold = 0.0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(AveragingMode, Names) {
  for (const auto m : {AveragingMode::AverageDistributions, AveragingMode::AverageObservables})
    EXPECT_EQ(eqw::parse_averaging_mode(eqw::averaging_mode_name(m)), m);
  EXPECT_THROW(eqw::parse_averaging_mode("median"), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// Single trajectories
// ---------------------------------------------------------------------------

TEST(RunTrajectory, HalfIsTheStandardWalk) {
  const auto c = make_config(0.5, CoinFamily::K, 60, 1);
  const auto r = eqw::run_trajectory(c, 5);
  EXPECT_EQ(r.jumps, std::vector<std::int64_t>(60, 1));
  auto s = eqw::initial_state(c.coin);
  for (int t = 1; t <= 60; ++t) {
    s = eqw::step(std::move(s), c.coin, 1);
    const auto d = eqw::distribution(s);
    EXPECT_NEAR(r.x2[t - 1], eqw::second_moment(d), 1e-10 * (1 + r.x2[t - 1]));
    EXPECT_NEAR(r.shannon[t - 1], eqw::shannon_entropy(d), 1e-12);
    EXPECT_NEAR(r.entanglement[t - 1], eqw::entanglement_entropy(eqw::reduced_density(s)), 1e-9);
  }
  EXPECT_NEAR(r.x2[0], 1.0, 1e-15);
}

TEST(RunTrajectory, FirstJumpIsOne) {
  for (const double q : {0.7, 1.0, 2.0, 1e6}) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const auto r = eqw::run_trajectory(make_config(q, CoinFamily::H, 5, 1), seed);
      ASSERT_EQ(r.jumps.front(), 1);
      for (std::size_t s = 0; s < r.jumps.size(); ++s) {
        ASSERT_GE(r.jumps[s], 1);
        ASSERT_LE(r.jumps[s], static_cast<std::int64_t>(s + 1));
      }
    }
  }
}

TEST(RunTrajectory, Deterministic) {
  const auto c = make_config(1.3, CoinFamily::H, 80, 1);
  expect_same_records(eqw::run_trajectory(c, 99), eqw::run_trajectory(c, 99));
  EXPECT_NE(eqw::run_trajectory(c, 99).jumps, eqw::run_trajectory(c, 100).jumps);
}

TEST(RunTrajectory, SampleJumpsAgrees) {
  const auto c = make_config(1.8, CoinFamily::K, 120, 1);
  const eqw::MemoryKernel k(c.q, c.t_max);
  EXPECT_EQ(eqw::sample_jumps(k, c.t_max, 31), eqw::run_trajectory(c, 31).jumps);
}

TEST(RunTrajectory, NormHoldsWithMemory) {
  const auto c = make_config(1.5, CoinFamily::K, 100, 1);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto r = eqw::run_trajectory(c, seed);
    for (const double d : r.norm_deviation) ASSERT_LT(d, 1e-10);
    for (std::size_t i = 0; i < r.lambda_minus.size(); ++i) {
      ASSERT_GE(r.lambda_minus[i], -1e-10);
      ASSERT_LE(r.lambda_plus[i], 1 + 1e-10);
      ASSERT_NEAR(r.lambda_minus[i] + r.lambda_plus[i], 1.0, 1e-12);
    }
  }
}

TEST(RunTrajectory, KeepsDistributionsOnRequest) {
  const auto c = make_config(1.2, CoinFamily::K, 30, 1);
  eqw::TrajectoryOptions opt;
  opt.keep_distributions = true;
  const auto r = eqw::run_trajectory(c, 4, opt);
  ASSERT_EQ(r.distributions.size(), 31u);
  EXPECT_EQ(r.distributions.front().p, std::vector<double>{r.distributions.front().p[0]});
  for (std::size_t t = 0; t < r.distributions.size(); ++t)
    EXPECT_EQ(r.distributions[t].time, static_cast<std::int64_t>(t));
  EXPECT_EQ(r.distributions.back().p, r.final_distribution.p);
}

TEST(RunTrajectory, ObserverSeesEveryStep) {
  const auto c = make_config(2.0, CoinFamily::H, 25, 1);
  std::vector<std::int64_t> seen;
  eqw::TrajectoryOptions opt;
  opt.localization = false;
  opt.observer = [&](std::int64_t t, std::int64_t jump, const eqw::WalkerState& s,
                     const eqw::SpatialDistribution& d) {
    EXPECT_EQ(s.time(), t);
    EXPECT_EQ(d.time, t);
    EXPECT_EQ(d.p.size(), s.size());
    seen.push_back(jump);
  };
  const auto r = eqw::run_trajectory(c, 8, opt);
  EXPECT_EQ(seen, r.jumps);
}

TEST(RunTrajectory, LocalizationSwitchDoesNotChangeDynamics) {
  const auto c = make_config(1.4, CoinFamily::K, 50, 1);
  eqw::TrajectoryOptions off;
  off.localization = false;
  const auto a = eqw::run_trajectory(c, 12);
  const auto b = eqw::run_trajectory(c, 12, off);
  EXPECT_EQ(a.x2, b.x2);
  EXPECT_EQ(a.entanglement, b.entanglement);
  EXPECT_EQ(a.final_distribution.p, b.final_distribution.p);
  EXPECT_TRUE(b.shannon.empty());
}

TEST(RunTrajectory, IsaDoesNotChangeJumps) {
  if (!eqw::simd::isa_supported(eqw::simd::Isa::Avx2)) GTEST_SKIP();
  const auto c = make_config(1.6, CoinFamily::H, 200, 1);
  const auto before = eqw::simd::active_kernels().isa;
  eqw::simd::force_isa(eqw::simd::Isa::Scalar);
  const auto a = eqw::run_trajectory(c, 3);
  eqw::simd::force_isa(eqw::simd::Isa::Avx2);
  const auto b = eqw::run_trajectory(c, 3);
  eqw::simd::force_isa(before);
  EXPECT_EQ(a.jumps, b.jumps);
  EXPECT_EQ(a.final_distribution.p, b.final_distribution.p);
  for (std::size_t i = 0; i < a.x2.size(); ++i) EXPECT_NEAR(a.x2[i], b.x2[i], 1e-12 * a.x2[i]);
}

// ---------------------------------------------------------------------------
// Ensembles
// ---------------------------------------------------------------------------

TEST(RunEnsemble, SingleTrajectoryMatchesRun) {
  const auto c = make_config(0.5, CoinFamily::K, 100, 1);
  const auto e = eqw::run_ensemble(c);
  const auto r = eqw::run_trajectory(c, eqw::trajectory_seed(c.seed, 0));
  EXPECT_EQ(e.x2.mean, r.x2);
  EXPECT_EQ(e.entanglement.mean, r.entanglement);
  EXPECT_EQ(e.shannon.mean, r.shannon);
  EXPECT_EQ(e.final_distribution.p, r.final_distribution.p);
  for (const double s : e.x2.stderr_) EXPECT_EQ(s, 0.0);
}

TEST(RunEnsemble, ModesAgreeForOneTrajectory) {
  for (const double q : {0.5, 1.5}) {
    const auto a = eqw::run_ensemble(make_config(q, CoinFamily::H, 120, 1));
    const auto b =
        eqw::run_ensemble(make_config(q, CoinFamily::H, 120, 1, AveragingMode::AverageObservables));
    expect_same_results(a, b);
  }
}

TEST(RunEnsemble, ThreadCountDoesNotMatter) {
  for (const auto mode : {AveragingMode::AverageDistributions, AveragingMode::AverageObservables}) {
    auto c = make_config(1.5, CoinFamily::K, 80, 9, mode);
    const auto one = eqw::run_ensemble(c);
    c.threads = 4;
    const auto four = eqw::run_ensemble(c);
    c.threads = 3;
    const auto three = eqw::run_ensemble(c);
    expect_same_results(one, four);
    expect_same_results(one, three);
  }
}

TEST(RunEnsemble, SeriesShapesAndBounds) {
  const auto e = eqw::run_ensemble(make_config(1.5, CoinFamily::K, 100, 12));
  EXPECT_EQ(e.t.size(), 100u);
  EXPECT_EQ(e.t.front(), 1);
  EXPECT_EQ(e.t.back(), 100);
  for (const auto* s : {&e.x2, &e.shannon, &e.ipr, &e.occupancy, &e.entanglement}) {
    EXPECT_EQ(s->mean.size(), 100u);
    EXPECT_EQ(s->stderr_.size(), 100u);
    for (const double v : s->stderr_) EXPECT_GE(v, 0.0);
  }
  EXPECT_LT(e.max_norm_deviation, 1e-10);
  EXPECT_GE(e.min_lambda, -1e-10);
  EXPECT_LE(e.max_lambda, 1 + 1e-10);
  EXPECT_NEAR(eqw::total_probability(e.final_distribution), 1.0, 1e-10);
  EXPECT_GT(e.alpha_stderr, 0.0);
}

TEST(RunEnsemble, StandardErrorShrinksAsRootN) {
  auto c = make_config(1.5, CoinFamily::K, 100, 25, AveragingMode::AverageObservables);
  c.localization = false;
  std::vector<double> se;
  for (const std::int64_t n : {25, 100, 400}) {
    c.n_trajectories = n;
    se.push_back(eqw::run_ensemble(c).x2.stderr_.back());
  }
  // Quadrupling n halves the standard error; allow a factor of two.
  for (std::size_t i = 0; i + 1 < se.size(); ++i) {
    const double ratio = se[i] / se[i + 1];
    EXPECT_GT(ratio, 1.0) << "step " << i;
    EXPECT_LT(ratio, 4.0) << "step " << i;
  }
}

TEST(RunEnsemble, AlphaNanWhenFitImpossible) {
  // Nine points cannot support the fit.
  const auto e = eqw::run_ensemble(make_config(1.0, CoinFamily::H, 9, 3));
  EXPECT_TRUE(std::isnan(e.alpha));
  EXPECT_TRUE(std::isnan(e.alpha_stderr));
  EXPECT_EQ(e.x2.mean.size(), 9u);
}

TEST(RunEnsemble, SeedsAreIndependentStreams) {
  const eqw::MemoryKernel k(1e6, 50);
  const auto a = eqw::sample_jumps(k, 50, eqw::trajectory_seed(1, 0));
  const auto b = eqw::sample_jumps(k, 50, eqw::trajectory_seed(1, 1));
  int equal = 0;
  for (std::size_t i = 1; i < a.size(); ++i) equal += a[i] == b[i];
  // Under independence the expected number of coincidences is sum 1/s < 4.5.
  EXPECT_LT(equal, 12);
}

// ---------------------------------------------------------------------------
// Coin divergence and sweeps
// ---------------------------------------------------------------------------

TEST(JsdSeries, ZeroWithoutMemory) {
  const auto a = make_config(0.5, CoinFamily::H, 300, 1);
  const auto b = make_config(0.5, CoinFamily::K, 300, 1);
  for (const double v : eqw::jsd_series(a, b)) ASSERT_LT(v, 1e-12);
}

TEST(JsdSeries, PositiveWithMemory) {
  for (const auto mode : {AveragingMode::AverageDistributions, AveragingMode::AverageObservables}) {
    const auto a = make_config(1.3, CoinFamily::H, 100, 4, mode);
    const auto b = make_config(1.3, CoinFamily::K, 100, 4, mode);
    EXPECT_GT(eqw::jsd_series(a, b)[99], 0.01);
  }
}

TEST(JsdSeries, RejectsMismatchedRuns) {
  auto a = make_config(1.3, CoinFamily::H, 100, 4);
  auto b = make_config(1.2, CoinFamily::K, 100, 4);
  EXPECT_THROW(eqw::jsd_series(a, b), std::invalid_argument);
}

TEST(Sweep, SinglePointMatchesEnsemble) {
  const auto base = make_config(1.0, CoinFamily::K, 120, 6);
  const auto rows = eqw::sweep({{1.2}, {kQuarterPi}, {CoinFamily::H}}, base);
  ASSERT_EQ(rows.size(), 1u);
  auto c = base;
  c.q = 1.2;
  c.coin = CoinParams::symmetric(CoinFamily::H, kQuarterPi);
  const auto e = eqw::run_ensemble(c);
  EXPECT_EQ(rows[0].alpha, e.alpha);
  EXPECT_EQ(rows[0].shannon, e.shannon.mean.back());
  EXPECT_EQ(rows[0].entanglement, e.entanglement.mean.back());
  EXPECT_FALSE(rows[0].jsd_hk.has_value());
}

TEST(Sweep, StandardWalkBothCoins) {
  const auto base = make_config(0.5, CoinFamily::K, 1000, 1);
  const auto rows = eqw::sweep({{0.5}, {kQuarterPi}, {CoinFamily::H, CoinFamily::K}}, base);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.alpha, 2.0, 0.05);
    ASSERT_TRUE(r.jsd_hk.has_value());
    EXPECT_LT(*r.jsd_hk, 1e-12);
  }
}

TEST(Sweep, OrderIsQThenThetaThenCoin) {
  const auto base = make_config(1.0, CoinFamily::K, 20, 1);
  const auto rows = eqw::sweep({{0.5, 2.0}, {0.3, 0.6}, {CoinFamily::K, CoinFamily::H}}, base);
  ASSERT_EQ(rows.size(), 8u);
  EXPECT_EQ(rows[0].q, 0.5);
  EXPECT_EQ(rows[0].theta, 0.3);
  EXPECT_EQ(rows[0].coin, CoinFamily::K);
  EXPECT_EQ(rows[1].coin, CoinFamily::H);
  EXPECT_EQ(rows[2].theta, 0.6);
  EXPECT_EQ(rows[4].q, 2.0);
}

TEST(Sweep, EmptyGridRejected) {
  EXPECT_THROW(eqw::sweep({{}, {0.1}, {CoinFamily::K}}, make_config(1, CoinFamily::K, 10, 1)),
               std::invalid_argument);
}

TEST(Sweep, ExponentRisesAcrossUpperRange) {
  auto base = make_config(1.0, CoinFamily::K, 300, 40, AveragingMode::AverageObservables);
  base.localization = false;
  const auto rows = eqw::sweep({{0.6, 1.0, 1.5, 3.0, 10.0}, {kQuarterPi}, {CoinFamily::K}}, base);
  ASSERT_EQ(rows.size(), 5u);
  // Near-diffusive below q ~ 4/3, then climbing toward the cubic law.
  EXPECT_LT(rows[0].alpha, 1.5);
  EXPECT_GT(rows[1].alpha, 0.8);
  EXPECT_LT(rows[1].alpha, 1.3);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    const double slack = 2 * std::hypot(rows[i].alpha_stderr, rows[i - 1].alpha_stderr);
    EXPECT_GE(rows[i].alpha + slack, rows[i - 1].alpha) << "q=" << rows[i].q;
  }
  EXPECT_GT(rows[4].alpha, 2.7);
}

// ---------------------------------------------------------------------------
// Worker pool
// ---------------------------------------------------------------------------

TEST(ParallelFor, VisitsEveryIndexOnce) {
  std::vector<std::atomic<int>> hits(100);
  eqw::parallel_for(100, 4, [&](std::size_t i) { hits[i]++; });
  for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, RethrowsWorkerException) {
  EXPECT_THROW(eqw::parallel_for(50, 3,
                                 [](std::size_t i) {
                                   if (i == 17) throw std::runtime_error("boom");
                                 }),
               std::runtime_error);
}

TEST(ParallelFor, ResolvesZeroThreads) { EXPECT_GE(eqw::resolve_threads(0), 1u); }
