#pragma once

// Seeded stochastic trajectories and their aggregation.
//
// Trajectory i of a run uses the stream trajectory_seed(master, i); every
// reduction runs in trajectory-index order, so results do not depend on the
// number of worker threads.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "eqw/memory_kernel.hpp"
#include "eqw/observables.hpp"
#include "eqw/walk.hpp"

namespace eqw {

enum class AveragingMode {
  // Localisation measures on the trajectory-averaged P_t(x).
  AverageDistributions,
  // Localisation measures per trajectory, then averaged.
  AverageObservables,
};

std::string_view averaging_mode_name(AveragingMode mode);
AveragingMode parse_averaging_mode(std::string_view name);

struct RunConfig {
  double q = 0.5;
  CoinParams coin = CoinParams::symmetric(CoinFamily::K, 0.7853981633974483);
  std::int64_t t_max = 1000;
  std::int64_t n_trajectories = 1;
  std::uint64_t seed = 0;
  AveragingMode mode = AveragingMode::AverageDistributions;
  double threshold = kOccupancyThreshold;
  FitWindow fit_window{};
  LogBase entropy_base = LogBase::Natural;

  // Record S, IPR and occupancy series. Turning this off skips the
  // per-step log pass, which dominates the cost of large-q runs.
  bool localization = true;
  // Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;

  /// Throws std::invalid_argument when the configuration is unusable.
  void validate() const;
};

struct TrajectoryRecord {
  std::uint64_t seed = 0;
  // jumps[s-1] is the jump applied on step s (time s-1 -> s); jumps[0] = 1.
  std::vector<std::int64_t> jumps;

  // Per-time series; index t-1 holds time t = 1..t_max.
  std::vector<double> x2;
  std::vector<double> shannon;
  std::vector<double> ipr;
  std::vector<double> occupancy;
  std::vector<double> entanglement;
  std::vector<double> lambda_minus;
  std::vector<double> lambda_plus;
  std::vector<double> norm_deviation;

  SpatialDistribution final_distribution;
  // P_0..P_t_max when requested via keep_distributions.
  std::vector<SpatialDistribution> distributions;

  std::int64_t t_max() const { return static_cast<std::int64_t>(jumps.size()); }
};

/// Called after each step with the new time, the jump used and the state.
using StepObserver = std::function<void(std::int64_t t, std::int64_t jump, const WalkerState&,
                                        const SpatialDistribution&)>;

struct TrajectoryOptions {
  bool keep_distributions = false;
  bool localization = true;
  StepObserver observer;
};

/// One realisation. Throws InvariantViolation if the norm drifts by more than
/// 1e-10 or the coin density matrix becomes inconsistent.
TrajectoryRecord run_trajectory(const RunConfig& config, std::uint64_t trajectory_seed,
                                const TrajectoryOptions& options = {});

/// Same, sharing a prebuilt kernel table (horizon >= config.t_max).
TrajectoryRecord run_trajectory(const RunConfig& config, const MemoryKernel& kernel,
                                std::uint64_t trajectory_seed,
                                const TrajectoryOptions& options = {});

/// Jump sequence only, identical to the one run_trajectory would use.
std::vector<std::int64_t> sample_jumps(const MemoryKernel& kernel, std::int64_t t_max,
                                       std::uint64_t trajectory_seed);

struct SeriesStats {
  std::vector<double> mean;
  std::vector<double> stderr_;  // standard error of the mean; 0 for n = 1
};

struct EnsembleResult {
  RunConfig config;
  std::vector<std::int64_t> t;  // 1..t_max
  SeriesStats x2;
  SeriesStats shannon;
  SeriesStats ipr;
  SeriesStats occupancy;
  SeriesStats entanglement;
  SpatialDistribution final_distribution;  // trajectory-averaged P at t_max
  double alpha = 0.0;
  double alpha_stderr = 0.0;  // delete-one jackknife over trajectories
  double max_norm_deviation = 0.0;
  double min_lambda = 0.0;
  double max_lambda = 0.0;
  double max_lambda_sum_deviation = 0.0;  // max_t |lambda+ + lambda- - 1|

  VarianceSeries variance_series() const;
};

EnsembleResult run_ensemble(const RunConfig& config);

/// Per-time JSD between two walks that share q, t_max, seed and ensemble
/// size (so their jump sequences coincide) but differ in the coin. In
/// AverageDistributions mode the divergence is taken between averaged
/// distributions, otherwise it is averaged over trajectory pairs.
std::vector<double> jsd_series(const RunConfig& a, const RunConfig& b);

struct SweepGrid {
  std::vector<double> q;
  std::vector<double> theta;  // radians
  std::vector<CoinFamily> coins;

  std::size_t size() const { return q.size() * theta.size() * coins.size(); }
};

struct SweepRow {
  double q = 0.0;
  double theta = 0.0;
  CoinFamily coin = CoinFamily::K;
  double alpha = 0.0;
  double alpha_stderr = 0.0;
  double shannon = 0.0;
  double ipr = 0.0;
  double occupancy = 0.0;
  double entanglement = 0.0;
  // Divergence between the H and K final distributions at the same (q, theta)
  // when both coins are in the grid.
  std::optional<double> jsd_hk;
};

/// One row per grid point, ordered q-major, then theta, then coin. The phase
/// of each point is the coin family's symmetric default unless
/// `phase_override` is set.
std::vector<SweepRow> sweep(const SweepGrid& grid, const RunConfig& base,
                            std::optional<double> phase_override = std::nullopt);

unsigned resolve_threads(unsigned requested);

/// Runs fn(i) for i in [0, n) on up to `threads` workers. The first
/// exception thrown is rethrown after all workers finish.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace eqw
