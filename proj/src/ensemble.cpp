#include "eqw/ensemble.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>

#include "eqw/rng.hpp"

namespace eqw {
namespace {

constexpr double kNormTolerance = 1e-10;

// Advances one trajectory step by step and records its per-time observables.
class TrajectoryRunner {
 public:
  TrajectoryRunner(const RunConfig& config, const MemoryKernel& kernel, std::uint64_t seed,
                   bool localization, bool keep_distributions, bool need_distribution)
      : kernel_(kernel),
        coin_(coin_matrix(config.coin)),
        threshold_(config.threshold),
        base_(config.entropy_base),
        localization_(localization),
        keep_distributions_(keep_distributions),
        need_distribution_(need_distribution || localization || keep_distributions),
        walker_(initial_state(config.coin)),
        rng_(seed) {
    if (kernel.horizon() < config.t_max) {
      throw std::invalid_argument("memory kernel horizon shorter than t_max");
    }
    record_.seed = seed;
    const auto n = static_cast<std::size_t>(config.t_max);
    record_.jumps.reserve(n);
    record_.x2.reserve(n);
    record_.entanglement.reserve(n);
    record_.lambda_minus.reserve(n);
    record_.lambda_plus.reserve(n);
    record_.norm_deviation.reserve(n);
    if (localization_) {
      record_.shannon.reserve(n);
      record_.ipr.reserve(n);
      record_.occupancy.reserve(n);
    }
    distribution_into(walker_, dist_);
    if (keep_distributions_) record_.distributions.push_back(dist_);
  }

  void step() {
    const std::int64_t s = walker_.time() + 1;
    // The admissible interval at the first step is [1, 1].
    const std::int64_t jump = s == 1 ? 1 : kernel_.sample(rng_, s);
    const simd::StepStats stats =
        walker_.advance(coin_, jump, need_distribution_ ? &dist_.p : nullptr);
    dist_.x_min = walker_.x_min();
    dist_.time = walker_.time();

    const ReducedDensityMatrix rdm{stats.gram.g_a, stats.gram.g_b, stats.gram.g_ab};
    const double deviation = std::abs(rdm.g_a + rdm.g_b - 1.0);
    if (!(deviation <= kNormTolerance)) {
      throw InvariantViolation("norm drifted by " + std::to_string(deviation) + " at t=" +
                               std::to_string(s));
    }
    const auto [lm, lp] = rdm.eigenvalues();

    record_.jumps.push_back(jump);
    record_.x2.push_back(stats.moments.m2);
    record_.entanglement.push_back(entanglement_entropy(rdm));
    record_.lambda_minus.push_back(lm);
    record_.lambda_plus.push_back(lp);
    record_.norm_deviation.push_back(deviation);
    if (localization_) {
      record_.shannon.push_back(shannon_entropy(dist_, base_));
      record_.ipr.push_back(ipr(dist_));
      record_.occupancy.push_back(static_cast<double>(occupancy(dist_, threshold_)));
    }
    if (keep_distributions_) record_.distributions.push_back(dist_);
  }

  const WalkerState& walker() const { return walker_; }
  const SpatialDistribution& distribution() const { return dist_; }
  TrajectoryRecord& record() { return record_; }

  TrajectoryRecord finish() {
    if (!need_distribution_) distribution_into(walker_, dist_);
    record_.final_distribution = dist_;
    return std::move(record_);
  }

 private:
  const MemoryKernel& kernel_;
  CoinMatrix coin_;
  double threshold_;
  LogBase base_;
  bool localization_;
  bool keep_distributions_;
  bool need_distribution_;
  WalkerState walker_;
  Rng rng_;
  SpatialDistribution dist_;
  TrajectoryRecord record_;
};

// Running sum of distributions over a growing union window.
class DistributionSum {
 public:
  void reset(std::int64_t lo, std::int64_t hi) {
    x_min_ = lo;
    sum_.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  }

  void add(const SpatialDistribution& d) {
    if (sum_.empty()) {
      reset(d.x_min, d.x_max());
    } else if (d.x_min < x_min_ || d.x_max() > x_max()) {
      const std::int64_t lo = std::min(x_min_, d.x_min);
      const std::int64_t hi = std::max(x_max(), d.x_max());
      std::vector<double> grown(static_cast<std::size_t>(hi - lo + 1), 0.0);
      std::copy(sum_.begin(), sum_.end(), grown.begin() + (x_min_ - lo));
      sum_.swap(grown);
      x_min_ = lo;
    }
    const auto offset = static_cast<std::size_t>(d.x_min - x_min_);
    for (std::size_t i = 0; i < d.p.size(); ++i) sum_[offset + i] += d.p[i];
  }

  SpatialDistribution mean(std::int64_t count, std::int64_t time) const {
    SpatialDistribution out;
    out.x_min = x_min_;
    out.time = time;
    out.p = sum_;
    const double inv = 1.0 / static_cast<double>(count);
    if (count != 1) {
      for (double& v : out.p) v *= inv;
    }
    return out;
  }

 private:
  std::int64_t x_max() const { return x_min_ + static_cast<std::int64_t>(sum_.size()) - 1; }

  std::int64_t x_min_ = 0;
  std::vector<double> sum_;
};

// Mean and standard error across trajectories, per time index, summing in
// trajectory order.
SeriesStats across(const std::vector<TrajectoryRecord>& records,
                   std::vector<double> TrajectoryRecord::*field, std::size_t length) {
  SeriesStats out;
  out.mean.assign(length, 0.0);
  out.stderr_.assign(length, 0.0);
  const double n = static_cast<double>(records.size());
  for (const auto& r : records) {
    const auto& v = r.*field;
    for (std::size_t i = 0; i < length; ++i) out.mean[i] += v[i];
  }
  for (double& m : out.mean) m /= n;
  if (records.size() > 1) {
    for (const auto& r : records) {
      const auto& v = r.*field;
      for (std::size_t i = 0; i < length; ++i) {
        const double d = v[i] - out.mean[i];
        out.stderr_[i] += d * d;
      }
    }
    for (double& s : out.stderr_) s = std::sqrt(s / (n - 1.0) / n);
  }
  return out;
}

double jackknife_alpha_stderr(const std::vector<TrajectoryRecord>& records,
                              const std::vector<std::int64_t>& t, const std::vector<double>& mean,
                              FitWindow window) {
  const std::size_t n = records.size();
  if (n < 2) return 0.0;
  const double nn = static_cast<double>(n);
  std::vector<double> alphas(n);
  std::vector<double> loo(mean.size());
  for (std::size_t k = 0; k < n; ++k) {
    const auto& xk = records[k].x2;
    for (std::size_t i = 0; i < mean.size(); ++i) loo[i] = (mean[i] * nn - xk[i]) / (nn - 1.0);
    alphas[k] = fit_alpha(t, loo, window);
  }
  double avg = 0.0;
  for (double a : alphas) avg += a;
  avg /= nn;
  double ss = 0.0;
  for (double a : alphas) ss += (a - avg) * (a - avg);
  return std::sqrt((nn - 1.0) / nn * ss);
}

void summarise_records(EnsembleResult& result, const std::vector<TrajectoryRecord>& records) {
  const auto len = static_cast<std::size_t>(result.config.t_max);
  result.x2 = across(records, &TrajectoryRecord::x2, len);
  result.entanglement = across(records, &TrajectoryRecord::entanglement, len);
  double max_dev = 0.0, min_l = 1.0, max_l = 0.0, max_sum_dev = 0.0;
  for (const auto& r : records) {
    for (double d : r.norm_deviation) max_dev = std::max(max_dev, d);
    for (double l : r.lambda_minus) min_l = std::min(min_l, l);
    for (double l : r.lambda_plus) max_l = std::max(max_l, l);
    for (std::size_t i = 0; i < r.lambda_plus.size(); ++i)
      max_sum_dev = std::max(max_sum_dev, std::abs(r.lambda_plus[i] + r.lambda_minus[i] - 1.0));
  }
  result.max_norm_deviation = max_dev;
  result.min_lambda = min_l;
  result.max_lambda = max_l;
  result.max_lambda_sum_deviation = max_sum_dev;
  try {
    result.alpha = fit_alpha(result.t, result.x2.mean, result.config.fit_window);
    result.alpha_stderr =
        jackknife_alpha_stderr(records, result.t, result.x2.mean, result.config.fit_window);
  } catch (const std::invalid_argument&) {
    // Too short a run, or a walk that refocuses onto the origin.
    result.alpha = std::numeric_limits<double>::quiet_NaN();
    result.alpha_stderr = std::numeric_limits<double>::quiet_NaN();
  }
}

// Lockstep execution: every trajectory advances to time t before any goes
// to t + 1, so averaged distributions can be formed at each step.
template <typename PerStep>
std::vector<TrajectoryRecord> run_lockstep(const RunConfig& config, const MemoryKernel& kernel,
                                           std::size_t first, std::size_t count,
                                           bool localization, PerStep&& per_step) {
  std::vector<TrajectoryRunner> runners;
  runners.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    runners.emplace_back(config, kernel, trajectory_seed(config.seed, first + i), localization,
                         false, true);
  }
  const unsigned threads = resolve_threads(config.threads);
  for (std::int64_t t = 1; t <= config.t_max; ++t) {
    parallel_for(count, threads, [&](std::size_t i) { runners[i].step(); });
    per_step(t, runners);
  }
  std::vector<TrajectoryRecord> records;
  records.reserve(count);
  for (auto& r : runners) records.push_back(r.finish());
  return records;
}

}  // namespace

std::string_view averaging_mode_name(AveragingMode mode) {
  return mode == AveragingMode::AverageDistributions ? "average-distributions"
                                                     : "average-observables";
}

AveragingMode parse_averaging_mode(std::string_view name) {
  if (name == "average-distributions" || name == "distributions") {
    return AveragingMode::AverageDistributions;
  }
  if (name == "average-observables" || name == "observables") {
    return AveragingMode::AverageObservables;
  }
  throw std::invalid_argument("unknown averaging mode '" + std::string(name) + "'");
}

void RunConfig::validate() const {
  if (!std::isfinite(q) || q < kMinEntropicIndex) {
    throw std::invalid_argument("q must be finite and >= 0.5");
  }
  if (t_max < 2) throw std::invalid_argument("t_max must be >= 2");
  if (n_trajectories < 1) throw std::invalid_argument("n_trajectories must be >= 1");
  if (!(threshold > 0.0)) throw std::invalid_argument("occupancy threshold must be > 0");
  if (!std::isfinite(coin.theta) || !std::isfinite(coin.phi)) {
    throw std::invalid_argument("coin angles must be finite");
  }
}

unsigned resolve_threads(unsigned requested) {
  if (requested != 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(n);
      }
    }
  };
  std::vector<std::jthread> pool;
  pool.reserve(workers - 1);
  for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  pool.clear();
  if (error) std::rethrow_exception(error);
}

std::vector<std::int64_t> sample_jumps(const MemoryKernel& kernel, std::int64_t t_max,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::vector<std::int64_t> jumps;
  jumps.reserve(static_cast<std::size_t>(t_max));
  for (std::int64_t s = 1; s <= t_max; ++s) jumps.push_back(s == 1 ? 1 : kernel.sample(rng, s));
  return jumps;
}

TrajectoryRecord run_trajectory(const RunConfig& config, const MemoryKernel& kernel,
                                std::uint64_t seed, const TrajectoryOptions& options) {
  config.validate();
  TrajectoryRunner runner(config, kernel, seed, options.localization,
                          options.keep_distributions, static_cast<bool>(options.observer));
  for (std::int64_t t = 1; t <= config.t_max; ++t) {
    runner.step();
    if (options.observer) {
      options.observer(t, runner.record().jumps.back(), runner.walker(), runner.distribution());
    }
  }
  return runner.finish();
}

TrajectoryRecord run_trajectory(const RunConfig& config, std::uint64_t seed,
                                const TrajectoryOptions& options) {
  config.validate();
  const MemoryKernel kernel(config.q, config.t_max);
  return run_trajectory(config, kernel, seed, options);
}

VarianceSeries EnsembleResult::variance_series() const {
  VarianceSeries s;
  for (std::size_t i = 0; i < t.size(); ++i) s.push(t[i], x2.mean[i]);
  return s;
}

EnsembleResult run_ensemble(const RunConfig& config) {
  config.validate();
  const MemoryKernel kernel(config.q, config.t_max);
  const auto n = static_cast<std::size_t>(config.n_trajectories);
  const auto len = static_cast<std::size_t>(config.t_max);

  EnsembleResult result;
  result.config = config;
  result.t.resize(len);
  for (std::size_t i = 0; i < len; ++i) result.t[i] = static_cast<std::int64_t>(i + 1);

  std::vector<TrajectoryRecord> records;
  records.reserve(n);

  if (config.mode == AveragingMode::AverageDistributions) {
    result.shannon.mean.assign(len, 0.0);
    result.ipr.mean.assign(len, 0.0);
    result.occupancy.mean.assign(len, 0.0);
    SpatialDistribution averaged;
    auto per_step = [&](std::int64_t t, std::vector<TrajectoryRunner>& runners) {
      std::int64_t lo = runners.front().distribution().x_min;
      std::int64_t hi = runners.front().distribution().x_max();
      for (const auto& r : runners) {
        lo = std::min(lo, r.distribution().x_min);
        hi = std::max(hi, r.distribution().x_max());
      }
      DistributionSum sum;
      sum.reset(lo, hi);
      for (const auto& r : runners) sum.add(r.distribution());
      averaged = sum.mean(static_cast<std::int64_t>(runners.size()), t);
      if (config.localization) {
        const auto i = static_cast<std::size_t>(t - 1);
        result.shannon.mean[i] = shannon_entropy(averaged, config.entropy_base);
        result.ipr.mean[i] = ipr(averaged);
        result.occupancy.mean[i] = static_cast<double>(occupancy(averaged, config.threshold));
      }
    };
    records = run_lockstep(config, kernel, 0, n, false, per_step);
    result.shannon.stderr_.assign(len, 0.0);
    result.ipr.stderr_.assign(len, 0.0);
    result.occupancy.stderr_.assign(len, 0.0);
    result.final_distribution = std::move(averaged);
  } else {
    // Trajectories are independent here; run them in blocks to bound the
    // number of live walkers and fold each block in index order.
    const unsigned threads = resolve_threads(config.threads);
    const std::size_t block = std::max<std::size_t>(threads, 1);
    DistributionSum final_sum;
    for (std::size_t first = 0; first < n; first += block) {
      const std::size_t count = std::min(block, n - first);
      std::vector<TrajectoryRecord> batch(count);
      TrajectoryOptions options;
      options.localization = config.localization;
      parallel_for(count, threads, [&](std::size_t i) {
        batch[i] = run_trajectory(config, kernel, trajectory_seed(config.seed, first + i), options);
      });
      for (auto& r : batch) {
        final_sum.add(r.final_distribution);
        r.final_distribution = {};
        records.push_back(std::move(r));
      }
    }
    if (config.localization) {
      result.shannon = across(records, &TrajectoryRecord::shannon, len);
      result.ipr = across(records, &TrajectoryRecord::ipr, len);
      result.occupancy = across(records, &TrajectoryRecord::occupancy, len);
    }
    result.final_distribution = final_sum.mean(config.n_trajectories, config.t_max);
  }

  summarise_records(result, records);
  return result;
}

std::vector<double> jsd_series(const RunConfig& a, const RunConfig& b) {
  a.validate();
  b.validate();
  if (a.q != b.q || a.t_max != b.t_max || a.seed != b.seed ||
      a.n_trajectories != b.n_trajectories) {
    throw std::invalid_argument("jsd_series: configurations must share q, t_max, seed and size");
  }
  const MemoryKernel kernel(a.q, a.t_max);
  const auto n = static_cast<std::size_t>(a.n_trajectories);
  const auto len = static_cast<std::size_t>(a.t_max);
  std::vector<double> out(len, 0.0);

  std::vector<TrajectoryRunner> ra, rb;
  ra.reserve(n);
  rb.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = trajectory_seed(a.seed, i);
    ra.emplace_back(a, kernel, seed, false, false, true);
    rb.emplace_back(b, kernel, seed, false, false, true);
  }
  const unsigned threads = resolve_threads(a.threads);
  std::vector<double> per_pair(n);
  for (std::int64_t t = 1; t <= a.t_max; ++t) {
    parallel_for(2 * n, threads, [&](std::size_t i) { (i < n ? ra[i] : rb[i - n]).step(); });
    const auto idx = static_cast<std::size_t>(t - 1);
    if (a.mode == AveragingMode::AverageDistributions) {
      DistributionSum sa, sb;
      for (std::size_t i = 0; i < n; ++i) {
        sa.add(ra[i].distribution());
        sb.add(rb[i].distribution());
      }
      out[idx] = jsd(sa.mean(a.n_trajectories, t), sb.mean(b.n_trajectories, t));
    } else {
      parallel_for(n, threads, [&](std::size_t i) {
        per_pair[i] = jsd(ra[i].distribution(), rb[i].distribution());
      });
      double s = 0.0;
      for (double v : per_pair) s += v;
      out[idx] = s / static_cast<double>(n);
    }
  }
  return out;
}

std::vector<SweepRow> sweep(const SweepGrid& grid, const RunConfig& base,
                            std::optional<double> phase_override) {
  if (grid.size() == 0) throw std::invalid_argument("sweep grid is empty");
  std::vector<SweepRow> rows;
  rows.reserve(grid.size());
  for (const double q : grid.q) {
    for (const double theta : grid.theta) {
      const std::size_t first = rows.size();
      const EnsembleResult* h_result = nullptr;
      const EnsembleResult* k_result = nullptr;
      std::vector<EnsembleResult> results;
      results.reserve(grid.coins.size());
      for (const CoinFamily coin : grid.coins) {
        RunConfig cfg = base;
        cfg.q = q;
        cfg.coin = CoinParams::symmetric(coin, theta);
        if (phase_override) cfg.coin.phi = *phase_override;
        results.push_back(run_ensemble(cfg));
        const EnsembleResult& r = results.back();
        const std::size_t last = static_cast<std::size_t>(cfg.t_max - 1);
        SweepRow row;
        row.q = q;
        row.theta = theta;
        row.coin = coin;
        row.alpha = r.alpha;
        row.alpha_stderr = r.alpha_stderr;
        if (cfg.localization) {
          row.shannon = r.shannon.mean[last];
          row.ipr = r.ipr.mean[last];
          row.occupancy = r.occupancy.mean[last];
        } else {
          row.shannon = shannon_entropy(r.final_distribution, cfg.entropy_base);
          row.ipr = ipr(r.final_distribution);
          row.occupancy = static_cast<double>(occupancy(r.final_distribution, cfg.threshold));
        }
        row.entanglement = r.entanglement.mean[last];
        rows.push_back(row);
      }
      for (const auto& r : results) {
        if (r.config.coin.family == CoinFamily::H && !h_result) h_result = &r;
        if (r.config.coin.family == CoinFamily::K && !k_result) k_result = &r;
      }
      if (h_result && k_result) {
        const double d = jsd(h_result->final_distribution, k_result->final_distribution);
        for (std::size_t i = first; i < rows.size(); ++i) rows[i].jsd_hk = d;
      }
    }
  }
  return rows;
}

}  // namespace eqw
