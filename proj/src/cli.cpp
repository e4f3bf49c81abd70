#include "eqw/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eqw/ensemble.hpp"
#include "eqw/netmap.hpp"
#include "eqw/output_table.hpp"
#include "eqw/simd.hpp"

namespace eqw::cli {
namespace {

namespace fs = std::filesystem;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }
double rad_to_deg(double rad) { return rad * 180.0 / std::numbers::pi; }

Cell opt_cell(const std::optional<double>& v) {
  if (v) return *v;
  return Missing{};
}

// Flags shared by every subcommand.
struct CommonFlags {
  std::string coin = "K";
  std::optional<double> phi_deg;
  std::int64_t tmax = 1000;
  std::int64_t ntraj = 1;
  std::uint64_t seed = 0;
  std::string avg_mode = "average-distributions";
  double threshold = kOccupancyThreshold;
  std::string fit_window = "0.1:1";
  std::string out = ".";
  std::string format = "csv";
  unsigned threads = 0;
  std::string isa = "auto";
  std::string entropy_base = "e";
  bool no_localization = false;
};

void add_common(CLI::App* app, CommonFlags& f, bool coin_flag) {
  if (coin_flag) {
    app->add_option("--coin", f.coin, "Coin family")->check(CLI::IsMember({"H", "K"}));
  }
  app->add_option("--phi", f.phi_deg, "Initial coin phase in degrees (default: symmetric)");
  app->add_option("--tmax", f.tmax, "Number of steps")->check(CLI::Range(2, 100000000));
  app->add_option("--ntraj", f.ntraj, "Trajectories in the ensemble")
      ->check(CLI::Range(1, 100000000));
  app->add_option("--seed", f.seed, "Master seed");
  app->add_option("--avg-mode", f.avg_mode, "Averaging mode")
      ->check(CLI::IsMember({"average-distributions", "average-observables"}));
  app->add_option("--threshold", f.threshold, "Occupancy threshold")
      ->check(CLI::PositiveNumber);
  app->add_option("--fit-window", f.fit_window, "Fit window as lo:hi fractions of tmax");
  app->add_option("--out", f.out, "Output directory");
  app->add_option("--format", f.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
  app->add_option("--threads", f.threads, "Worker threads (0 = hardware concurrency)");
  app->add_option("--isa", f.isa, "Kernel variant")
      ->check(CLI::IsMember({"auto", "scalar", "avx2"}));
  app->add_option("--entropy-base", f.entropy_base, "Logarithm base of the Shannon entropy")
      ->check(CLI::IsMember({"e", "2"}));
  app->add_flag("--no-localization", f.no_localization,
                "Skip the per-step Shannon/IPR/occupancy series");
}

FitWindow parse_fit_window(const std::string& text) {
  const std::size_t colon = text.find(':');
  if (colon == std::string::npos) throw UsageError("--fit-window expects lo:hi");
  FitWindow w;
  try {
    w.lo = parse_real(std::string_view(text).substr(0, colon));
    w.hi = parse_real(std::string_view(text).substr(colon + 1));
  } catch (const std::invalid_argument&) {
    throw UsageError("--fit-window expects lo:hi");
  }
  if (!(w.lo > 0.0) || !(w.hi >= w.lo) || w.hi > 1.0) {
    throw UsageError("--fit-window needs 0 < lo <= hi <= 1");
  }
  return w;
}

RunConfig make_config(const CommonFlags& f, double q, CoinFamily coin, double theta_deg) {
  RunConfig c;
  c.q = q;
  c.coin = CoinParams::symmetric(coin, deg_to_rad(theta_deg));
  if (f.phi_deg) c.coin.phi = deg_to_rad(*f.phi_deg);
  c.t_max = f.tmax;
  c.n_trajectories = f.ntraj;
  c.seed = f.seed;
  c.mode = parse_averaging_mode(f.avg_mode);
  c.threshold = f.threshold;
  c.fit_window = parse_fit_window(f.fit_window);
  c.entropy_base = f.entropy_base == "2" ? LogBase::Two : LogBase::Natural;
  c.localization = !f.no_localization;
  c.threads = f.threads;
  if (!std::isfinite(q) || q < kMinEntropicIndex) {
    throw UsageError("--q must be >= 0.5 (got " + format_real(q) + ")");
  }
  c.validate();
  return c;
}

void apply_isa(const CommonFlags& f) {
  if (f.isa == "auto") return;
  try {
    simd::force_isa(simd::parse_isa(f.isa));
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

fs::path write_table(const OutputTable& table, const CommonFlags& f, const std::string& stem) {
  fs::create_directories(f.out);
  const fs::path path = fs::path(f.out) / (stem + "." + f.format);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  if (f.format == "json") {
    table.write_json(os);
  } else {
    table.write_csv(os);
  }
  if (!os) throw std::runtime_error("failed writing " + path.string());
  return path;
}

void stamp(OutputTable& table, const std::string& command, const RunConfig& config) {
  table.set_meta("command", command);
  write_config_metadata(table, config);
}

int cmd_simulate(const CommonFlags& f, double q, double theta_deg, std::ostream& out) {
  const RunConfig config = make_config(f, q, parse_coin_family(f.coin.at(0)), theta_deg);
  const EnsembleResult r = run_ensemble(config);

  OutputTable variance({{"t", ColumnType::Integer},
                        {"x2", ColumnType::Real},
                        {"x2_stderr", ColumnType::Real}});
  stamp(variance, "simulate", config);
  variance.set_meta("alpha", format_real(r.alpha));
  variance.set_meta("alpha_stderr", format_real(r.alpha_stderr));
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    variance.add_row({r.t[i], r.x2.mean[i], r.x2.stderr_[i]});
  }

  OutputTable obs({{"t", ColumnType::Integer},
                   {"x2", ColumnType::Real},
                   {"x2_stderr", ColumnType::Real},
                   {"shannon", ColumnType::Real},
                   {"shannon_stderr", ColumnType::Real},
                   {"ipr", ColumnType::Real},
                   {"ipr_stderr", ColumnType::Real},
                   {"occupancy", ColumnType::Real},
                   {"occupancy_stderr", ColumnType::Real},
                   {"entanglement", ColumnType::Real},
                   {"entanglement_stderr", ColumnType::Real}});
  stamp(obs, "simulate", config);
  auto at = [](const SeriesStats& s, std::size_t i, bool mean) -> Cell {
    const auto& v = mean ? s.mean : s.stderr_;
    if (i >= v.size()) return Missing{};
    return v[i];
  };
  for (std::size_t i = 0; i < r.t.size(); ++i) {
    obs.add_row({r.t[i], r.x2.mean[i], r.x2.stderr_[i], at(r.shannon, i, true),
                 at(r.shannon, i, false), at(r.ipr, i, true), at(r.ipr, i, false),
                 at(r.occupancy, i, true), at(r.occupancy, i, false), r.entanglement.mean[i],
                 r.entanglement.stderr_[i]});
  }

  OutputTable dist({{"x", ColumnType::Integer}, {"p", ColumnType::Real}, {"rqd", ColumnType::Real}});
  stamp(dist, "simulate", config);
  dist.set_meta("time", std::to_string(r.final_distribution.time));
  const auto rqd = rqd_profile(r.final_distribution);
  for (std::size_t i = 0; i < r.final_distribution.p.size(); ++i) {
    dist.add_row({r.final_distribution.x_min + static_cast<std::int64_t>(i),
                  r.final_distribution.p[i], rqd[i]});
  }

  write_table(variance, f, "variance");
  write_table(obs, f, "observables");
  write_table(dist, f, "distribution");
  out << "alpha " << format_real(r.alpha) << " +- " << format_real(r.alpha_stderr) << '\n';
  return kSuccess;
}

int cmd_sweep(const CommonFlags& f, const std::vector<double>& qs,
              const std::vector<double>& thetas_deg, const std::vector<std::string>& coins,
              std::ostream& out) {
  if (qs.empty() || thetas_deg.empty() || coins.empty()) throw UsageError("sweep grid is empty");
  SweepGrid grid;
  grid.q = qs;
  for (const double th : thetas_deg) grid.theta.push_back(deg_to_rad(th));
  for (const auto& c : coins) {
    if (c != "H" && c != "K") throw UsageError("unknown coin '" + c + "'");
    grid.coins.push_back(parse_coin_family(c.at(0)));
  }
  // Validate every grid point before running any of them.
  for (const double q : qs) make_config(f, q, grid.coins.front(), thetas_deg.front());
  RunConfig base = make_config(f, qs.front(), grid.coins.front(), thetas_deg.front());
  std::optional<double> phase;
  if (f.phi_deg) phase = deg_to_rad(*f.phi_deg);

  const auto rows = sweep(grid, base, phase);
  OutputTable table({{"q", ColumnType::Real},
                     {"theta_deg", ColumnType::Real},
                     {"coin", ColumnType::Text},
                     {"alpha", ColumnType::Real},
                     {"alpha_stderr", ColumnType::Real},
                     {"shannon", ColumnType::Real},
                     {"ipr", ColumnType::Real},
                     {"occupancy", ColumnType::Real},
                     {"entanglement", ColumnType::Real},
                     {"jsd_hk", ColumnType::Real}});
  table.set_meta("command", "sweep");
  write_config_metadata(table, base);
  std::string qlist, tlist, clist;
  for (const double q : qs) qlist += (qlist.empty() ? "" : ";") + format_real(q);
  for (const double th : thetas_deg) tlist += (tlist.empty() ? "" : ";") + format_real(th);
  for (const auto& c : coins) clist += (clist.empty() ? "" : ";") + c;
  table.set_meta("grid_q", qlist);
  table.set_meta("grid_theta_deg", tlist);
  table.set_meta("grid_coins", clist);
  for (const auto& row : rows) {
    table.add_row({row.q, rad_to_deg(row.theta), std::string(1, coin_family_char(row.coin)),
                   row.alpha, row.alpha_stderr, row.shannon, row.ipr, row.occupancy,
                   row.entanglement, opt_cell(row.jsd_hk)});
  }
  write_table(table, f, "sweep");
  out << rows.size() << " sweep rows\n";
  return kSuccess;
}

int cmd_network(const CommonFlags& f, double q, double theta_deg,
                const std::vector<std::int64_t>& samples_in, std::ostream& out) {
  const RunConfig config = make_config(f, q, parse_coin_family(f.coin.at(0)), theta_deg);
  std::vector<std::int64_t> samples = samples_in;
  if (samples.empty()) {
    const std::int64_t stride = std::max<std::int64_t>(1, config.t_max / 20);
    for (std::int64_t t = stride; t < config.t_max; t += stride) samples.push_back(t);
    samples.push_back(config.t_max);
  }
  for (const std::int64_t s : samples) {
    if (s < 1 || s > config.t_max) {
      throw UsageError("sample time " + std::to_string(s) + " outside [1, " +
                       std::to_string(config.t_max) + "]");
    }
  }
  std::sort(samples.begin(), samples.end());
  samples.erase(std::unique(samples.begin(), samples.end()), samples.end());

  const MemoryKernel kernel(config.q, config.t_max);
  const auto n = static_cast<std::size_t>(config.n_trajectories);
  struct PerTrajectory {
    std::vector<GraphSample> samples;
    WalkGraph graph;
  };
  std::vector<PerTrajectory> results(n);
  parallel_for(n, resolve_threads(config.threads), [&](std::size_t k) {
    GraphBuilder builder(config.threshold);
    SpatialDistribution previous = distribution(initial_state(config.coin));
    std::size_t next = 0;
    TrajectoryOptions options;
    options.localization = false;
    options.observer = [&](std::int64_t t, std::int64_t jump, const WalkerState&,
                           const SpatialDistribution& current) {
      builder.add_step(t, previous, current, jump);
      previous = current;
      if (next < samples.size() && samples[next] == t) {
        results[k].samples.push_back(
            {t, degree_stats(builder.graph()), structural_stats(builder.graph())});
        ++next;
      }
    };
    run_trajectory(config, kernel, trajectory_seed(config.seed, k), options);
    results[k].graph = builder.take();
  });

  OutputTable series({{"traj", ColumnType::Integer},
                      {"t", ColumnType::Integer},
                      {"n_vertices", ColumnType::Integer},
                      {"n_edges", ColumnType::Integer},
                      {"mean_degree", ColumnType::Real},
                      {"std_degree", ColumnType::Real},
                      {"skewness", ColumnType::Real},
                      {"degree_entropy", ColumnType::Real},
                      {"avg_path_length", ColumnType::Real},
                      {"assortativity", ColumnType::Real}});
  stamp(series, "network", config);
  for (std::size_t k = 0; k < n; ++k) {
    for (const auto& s : results[k].samples) {
      series.add_row({static_cast<std::int64_t>(k), s.t,
                      static_cast<std::int64_t>(s.structure.n_vertices),
                      static_cast<std::int64_t>(s.structure.n_edges), s.degree.mean,
                      s.degree.stddev, opt_cell(s.degree.skewness), s.degree.entropy,
                      opt_cell(s.structure.average_path_length),
                      opt_cell(s.structure.assortativity)});
    }
  }

  // Degree distribution at t_max: first realisation and the trajectory mean.
  std::map<std::size_t, double> mean_hist;
  for (const auto& r : results) {
    for (const auto& [d, p] : degree_stats(r.graph).histogram) mean_hist[d] += p;
  }
  const auto first_hist = degree_stats(results.front().graph).histogram;
  OutputTable degrees({{"k", ColumnType::Integer},
                       {"p_traj0", ColumnType::Real},
                       {"p_mean", ColumnType::Real}});
  stamp(degrees, "network", config);
  for (const auto& [d, p] : mean_hist) {
    const auto it = first_hist.find(d);
    degrees.add_row({static_cast<std::int64_t>(d), it == first_hist.end() ? 0.0 : it->second,
                     p / static_cast<double>(n)});
  }

  fs::create_directories(f.out);
  for (std::size_t k = 0; k < n; ++k) {
    const std::string name = k == 0 ? "edges.txt" : "edges_" + std::to_string(k) + ".txt";
    std::ofstream os(fs::path(f.out) / name, std::ios::binary);
    if (!os) throw std::runtime_error("cannot write edge list " + name);
    results[k].graph.write_edge_list(os);
  }
  write_table(series, f, "network_series");
  write_table(degrees, f, "degree_distribution");
  out << "graph: " << results.front().graph.vertex_count() << " vertices, "
      << results.front().graph.edge_count() << " edges\n";
  return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulator for coined quantum walks with q-exponential jump lengths"};
  app.require_subcommand(1);

  CommonFlags sim_flags, sweep_flags, net_flags;
  double sim_q = 0.5, sim_theta = 45.0;
  std::vector<double> sweep_q, sweep_theta{45.0};
  std::vector<std::string> sweep_coins;
  double net_q = 0.5, net_theta = 45.0;
  std::vector<std::int64_t> net_samples;

  auto* simulate = app.add_subcommand("simulate", "Run an ensemble and write observable series");
  simulate->add_option("--q", sim_q, "Entropic index of the jump kernel")->required();
  simulate->add_option("--theta", sim_theta, "Coin angle in degrees");
  add_common(simulate, sim_flags, true);

  const CLI::Validator non_empty(
      [](const std::string& v) { return v.empty() ? std::string("empty list entry") : std::string(); },
      "NONEMPTY");
  auto* sweep_cmd = app.add_subcommand("sweep", "Diffusion exponent over a (q, theta, coin) grid");
  sweep_cmd->add_option("--q", sweep_q, "Comma-separated q values")
      ->delimiter(',')
      ->required()
      ->check(non_empty);
  sweep_cmd->add_option("--theta", sweep_theta, "Comma-separated coin angles in degrees")
      ->delimiter(',')
      ->check(non_empty);
  sweep_cmd->add_option("--coins,--coin", sweep_coins, "Comma-separated coin families")
      ->delimiter(',')
      ->check(non_empty);
  add_common(sweep_cmd, sweep_flags, false);

  auto* network = app.add_subcommand("network", "Build walk graphs and their statistics");
  network->add_option("--q", net_q, "Entropic index of the jump kernel")->required();
  network->add_option("--theta", net_theta, "Coin angle in degrees");
  network->add_option("--samples", net_samples, "Comma-separated sample times")->delimiter(',');
  add_common(network, net_flags, true);

  std::vector<const char*> argv;
  argv.reserve(args.size());
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kSuccess;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  try {
    if (simulate->parsed()) {
      apply_isa(sim_flags);
      return cmd_simulate(sim_flags, sim_q, sim_theta, out);
    }
    if (sweep_cmd->parsed()) {
      apply_isa(sweep_flags);
      if (sweep_coins.empty()) sweep_coins.push_back("K");
      return cmd_sweep(sweep_flags, sweep_q, sweep_theta, sweep_coins, out);
    }
    if (network->parsed()) {
      apply_isa(net_flags);
      return cmd_network(net_flags, net_q, net_theta, net_samples, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const InvariantViolation& e) {
    err << "numerical invariant violated: " << e.what() << '\n';
    return kInvariant;
  } catch (const std::invalid_argument& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}

}  // namespace eqw::cli
