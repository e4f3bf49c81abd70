#pragma once

// Measurements on a walker state or its spatial distribution.

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "eqw/walk.hpp"

namespace eqw {

/// Default numerical cut-off for "nonzero probability".
inline constexpr double kOccupancyThreshold = 1e-9;

/// P(x) over the window [x_min, x_min + p.size() - 1] at time t.
struct SpatialDistribution {
  std::int64_t x_min = 0;
  std::vector<double> p;
  std::int64_t time = 0;

  std::int64_t x_max() const { return x_min + static_cast<std::int64_t>(p.size()) - 1; }
  double at(std::int64_t x) const {
    if (x < x_min || x > x_max()) return 0.0;
    return p[static_cast<std::size_t>(x - x_min)];
  }
};

/// Raised when a computed quantity leaves the range its algebra allows.
class InvariantViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class LogBase { Natural, Two };

SpatialDistribution distribution(const WalkerState& state);
void distribution_into(const WalkerState& state, SpatialDistribution& out);

double total_probability(const SpatialDistribution& dist);
double first_moment(const SpatialDistribution& dist);
double second_moment(const SpatialDistribution& dist);

/// (x - mean)^2 P(x) on the distribution's window.
std::vector<double> rqd_profile(const SpatialDistribution& dist);

/// -sum P log P, with 0 log 0 = 0.
double shannon_entropy(const SpatialDistribution& dist, LogBase base = LogBase::Natural);
double shannon_entropy(std::span<const double> p, LogBase base = LogBase::Natural);

double ipr(const SpatialDistribution& dist);

std::size_t occupancy(const SpatialDistribution& dist, double threshold = kOccupancyThreshold);

/// sum U log2(U / W) over the union of both windows. Throws
/// std::domain_error if some U(x) > 0 meets W(x) = 0.
double kld(const SpatialDistribution& u, const SpatialDistribution& w);

/// Jensen-Shannon dissimilarity in bits against the pointwise midpoint.
/// Windows may differ; missing sites count as zero probability.
double jsd(const SpatialDistribution& a, const SpatialDistribution& b);

/// Coin-space reduced density matrix [[g_a, g_ab], [conj(g_ab), g_b]].
struct ReducedDensityMatrix {
  double g_a = 0.0;
  double g_b = 0.0;
  std::complex<double> g_ab{};

  /// (lambda_minus, lambda_plus).
  std::pair<double, double> eigenvalues() const;
};

ReducedDensityMatrix reduced_density(const WalkerState& state);

/// Von Neumann entropy of the coin in bits. Throws InvariantViolation if the
/// discriminant is below -1e-10.
double entanglement_entropy(const ReducedDensityMatrix& rdm);

/// (t, mean square displacement) pairs with strictly increasing t.
struct VarianceSeries {
  std::vector<std::int64_t> t;
  std::vector<double> x2;

  void push(std::int64_t time, double value) {
    t.push_back(time);
    x2.push_back(value);
  }
  std::size_t size() const { return t.size(); }
};

/// Fraction of t_max bounding the fit, inclusive on both ends.
struct FitWindow {
  double lo = 0.1;
  double hi = 1.0;
};

/// Least-squares slope of log x2 against log t for points with
/// lo * t_max <= t <= hi * t_max, where t_max is the last time in the
/// series. Throws std::invalid_argument on fewer than 10 points in the
/// window or a nonpositive x2 inside it.
double fit_alpha(const VarianceSeries& series, FitWindow window = {});

/// Same fit for parallel arrays.
double fit_alpha(std::span<const std::int64_t> t, std::span<const double> x2,
                 FitWindow window = {});

}  // namespace eqw
