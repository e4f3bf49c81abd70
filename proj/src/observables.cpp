#include "eqw/observables.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace eqw {
namespace {

// Slack allowed on the coin-matrix discriminant before it counts as an error.
constexpr double kDiscriminantSlack = 1e-10;

double log_in(double v, LogBase base) { return base == LogBase::Two ? std::log2(v) : std::log(v); }

}  // namespace

SpatialDistribution distribution(const WalkerState& state) {
  SpatialDistribution out;
  distribution_into(state, out);
  return out;
}

void distribution_into(const WalkerState& state, SpatialDistribution& out) {
  out.x_min = state.x_min();
  out.time = state.time();
  state.probabilities(out.p);
}

double total_probability(const SpatialDistribution& dist) {
  return simd::active_kernels().moments(dist.p.data(), dist.p.size(), 0.0).m0;
}

double first_moment(const SpatialDistribution& dist) {
  return simd::active_kernels()
      .moments(dist.p.data(), dist.p.size(), static_cast<double>(dist.x_min))
      .m1;
}

double second_moment(const SpatialDistribution& dist) {
  return simd::active_kernels()
      .moments(dist.p.data(), dist.p.size(), static_cast<double>(dist.x_min))
      .m2;
}

std::vector<double> rqd_profile(const SpatialDistribution& dist) {
  const double mean = first_moment(dist);
  std::vector<double> out(dist.p.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double d = static_cast<double>(dist.x_min + static_cast<std::int64_t>(i)) - mean;
    out[i] = d * d * dist.p[i];
  }
  return out;
}

double shannon_entropy(std::span<const double> p, LogBase base) {
  double s = 0.0;
  for (const double v : p) {
    if (v > 0.0) s -= v * log_in(v, base);
  }
  return s;
}

double shannon_entropy(const SpatialDistribution& dist, LogBase base) {
  return shannon_entropy(std::span<const double>(dist.p), base);
}

double ipr(const SpatialDistribution& dist) {
  return 1.0 / simd::active_kernels().sum_squares(dist.p.data(), dist.p.size());
}

std::size_t occupancy(const SpatialDistribution& dist, double threshold) {
  return simd::active_kernels().count_above(dist.p.data(), dist.p.size(), threshold);
}

double kld(const SpatialDistribution& u, const SpatialDistribution& w) {
  const std::int64_t lo = std::min(u.x_min, w.x_min);
  const std::int64_t hi = std::max(u.x_max(), w.x_max());
  double s = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double ux = u.at(x);
    if (ux <= 0.0) continue;
    const double wx = w.at(x);
    if (wx <= 0.0) {
      throw std::domain_error("KLD undefined: U(" + std::to_string(x) + ") > 0 where W is zero");
    }
    s += ux * std::log2(ux / wx);
  }
  return s;
}

double jsd(const SpatialDistribution& a, const SpatialDistribution& b) {
  const std::int64_t lo = std::min(a.x_min, b.x_min);
  const std::int64_t hi = std::max(a.x_max(), b.x_max());
  double s = 0.0;
  for (std::int64_t x = lo; x <= hi; ++x) {
    const double pa = a.at(x);
    const double pb = b.at(x);
    const double m = 0.5 * (pa + pb);
    if (m <= 0.0) continue;
    // Both terms share the midpoint, so the sum is symmetric in (a, b).
    const double ta = pa > 0.0 ? pa * std::log2(pa / m) : 0.0;
    const double tb = pb > 0.0 ? pb * std::log2(pb / m) : 0.0;
    s += ta + tb;
  }
  return std::clamp(0.5 * s, 0.0, 1.0);
}

std::pair<double, double> ReducedDensityMatrix::eigenvalues() const {
  double disc = 1.0 - 4.0 * g_a * g_b + 4.0 * std::norm(g_ab);
  if (disc < -kDiscriminantSlack || disc > 1.0 + kDiscriminantSlack) {
    throw InvariantViolation("coin density matrix discriminant out of range: " +
                             std::to_string(disc));
  }
  disc = std::clamp(disc, 0.0, 1.0);
  const double half_root = 0.5 * std::sqrt(disc);
  return {0.5 - half_root, 0.5 + half_root};
}

ReducedDensityMatrix reduced_density(const WalkerState& state) {
  const auto g = simd::active_kernels().coin_gram(state.left().data(), state.right().data(),
                                                  state.size());
  return {g.g_a, g.g_b, g.g_ab};
}

double entanglement_entropy(const ReducedDensityMatrix& rdm) {
  const auto [lm, lp] = rdm.eigenvalues();
  double s = 0.0;
  if (lm > 0.0) s -= lm * std::log2(lm);
  if (lp > 0.0) s -= lp * std::log2(lp);
  return s;
}

double fit_alpha(std::span<const std::int64_t> t, std::span<const double> x2, FitWindow window) {
  if (t.size() != x2.size()) throw std::invalid_argument("fit_alpha: length mismatch");
  if (t.empty()) throw std::invalid_argument("fit_alpha: empty series");
  if (!(window.lo > 0.0) || window.hi < window.lo) {
    throw std::invalid_argument("fit_alpha: window must satisfy 0 < lo <= hi");
  }
  const double t_max = static_cast<double>(t.back());
  const double lo = window.lo * t_max;
  const double hi = window.hi * t_max;

  std::vector<double> u, v;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = static_cast<double>(t[i]);
    if (ti < lo || ti > hi) continue;
    if (!(x2[i] > 0.0)) {
      throw std::invalid_argument("fit_alpha: nonpositive second moment at t=" +
                                  std::to_string(t[i]));
    }
    u.push_back(std::log(ti));
    v.push_back(std::log(x2[i]));
  }
  if (u.size() < 10) {
    throw std::invalid_argument("fit_alpha: " + std::to_string(u.size()) +
                                " points in window, need at least 10");
  }
  const double n = static_cast<double>(u.size());
  double mu = 0.0, mv = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    mu += u[i];
    mv += v[i];
  }
  mu /= n;
  mv /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    sxy += (u[i] - mu) * (v[i] - mv);
    sxx += (u[i] - mu) * (u[i] - mu);
  }
  return sxy / sxx;
}

double fit_alpha(const VarianceSeries& series, FitWindow window) {
  return fit_alpha(series.t, series.x2, window);
}

}  // namespace eqw
