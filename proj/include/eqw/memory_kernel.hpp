#pragma once

// Jump-length distribution: a discretised q-exponential over {1..t},
//
//   P(k) = C_t [1 - (1 - q) k]_+^{1/(1-q)},   k = 1..t,
//
// with q = 1/2 giving unit steps only and q -> infinity the uniform law.

#include <cstdint>
#include <span>
#include <vector>

#include "eqw/rng.hpp"

namespace eqw {

/// Smallest admissible entropic index.
inline constexpr double kMinEntropicIndex = 0.5;

/// exp_q(-k) without normalisation; 0 outside the compact support for q < 1.
double q_exponential_decay(double q, double k);

/// Normalised weights for k = 1..t (index 0 holds k = 1).
std::vector<double> kernel_weights(double q, std::int64_t t);

class MemoryKernel {
 public:
  /// Table for horizons up to `t`. Throws std::invalid_argument for
  /// q < 1/2, non-finite q, or t < 1.
  MemoryKernel(double q, std::int64_t t);

  double q() const { return q_; }
  std::int64_t horizon() const { return static_cast<std::int64_t>(raw_.size()); }

  /// Normalised weights on {1..horizon()}.
  std::span<const double> weights() const { return weights_; }
  /// Normalised cumulative weights; cdf()[k-1] = P(jump <= k).
  std::span<const double> cdf() const { return cdf_; }

  /// Weight of jump k when the distribution is truncated to {1..t}.
  double weight(std::int64_t k, std::int64_t t) const;

  /// Inverse-CDF lookup for the full horizon.
  std::int64_t sample(double u) const { return sample(u, horizon()); }

  /// Inverse-CDF lookup for the distribution restricted to {1..t}, t <= horizon().
  /// Returns the smallest k with prefix(k) > u * prefix(t), u in [0, 1).
  std::int64_t sample(double u, std::int64_t t) const;

  std::int64_t sample(Rng& rng, std::int64_t t) const { return sample(rng.uniform(), t); }

  /// Largest k with nonzero weight within the horizon.
  std::int64_t support_max() const { return support_max_; }

 private:
  double q_;
  std::vector<double> raw_;     // unnormalised exp_q(-k)
  std::vector<double> prefix_;  // running sums of raw_
  std::vector<double> weights_;
  std::vector<double> cdf_;
  std::int64_t support_max_ = 1;
};

}  // namespace eqw
