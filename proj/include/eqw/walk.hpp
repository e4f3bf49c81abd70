#pragma once

// Discrete-time coined walk on Z with a variable jump length per step.
//
// The state is a pair of scalar fields (psi_L, psi_R) stored densely over an
// integer window [x_min, x_max]. One step applies the coin sitewise and then
// translates psi_L by +jump and psi_R by -jump:
//
//   (S psi)(x) = (psi_L(x - jump), psi_R(x + jump))

#include <complex>
#include <cstdint>
#include <span>
#include <vector>

#include "eqw/simd.hpp"

namespace eqw {

using cplx = std::complex<double>;

enum class CoinFamily {
  H,  // [[cos, sin], [sin, -cos]]
  K,  // [[cos, i sin], [i sin, cos]]
};

struct CoinParams {
  CoinFamily family = CoinFamily::K;
  double theta = 0.0;  // radians
  double phi = 0.0;    // relative phase of the initial coin state, radians

  /// Phase that makes P_t(x) symmetric: pi/2 for H, 0 for K.
  static double symmetric_phase(CoinFamily family);

  static CoinParams symmetric(CoinFamily family, double theta) {
    return {family, theta, symmetric_phase(family)};
  }
};

char coin_family_char(CoinFamily family);
CoinFamily parse_coin_family(char c);

using CoinMatrix = simd::Mat2;

CoinMatrix coin_matrix(CoinFamily family, double theta);
inline CoinMatrix coin_matrix(const CoinParams& p) { return coin_matrix(p.family, p.theta); }

class WalkerState {
 public:
  /// Single-site state at x = 0 with coin components (l, r).
  WalkerState(cplx l, cplx r);

  /// Arbitrary window; the two fields must have equal length.
  WalkerState(std::int64_t x_min, std::vector<cplx> left, std::vector<cplx> right,
              std::int64_t time = 0);

  std::int64_t x_min() const { return x_min_; }
  std::int64_t x_max() const { return x_min_ + static_cast<std::int64_t>(left_.size()) - 1; }
  std::size_t size() const { return left_.size(); }
  std::int64_t time() const { return time_; }

  std::span<const cplx> left() const { return left_; }
  std::span<const cplx> right() const { return right_; }

  /// Amplitudes at site x; zero outside the window.
  cplx left_at(std::int64_t x) const;
  cplx right_at(std::int64_t x) const;

  double norm_squared() const;

  /// In-place coin + shift; the window grows by `jump` on each side and the
  /// time advances by one. Returns the moments and coin Gram matrix of the
  /// new state; when `probabilities` is given it receives P(x) over the new
  /// window. Throws std::invalid_argument if jump < 1.
  simd::StepStats advance(const CoinMatrix& coin, std::int64_t jump,
                          std::vector<double>* probabilities = nullptr,
                          const simd::KernelTable& kernels = simd::active_kernels());

  /// Sitewise coin only; time and window unchanged.
  void mix(const CoinMatrix& coin, const simd::KernelTable& kernels = simd::active_kernels());

  /// Translation only; time unchanged.
  void translate(std::int64_t jump);

  /// Writes |L|^2 + |R|^2 for each window site into `out` (resized).
  void probabilities(std::vector<double>& out,
                     const simd::KernelTable& kernels = simd::active_kernels()) const;

 private:
  std::int64_t x_min_ = 0;
  std::int64_t time_ = 0;
  std::vector<cplx> left_;
  std::vector<cplx> right_;
  std::vector<cplx> scratch_left_;
  std::vector<cplx> scratch_right_;
};

/// Localised start (1/sqrt2) (|0> + e^{i phi} |1>) at the origin.
WalkerState initial_state(const CoinParams& params);

WalkerState apply_coin(WalkerState state, const CoinMatrix& coin);
WalkerState apply_shift(WalkerState state, std::int64_t jump);

/// One full step at time t. Requires 1 <= jump <= t + 1.
WalkerState step(WalkerState state, const CoinParams& params, std::int64_t jump);

}  // namespace eqw
