#include "eqw/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace eqw {

double CoinParams::symmetric_phase(CoinFamily family) {
  return family == CoinFamily::H ? std::numbers::pi / 2.0 : 0.0;
}

char coin_family_char(CoinFamily family) { return family == CoinFamily::H ? 'H' : 'K'; }

CoinFamily parse_coin_family(char c) {
  switch (c) {
    case 'H':
    case 'h':
      return CoinFamily::H;
    case 'K':
    case 'k':
      return CoinFamily::K;
    default:
      throw std::invalid_argument(std::string("unknown coin family '") + c + "'");
  }
}

CoinMatrix coin_matrix(CoinFamily family, double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  if (family == CoinFamily::H) return {{c, 0.0}, {s, 0.0}, {s, 0.0}, {-c, 0.0}};
  return {{c, 0.0}, {0.0, s}, {0.0, s}, {c, 0.0}};
}

WalkerState::WalkerState(cplx l, cplx r) : left_{l}, right_{r} {}

WalkerState::WalkerState(std::int64_t x_min, std::vector<cplx> left, std::vector<cplx> right,
                         std::int64_t time)
    : x_min_(x_min), time_(time), left_(std::move(left)), right_(std::move(right)) {
  if (left_.size() != right_.size() || left_.empty()) {
    throw std::invalid_argument("walker fields must be nonempty and of equal length");
  }
}

cplx WalkerState::left_at(std::int64_t x) const {
  if (x < x_min_ || x > x_max()) return {};
  return left_[static_cast<std::size_t>(x - x_min_)];
}

cplx WalkerState::right_at(std::int64_t x) const {
  if (x < x_min_ || x > x_max()) return {};
  return right_[static_cast<std::size_t>(x - x_min_)];
}

double WalkerState::norm_squared() const {
  const auto g = simd::active_kernels().coin_gram(left_.data(), right_.data(), left_.size());
  return g.g_a + g.g_b;
}

simd::StepStats WalkerState::advance(const CoinMatrix& coin, std::int64_t jump,
                                     std::vector<double>* probabilities,
                                     const simd::KernelTable& kernels) {
  if (jump < 1) throw std::invalid_argument("jump length must be >= 1");
  const std::size_t n = left_.size();
  const auto pad = static_cast<std::size_t>(2 * jump);
  scratch_left_.resize(n + pad);
  scratch_right_.resize(n + pad);
  double* p = nullptr;
  if (probabilities != nullptr) {
    probabilities->resize(n + pad);
    p = probabilities->data();
  }
  const simd::StepStats stats =
      kernels.coin_shift(left_.data(), right_.data(), scratch_left_.data(), scratch_right_.data(),
                         n, pad, coin, static_cast<double>(x_min_ - jump), p);
  left_.swap(scratch_left_);
  right_.swap(scratch_right_);
  x_min_ -= jump;
  ++time_;
  return stats;
}

void WalkerState::mix(const CoinMatrix& coin, const simd::KernelTable& kernels) {
  const std::size_t n = left_.size();
  scratch_left_.resize(n);
  scratch_right_.resize(n);
  kernels.coin_mix(left_.data(), right_.data(), scratch_left_.data(), scratch_right_.data(), n,
                   coin);
  left_.swap(scratch_left_);
  right_.swap(scratch_right_);
}

void WalkerState::translate(std::int64_t jump) {
  if (jump < 1) throw std::invalid_argument("jump length must be >= 1");
  const std::size_t n = left_.size();
  const auto pad = static_cast<std::size_t>(2 * jump);
  left_.insert(left_.begin(), pad, cplx{});
  right_.resize(n + pad);
  x_min_ -= jump;
}

void WalkerState::probabilities(std::vector<double>& out, const simd::KernelTable& kernels) const {
  out.resize(left_.size());
  kernels.probability(left_.data(), right_.data(), out.data(), left_.size());
}

WalkerState initial_state(const CoinParams& params) {
  const double amp = 1.0 / std::numbers::sqrt2;
  return WalkerState(cplx{amp, 0.0}, std::polar(amp, params.phi));
}

WalkerState apply_coin(WalkerState state, const CoinMatrix& coin) {
  state.mix(coin);
  return state;
}

WalkerState apply_shift(WalkerState state, std::int64_t jump) {
  state.translate(jump);
  return state;
}

WalkerState step(WalkerState state, const CoinParams& params, std::int64_t jump) {
  if (jump < 1 || jump > state.time() + 1) {
    throw std::invalid_argument("jump " + std::to_string(jump) + " outside [1, " +
                                std::to_string(state.time() + 1) + "]");
  }
  state.advance(coin_matrix(params), jump);
  return state;
}

}  // namespace eqw
