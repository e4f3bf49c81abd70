#include "eqw/memory_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace eqw {
namespace {

// Bases and weights below this are treated as exactly zero so the support
// boundary does not depend on denormal arithmetic.
constexpr double kUnderflowFloor = 1e-300;

void check_parameters(double q, std::int64_t t) {
  if (!std::isfinite(q) || q < kMinEntropicIndex) {
    throw std::invalid_argument("entropic index q must be finite and >= 0.5, got " +
                                std::to_string(q));
  }
  if (t < 1) throw std::invalid_argument("kernel horizon must be >= 1, got " + std::to_string(t));
}

}  // namespace

double q_exponential_decay(double q, double k) {
  double v;
  if (q == 1.0) {
    v = std::exp(-k);
  } else {
    const double one_minus_q = 1.0 - q;
    const double base = 1.0 - one_minus_q * k;
    if (base < kUnderflowFloor) return 0.0;
    v = std::exp(std::log1p(-one_minus_q * k) / one_minus_q);
  }
  return v < kUnderflowFloor ? 0.0 : v;
}

std::vector<double> kernel_weights(double q, std::int64_t t) {
  const MemoryKernel kernel(q, t);
  return {kernel.weights().begin(), kernel.weights().end()};
}

MemoryKernel::MemoryKernel(double q, std::int64_t t) : q_(q) {
  check_parameters(q, t);
  const auto n = static_cast<std::size_t>(t);
  raw_.resize(n);
  prefix_.resize(n);
  double running = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    raw_[i] = q_exponential_decay(q, static_cast<double>(i + 1));
    running += raw_[i];
    prefix_[i] = running;
    if (raw_[i] > 0.0) support_max_ = static_cast<std::int64_t>(i + 1);
  }
  weights_.resize(n);
  cdf_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    weights_[i] = raw_[i] / running;
    cdf_[i] = prefix_[i] / running;
  }
}

double MemoryKernel::weight(std::int64_t k, std::int64_t t) const {
  if (t < 1 || t > horizon()) throw std::out_of_range("truncation beyond kernel horizon");
  if (k < 1 || k > t) return 0.0;
  return raw_[static_cast<std::size_t>(k - 1)] / prefix_[static_cast<std::size_t>(t - 1)];
}

std::int64_t MemoryKernel::sample(double u, std::int64_t t) const {
  if (t < 1 || t > horizon()) throw std::out_of_range("truncation beyond kernel horizon");
  const auto end = prefix_.begin() + t;
  const double target = u * prefix_[static_cast<std::size_t>(t - 1)];
  auto it = std::upper_bound(prefix_.begin(), end, target);
  if (it == end) {
    // u * total rounded up to total; take the last k carrying weight.
    it = std::lower_bound(prefix_.begin(), end, prefix_[static_cast<std::size_t>(t - 1)]);
  }
  return static_cast<std::int64_t>(it - prefix_.begin()) + 1;
}

}  // namespace eqw
