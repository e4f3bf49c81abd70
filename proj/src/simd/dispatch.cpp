#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "eqw/simd.hpp"

namespace eqw::simd {
namespace {

std::atomic<const KernelTable*> g_forced{nullptr};

const KernelTable& detect() {
  if (const char* env = std::getenv("EQW_ISA"); env != nullptr && *env != '\0') {
    return kernels_for(parse_isa(env));
  }
#if defined(EQW_HAVE_AVX2)
  if (isa_supported(Isa::Avx2)) return avx2_kernels();
#endif
  return scalar_kernels();
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return "scalar";
    case Isa::Avx2:
      return "avx2";
  }
  return "unknown";
}

Isa parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::Scalar;
  if (name == "avx2") return Isa::Avx2;
  throw std::invalid_argument("unknown kernel ISA '" + std::string(name) + "'");
}

bool isa_supported(Isa isa) {
  switch (isa) {
    case Isa::Scalar:
      return true;
    case Isa::Avx2:
#if defined(EQW_HAVE_AVX2)
      return __builtin_cpu_supports("avx2") != 0;
#else
      return false;
#endif
  }
  return false;
}

const KernelTable& kernels_for(Isa isa) {
  if (!isa_supported(isa)) {
    throw std::invalid_argument("kernel ISA '" + std::string(isa_name(isa)) +
                                "' is not available on this build or CPU");
  }
#if defined(EQW_HAVE_AVX2)
  if (isa == Isa::Avx2) return avx2_kernels();
#endif
  return scalar_kernels();
}

const KernelTable& active_kernels() {
  if (const KernelTable* forced = g_forced.load(std::memory_order_acquire)) return *forced;
  static const KernelTable& detected = detect();
  return detected;
}

void force_isa(Isa isa) { g_forced.store(&kernels_for(isa), std::memory_order_release); }

}  // namespace eqw::simd
