#pragma once

// Data-parallel inner loops of the walk. Every kernel has a scalar reference
// implementation; wider variants are picked once at startup from the CPU's
// capabilities and must agree with the reference (bit-exact for the
// elementwise kernels, to rounding for the reductions).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace eqw::simd {

using cplx = std::complex<double>;

enum class Isa { Scalar, Avx2 };

std::string_view isa_name(Isa isa);

/// Row-major 2x2 complex matrix.
struct Mat2 {
  cplx a00, a01, a10, a11;
};

struct CoinGram {
  double g_a = 0.0;  // sum |L|^2
  double g_b = 0.0;  // sum |R|^2
  cplx g_ab{};       // sum L * conj(R)
};

struct Moments {
  double m0 = 0.0;  // sum p
  double m1 = 0.0;  // sum x p
  double m2 = 0.0;  // sum x^2 p
};

/// Reductions gathered while a step is applied.
struct StepStats {
  Moments moments;
  CoinGram gram;
};

struct KernelTable {
  Isa isa;

  // Coin followed by the opposite translations of the two components, fused
  // with the observation pass over the result. Inputs hold n sites; outputs
  // hold n + pad sites (pad = 2 * jump) and are fully overwritten:
  //   out_l[i + pad] = a00 l[i] + a01 r[i],  out_l[0, pad) = 0
  //   out_r[i]       = a10 l[i] + a11 r[i],  out_r[n, n + pad) = 0
  // Moments use coordinates x0 + i over the output window. When p is not
  // null it receives |out_l|^2 + |out_r|^2 (n + pad values).
  StepStats (*coin_shift)(const cplx* l, const cplx* r, cplx* out_l, cplx* out_r, std::size_t n,
                          std::size_t pad, const Mat2& m, double x0, double* p);

  // out_l[i] = m.a00 * l[i] + m.a01 * r[i]; out_r[i] = m.a10 * l[i] + m.a11 * r[i].
  // Outputs may not alias inputs.
  void (*coin_mix)(const cplx* l, const cplx* r, cplx* out_l, cplx* out_r,
                   std::size_t n, const Mat2& m);

  // p[i] = |l[i]|^2 + |r[i]|^2
  void (*probability)(const cplx* l, const cplx* r, double* p, std::size_t n);

  CoinGram (*coin_gram)(const cplx* l, const cplx* r, std::size_t n);

  // Moments of p with site coordinate x_i = x0 + i.
  Moments (*moments)(const double* p, std::size_t n, double x0);

  double (*sum_squares)(const double* p, std::size_t n);

  std::size_t (*count_above)(const double* p, std::size_t n, double threshold);
};

const KernelTable& scalar_kernels();

#if defined(EQW_HAVE_AVX2)
const KernelTable& avx2_kernels();
#endif

bool isa_supported(Isa isa);

/// Table for the requested ISA; throws std::invalid_argument if this binary
/// or this CPU cannot run it.
const KernelTable& kernels_for(Isa isa);

/// Best supported table, unless EQW_ISA=scalar|avx2 in the environment or a
/// prior call to force_isa() says otherwise.
const KernelTable& active_kernels();

/// Pins the table returned by active_kernels(). Not thread-safe against
/// concurrent simulation; call before starting work.
void force_isa(Isa isa);

Isa parse_isa(std::string_view name);

}  // namespace eqw::simd
