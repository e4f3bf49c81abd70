#include <immintrin.h>

#include "eqw/simd.hpp"

#if !defined(__AVX2__)
#error "kernels_avx2.cpp must be compiled with -mavx2"
#endif

// Two complex<double> per __m256d, interleaved as [re0, im0, re1, im1].

namespace eqw::simd {
namespace {

// [ar*xr - ai*xi, ar*xi + ai*xr] for both lanes; same rounding order as the
// scalar reference.
inline __m256d cmul(__m256d ar, __m256d ai, __m256d x) {
  const __m256d xs = _mm256_permute_pd(x, 0b0101);
  return _mm256_addsub_pd(_mm256_mul_pd(ar, x), _mm256_mul_pd(ai, xs));
}

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void coin_mix_avx2(const cplx* l, const cplx* r, cplx* out_l, cplx* out_r,
                   std::size_t n, const Mat2& m) {
  const __m256d a00r = _mm256_set1_pd(m.a00.real()), a00i = _mm256_set1_pd(m.a00.imag());
  const __m256d a01r = _mm256_set1_pd(m.a01.real()), a01i = _mm256_set1_pd(m.a01.imag());
  const __m256d a10r = _mm256_set1_pd(m.a10.real()), a10i = _mm256_set1_pd(m.a10.imag());
  const __m256d a11r = _mm256_set1_pd(m.a11.real()), a11i = _mm256_set1_pd(m.a11.imag());

  const double* lp = reinterpret_cast<const double*>(l);
  const double* rp = reinterpret_cast<const double*>(r);
  double* olp = reinterpret_cast<double*>(out_l);
  double* orp = reinterpret_cast<double*>(out_r);

  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vl = _mm256_loadu_pd(lp + 2 * i);
    const __m256d vr = _mm256_loadu_pd(rp + 2 * i);
    _mm256_storeu_pd(olp + 2 * i, _mm256_add_pd(cmul(a00r, a00i, vl), cmul(a01r, a01i, vr)));
    _mm256_storeu_pd(orp + 2 * i, _mm256_add_pd(cmul(a10r, a10i, vl), cmul(a11r, a11i, vr)));
  }
  if (i < n) scalar_kernels().coin_mix(l + i, r + i, out_l + i, out_r + i, n - i, m);
}

void probability_avx2(const cplx* l, const cplx* r, double* p, std::size_t n) {
  const double* lp = reinterpret_cast<const double*>(l);
  const double* rp = reinterpret_cast<const double*>(r);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d la = _mm256_loadu_pd(lp + 2 * i);
    const __m256d lb = _mm256_loadu_pd(lp + 2 * i + 4);
    const __m256d ra = _mm256_loadu_pd(rp + 2 * i);
    const __m256d rb = _mm256_loadu_pd(rp + 2 * i + 4);
    // hadd interleaves 128-bit halves: lanes come out as sites 0, 2, 1, 3.
    const __m256d hl = _mm256_hadd_pd(_mm256_mul_pd(la, la), _mm256_mul_pd(lb, lb));
    const __m256d hr = _mm256_hadd_pd(_mm256_mul_pd(ra, ra), _mm256_mul_pd(rb, rb));
    const __m256d s = _mm256_add_pd(hl, hr);
    _mm256_storeu_pd(p + i, _mm256_permute4x64_pd(s, 0b11011000));
  }
  if (i < n) scalar_kernels().probability(l + i, r + i, p + i, n - i);
}

CoinGram coin_gram_avx2(const cplx* l, const cplx* r, std::size_t n) {
  const double* lp = reinterpret_cast<const double*>(l);
  const double* rp = reinterpret_cast<const double*>(r);
  __m256d acc_a = _mm256_setzero_pd();
  __m256d acc_b = _mm256_setzero_pd();
  __m256d acc_re = _mm256_setzero_pd();  // lr*rr, li*ri
  __m256d acc_im = _mm256_setzero_pd();  // lr*ri, li*rr
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vl = _mm256_loadu_pd(lp + 2 * i);
    const __m256d vr = _mm256_loadu_pd(rp + 2 * i);
    acc_a = _mm256_add_pd(acc_a, _mm256_mul_pd(vl, vl));
    acc_b = _mm256_add_pd(acc_b, _mm256_mul_pd(vr, vr));
    acc_re = _mm256_add_pd(acc_re, _mm256_mul_pd(vl, vr));
    acc_im = _mm256_add_pd(acc_im, _mm256_mul_pd(vl, _mm256_permute_pd(vr, 0b0101)));
  }
  alignas(32) double im_parts[4];
  _mm256_store_pd(im_parts, acc_im);
  CoinGram g;
  g.g_a = hsum(acc_a);
  g.g_b = hsum(acc_b);
  double re = hsum(acc_re);
  // lanes hold lr*ri (even) and li*rr (odd)
  double im = (im_parts[1] + im_parts[3]) - (im_parts[0] + im_parts[2]);
  if (i < n) {
    const CoinGram tail = scalar_kernels().coin_gram(l + i, r + i, n - i);
    g.g_a += tail.g_a;
    g.g_b += tail.g_b;
    re += tail.g_ab.real();
    im += tail.g_ab.imag();
  }
  g.g_ab = {re, im};
  return g;
}

Moments moments_avx2(const double* p, std::size_t n, double x0) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  __m256d acc2 = _mm256_setzero_pd();
  const __m256d lane = _mm256_setr_pd(0.0, 1.0, 2.0, 3.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    // Coordinates are rebuilt from the index rather than accumulated, so
    // they stay exact integers.
    const __m256d x = _mm256_add_pd(_mm256_set1_pd(x0 + static_cast<double>(i)), lane);
    const __m256d v = _mm256_loadu_pd(p + i);
    acc0 = _mm256_add_pd(acc0, v);
    const __m256d xv = _mm256_mul_pd(x, v);
    acc1 = _mm256_add_pd(acc1, xv);
    acc2 = _mm256_add_pd(acc2, _mm256_mul_pd(_mm256_mul_pd(x, x), v));
  }
  Moments m{hsum(acc0), hsum(acc1), hsum(acc2)};
  if (i < n) {
    const Moments tail = scalar_kernels().moments(p + i, n - i, x0 + static_cast<double>(i));
    m.m0 += tail.m0;
    m.m1 += tail.m1;
    m.m2 += tail.m2;
  }
  return m;
}

double sum_squares_avx2(const double* p, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(p + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double s = hsum(acc);
  if (i < n) s += scalar_kernels().sum_squares(p + i, n - i);
  return s;
}

std::size_t count_above_avx2(const double* p, std::size_t n, double threshold) {
  const __m256d thr = _mm256_set1_pd(threshold);
  std::size_t c = 0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d mask = _mm256_cmp_pd(_mm256_loadu_pd(p + i), thr, _CMP_GT_OQ);
    c += static_cast<std::size_t>(__builtin_popcount(_mm256_movemask_pd(mask)));
  }
  if (i < n) c += scalar_kernels().count_above(p + i, n - i, threshold);
  return c;
}

// Accumulators for the fused step kernel.
struct ObserveAcc {
  __m256d ga = _mm256_setzero_pd();
  __m256d gb = _mm256_setzero_pd();
  __m256d re = _mm256_setzero_pd();
  __m256d im = _mm256_setzero_pd();
  __m256d m0 = _mm256_setzero_pd();
  __m256d m1 = _mm256_setzero_pd();
  __m256d m2 = _mm256_setzero_pd();
};

// Observes new-window sites i..i+3 given as two L and two R vectors.
inline void observe4(__m256d la, __m256d lb, __m256d ra, __m256d rb, double x, double* p,
                     ObserveAcc& acc) {
  const __m256d sla = _mm256_mul_pd(la, la), slb = _mm256_mul_pd(lb, lb);
  const __m256d sra = _mm256_mul_pd(ra, ra), srb = _mm256_mul_pd(rb, rb);
  acc.ga = _mm256_add_pd(acc.ga, _mm256_add_pd(sla, slb));
  acc.gb = _mm256_add_pd(acc.gb, _mm256_add_pd(sra, srb));
  acc.re = _mm256_add_pd(acc.re, _mm256_add_pd(_mm256_mul_pd(la, ra), _mm256_mul_pd(lb, rb)));
  acc.im = _mm256_add_pd(acc.im, _mm256_add_pd(_mm256_mul_pd(la, _mm256_permute_pd(ra, 0b0101)),
                                               _mm256_mul_pd(lb, _mm256_permute_pd(rb, 0b0101))));
  // Lanes in site order 0, 2, 1, 3.
  const __m256d prob = _mm256_add_pd(_mm256_hadd_pd(sla, slb), _mm256_hadd_pd(sra, srb));
  const __m256d xv = _mm256_add_pd(_mm256_set1_pd(x), _mm256_setr_pd(0.0, 2.0, 1.0, 3.0));
  acc.m0 = _mm256_add_pd(acc.m0, prob);
  acc.m1 = _mm256_add_pd(acc.m1, _mm256_mul_pd(xv, prob));
  acc.m2 = _mm256_add_pd(acc.m2, _mm256_mul_pd(_mm256_mul_pd(xv, xv), prob));
  if (p != nullptr) _mm256_storeu_pd(p, _mm256_permute4x64_pd(prob, 0b11011000));
}

StepStats coin_shift_avx2(const cplx* l, const cplx* r, cplx* out_l, cplx* out_r, std::size_t n,
                          std::size_t pad, const Mat2& m, double x0, double* p) {
  const __m256d a00r = _mm256_set1_pd(m.a00.real()), a00i = _mm256_set1_pd(m.a00.imag());
  const __m256d a01r = _mm256_set1_pd(m.a01.real()), a01i = _mm256_set1_pd(m.a01.imag());
  const __m256d a10r = _mm256_set1_pd(m.a10.real()), a10i = _mm256_set1_pd(m.a10.imag());
  const __m256d a11r = _mm256_set1_pd(m.a11.real()), a11i = _mm256_set1_pd(m.a11.imag());

  for (std::size_t i = 0; i < pad; ++i) {
    out_l[i] = {};
    out_r[n + i] = {};
  }

  const double* lp = reinterpret_cast<const double*>(l);
  const double* rp = reinterpret_cast<const double*>(r);
  double* olp = reinterpret_cast<double*>(out_l);
  double* orp = reinterpret_cast<double*>(out_r);
  double* olp_shift = olp + 2 * pad;

  ObserveAcc acc;
  std::size_t i = 0;
  // Site i of the new window needs out_l[i], which was produced from old
  // site i - pad (pad >= 2), so it is final by the time it is read back.
  for (; i + 4 <= n; i += 4) {
    const __m256d l0 = _mm256_loadu_pd(lp + 2 * i), l1 = _mm256_loadu_pd(lp + 2 * i + 4);
    const __m256d r0 = _mm256_loadu_pd(rp + 2 * i), r1 = _mm256_loadu_pd(rp + 2 * i + 4);
    _mm256_storeu_pd(olp_shift + 2 * i, _mm256_add_pd(cmul(a00r, a00i, l0), cmul(a01r, a01i, r0)));
    _mm256_storeu_pd(olp_shift + 2 * i + 4,
                     _mm256_add_pd(cmul(a00r, a00i, l1), cmul(a01r, a01i, r1)));
    const __m256d nr0 = _mm256_add_pd(cmul(a10r, a10i, l0), cmul(a11r, a11i, r0));
    const __m256d nr1 = _mm256_add_pd(cmul(a10r, a10i, l1), cmul(a11r, a11i, r1));
    _mm256_storeu_pd(orp + 2 * i, nr0);
    _mm256_storeu_pd(orp + 2 * i + 4, nr1);
    observe4(_mm256_loadu_pd(olp + 2 * i), _mm256_loadu_pd(olp + 2 * i + 4), nr0, nr1,
             x0 + static_cast<double>(i), p ? p + i : nullptr, acc);
  }
  if (i < n) scalar_kernels().coin_mix(l + i, r + i, out_l + pad + i, out_r + i, n - i, m);

  // Remaining sites of the new window are all final now.
  const std::size_t total = n + pad;
  for (; i + 4 <= total; i += 4) {
    observe4(_mm256_loadu_pd(olp + 2 * i), _mm256_loadu_pd(olp + 2 * i + 4),
             _mm256_loadu_pd(orp + 2 * i), _mm256_loadu_pd(orp + 2 * i + 4),
             x0 + static_cast<double>(i), p ? p + i : nullptr, acc);
  }

  alignas(32) double im_parts[4];
  _mm256_store_pd(im_parts, acc.im);
  StepStats s;
  s.gram.g_a = hsum(acc.ga);
  s.gram.g_b = hsum(acc.gb);
  double re = hsum(acc.re);
  double im = (im_parts[1] + im_parts[3]) - (im_parts[0] + im_parts[2]);
  s.moments = {hsum(acc.m0), hsum(acc.m1), hsum(acc.m2)};
  if (i < total) {
    const CoinGram g = scalar_kernels().coin_gram(out_l + i, out_r + i, total - i);
    s.gram.g_a += g.g_a;
    s.gram.g_b += g.g_b;
    re += g.g_ab.real();
    im += g.g_ab.imag();
    for (std::size_t k = i; k < total; ++k) {
      const double lr = out_l[k].real(), li = out_l[k].imag();
      const double rr = out_r[k].real(), ri = out_r[k].imag();
      const double pk = (lr * lr + li * li) + (rr * rr + ri * ri);
      const double x = x0 + static_cast<double>(k);
      if (p != nullptr) p[k] = pk;
      s.moments.m0 += pk;
      s.moments.m1 += x * pk;
      s.moments.m2 += (x * x) * pk;
    }
  }
  s.gram.g_ab = {re, im};
  return s;
}

}  // namespace

const KernelTable& avx2_kernels() {
  static const KernelTable table{Isa::Avx2,       coin_shift_avx2, coin_mix_avx2,
                                 probability_avx2, coin_gram_avx2,
                                 moments_avx2,    sum_squares_avx2,
                                 count_above_avx2};
  return table;
}

}  // namespace eqw::simd
