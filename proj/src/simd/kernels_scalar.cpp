#include "eqw/simd.hpp"

// Complex products are spelled out in re/im form so that the vector variants
// can reproduce the exact same sequence of roundings.

namespace eqw::simd {
namespace {

inline void mul_add2(const cplx& a, const cplx& x, const cplx& b, const cplx& y,
                     double& re, double& im) {
  const double xr = x.real(), xi = x.imag(), yr = y.real(), yi = y.imag();
  const double ar = a.real(), ai = a.imag(), br = b.real(), bi = b.imag();
  re = (ar * xr - ai * xi) + (br * yr - bi * yi);
  im = (ar * xi + ai * xr) + (br * yi + bi * yr);
}

void coin_mix_scalar(const cplx* l, const cplx* r, cplx* out_l, cplx* out_r,
                     std::size_t n, const Mat2& m) {
  for (std::size_t i = 0; i < n; ++i) {
    double re, im;
    mul_add2(m.a00, l[i], m.a01, r[i], re, im);
    out_l[i] = {re, im};
    mul_add2(m.a10, l[i], m.a11, r[i], re, im);
    out_r[i] = {re, im};
  }
}

void probability_scalar(const cplx* l, const cplx* r, double* p, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    const double lr = l[i].real(), li = l[i].imag();
    const double rr = r[i].real(), ri = r[i].imag();
    p[i] = (lr * lr + li * li) + (rr * rr + ri * ri);
  }
}

CoinGram coin_gram_scalar(const cplx* l, const cplx* r, std::size_t n) {
  double ga = 0.0, gb = 0.0, re = 0.0, im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double lr = l[i].real(), li = l[i].imag();
    const double rr = r[i].real(), ri = r[i].imag();
    ga += lr * lr + li * li;
    gb += rr * rr + ri * ri;
    // L * conj(R)
    re += lr * rr + li * ri;
    im += li * rr - lr * ri;
  }
  return {ga, gb, {re, im}};
}

Moments moments_scalar(const double* p, std::size_t n, double x0) {
  Moments out;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = x0 + static_cast<double>(i);
    out.m0 += p[i];
    out.m1 += x * p[i];
    out.m2 += (x * x) * p[i];
  }
  return out;
}

double sum_squares_scalar(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
  return s;
}

std::size_t count_above_scalar(const double* p, std::size_t n, double threshold) {
  std::size_t c = 0;
  for (std::size_t i = 0; i < n; ++i) c += p[i] > threshold ? 1 : 0;
  return c;
}

StepStats coin_shift_scalar(const cplx* l, const cplx* r, cplx* out_l, cplx* out_r,
                            std::size_t n, std::size_t pad, const Mat2& m, double x0, double* p) {
  for (std::size_t i = 0; i < pad; ++i) {
    out_l[i] = {};
    out_r[n + i] = {};
  }
  coin_mix_scalar(l, r, out_l + pad, out_r, n, m);
  const std::size_t total = n + pad;
  if (p != nullptr) probability_scalar(out_l, out_r, p, total);
  StepStats s;
  s.gram = coin_gram_scalar(out_l, out_r, total);
  for (std::size_t i = 0; i < total; ++i) {
    const double lr = out_l[i].real(), li = out_l[i].imag();
    const double rr = out_r[i].real(), ri = out_r[i].imag();
    const double pi = (lr * lr + li * li) + (rr * rr + ri * ri);
    const double x = x0 + static_cast<double>(i);
    s.moments.m0 += pi;
    s.moments.m1 += x * pi;
    s.moments.m2 += (x * x) * pi;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{Isa::Scalar,      coin_shift_scalar, coin_mix_scalar,
                                 probability_scalar, coin_gram_scalar,
                                 moments_scalar,    sum_squares_scalar,
                                 count_above_scalar};
  return table;
}

}  // namespace eqw::simd
