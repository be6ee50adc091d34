// Compiled with -mavx2 -mfma; only called after a runtime CPU check.

#include <immintrin.h>

#include <cmath>
#include <limits>

#include "pmode/simd.hpp"

namespace pmode::simd::avx2 {
namespace {

// Cephes-style exp: x = n*ln2 + r, |r| <= ln2/2, exp(r) from a (3,3) Pade form.
// Lanes below -708.39 flush to zero and inputs above 709 saturate; callers
// only pass x <= 0.
inline __m256d exp_pd(__m256d x) {
  const __m256d lo = _mm256_set1_pd(-708.39641853226408);
  const __m256d hi = _mm256_set1_pd(709.0);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
  x = _mm256_max_pd(_mm256_min_pd(x, hi), lo);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);
  const __m256d rr = _mm256_mul_pd(r, r);

  __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
  p = _mm256_mul_pd(p, r);

  __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));

  __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

  // 2^n through the exponent field; n is integral and within [-1022, 1023].
  const __m256d magic = _mm256_set1_pd(0x1.8p52);
  const __m256i k = _mm256_sub_epi64(_mm256_castpd_si256(_mm256_add_pd(n, magic)),
                                     _mm256_castpd_si256(magic));
  const __m256d scale =
      _mm256_castsi256_pd(_mm256_slli_epi64(_mm256_add_epi64(k, _mm256_set1_epi64x(1023)), 52));
  e = _mm256_mul_pd(e, scale);
  return _mm256_andnot_pd(underflow, e);
}

inline double hsum(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return (lanes[0] + lanes[1]) + (lanes[2] + lanes[3]);
}

inline double hmin(__m256d v) {
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, v);
  return std::fmin(std::fmin(lanes[0], lanes[1]), std::fmin(lanes[2], lanes[3]));
}

} // namespace

void exp4(const double* in, double* out) { _mm256_storeu_pd(out, exp_pd(_mm256_loadu_pd(in))); }

double log_sum_gauss(const double* centers, std::size_t count, double x, double inv_two_var) {
  const std::size_t body = count & ~std::size_t{3};
  const __m256d vx = _mm256_set1_pd(x);

  __m256d vmin = _mm256_set1_pd(std::numeric_limits<double>::infinity());
  for (std::size_t s = 0; s < body; s += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(centers + s), vx);
    vmin = _mm256_min_pd(vmin, _mm256_mul_pd(d, d));
  }
  double nearest = hmin(vmin);
  for (std::size_t s = body; s < count; ++s) {
    const double d = centers[s] - x;
    nearest = std::fmin(nearest, d * d);
  }

  const __m256d vnear = _mm256_set1_pd(nearest);
  const __m256d vscale = _mm256_set1_pd(-inv_two_var);
  __m256d vsum = _mm256_setzero_pd();
  for (std::size_t s = 0; s < body; s += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(centers + s), vx);
    const __m256d arg = _mm256_mul_pd(_mm256_sub_pd(_mm256_mul_pd(d, d), vnear), vscale);
    vsum = _mm256_add_pd(vsum, exp_pd(arg));
  }
  double sum = hsum(vsum);
  for (std::size_t s = body; s < count; ++s) {
    const double d = centers[s] - x;
    sum += std::exp(-(d * d - nearest) * inv_two_var);
  }
  return -nearest * inv_two_var + std::log(sum);
}

double squared_distance(const double* a, const double* b, std::size_t n) {
  const std::size_t body = n & ~std::size_t{3};
  __m256d acc = _mm256_setzero_pd();
  for (std::size_t i = 0; i < body; i += 4) {
    const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc = _mm256_fmadd_pd(d, d, acc);
  }
  double total = hsum(acc);
  for (std::size_t i = body; i < n; ++i) {
    const double d = a[i] - b[i];
    total += d * d;
  }
  return total;
}

} // namespace pmode::simd::avx2
