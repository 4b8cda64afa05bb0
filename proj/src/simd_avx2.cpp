// AVX2+FMA variants. This translation unit is compiled with -mavx2 -mfma;
// nothing here may run unless dispatch confirmed CPU support.
#include "ease/simd.hpp"

#include <immintrin.h>
#include <cmath>
#include <cstdint>

namespace ease::simd::detail {

namespace {

// exp() by Cephes-style rational approximation after range reduction
// x = n*ln2 + r, |r| <= ln2/2. Accurate to ~1 ulp on the normal range.
// Results below the smallest normal are flushed to zero.
constexpr double kExpHi = 709.782712893383996732;
constexpr double kExpLo = -708.396418532264106224;
constexpr double kLog2E = 1.4426950408889634073599;
constexpr double kC1 = 6.93145751953125e-1;
constexpr double kC2 = 1.42860682030941723212e-6;
constexpr double kP0 = 1.26177193074810590878e-4;
constexpr double kP1 = 3.02994407707441961300e-2;
constexpr double kP2 = 9.99999999999999999910e-1;
constexpr double kQ0 = 3.00198505138664455042e-6;
constexpr double kQ1 = 2.52448340349684104192e-3;
constexpr double kQ2 = 2.27265548208155028766e-1;
constexpr double kQ3 = 2.00000000000000000005e0;

inline __m256d exp_pd(__m256d x) {
  const __m256d hi = _mm256_set1_pd(kExpHi);
  const __m256d lo = _mm256_set1_pd(kExpLo);
  const __m256d overflow = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
  const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);

  __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(kLog2E)),
                              _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  // r = x - n*C1 - n*C2 (split ln2 for extra precision)
  __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC1), x);
  r = _mm256_fnmadd_pd(n, _mm256_set1_pd(kC2), r);

  const __m256d rr = _mm256_mul_pd(r, r);
  __m256d p = _mm256_fmadd_pd(_mm256_set1_pd(kP0), rr, _mm256_set1_pd(kP1));
  p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(kP2));
  p = _mm256_mul_pd(p, r);
  __m256d q = _mm256_fmadd_pd(_mm256_set1_pd(kQ0), rr, _mm256_set1_pd(kQ1));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kQ2));
  q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(kQ3));
  const __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
  __m256d res = _mm256_fmadd_pd(_mm256_set1_pd(2.0), e, _mm256_set1_pd(1.0));

  // scale by 2^n through the exponent bits, split as 2^k1 * 2^k2 so the
  // n = 1024 case just below the overflow cutoff stays representable
  const __m128i n32 = _mm256_cvtpd_epi32(n);
  const __m128i k1_32 = _mm_srai_epi32(n32, 1);
  const __m128i k2_32 = _mm_sub_epi32(n32, k1_32);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256d p1 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k1_32), bias), 52));
  const __m256d p2 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(k2_32), bias), 52));
  res = _mm256_mul_pd(_mm256_mul_pd(res, p1), p2);

  res = _mm256_blendv_pd(res, _mm256_setzero_pd(), underflow);
  res = _mm256_blendv_pd(res, _mm256_set1_pd(HUGE_VAL), overflow);
  return res;
}

inline double exp_one(double x) {
  // keep tails consistent with the vector path
  if (x < kExpLo) return 0.0;
  return std::exp(x);
}

}  // namespace

bool cpu_has_avx2() {
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
}

void exp_inplace_avx2(double* x, std::size_t n) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, exp_pd(_mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] = exp_one(x[i]);
}

void exp_scale_inplace_avx2(double* x, std::size_t n, double scale) {
  const __m256d s = _mm256_set1_pd(scale);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, exp_pd(_mm256_mul_pd(s, _mm256_loadu_pd(x + i))));
  }
  for (; i < n; ++i) x[i] = exp_one(scale * x[i]);
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

double sum_avx2(const double* x, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
    acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
  }
  acc0 = _mm256_add_pd(acc0, acc1);
  alignas(32) double lanes[4];
  _mm256_store_pd(lanes, acc0);
  double s = ((lanes[0] + lanes[1]) + (lanes[2] + lanes[3]));
  for (; i < n; ++i) s += x[i];
  return s;
}

}  // namespace ease::simd::detail
