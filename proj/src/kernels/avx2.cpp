// AVX2/FMA variants of the kernels in kernels.hpp. Compiled with -mavx2 -mfma;
// only reachable after the dispatcher has confirmed CPU support.

#include "kernels_impl.hpp"

#if defined(HARDY_HAVE_AVX2)

#include <immintrin.h>

#include <algorithm>
#include <cmath>
#include <cstring>

namespace hardy::kernels::detail {

namespace {

inline __m256d set1(double v) { return _mm256_set1_pd(v); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Natural log for positive finite lanes (subnormals included). log(0) = -inf,
// negative lanes yield NaN, +inf stays +inf.
inline __m256d vlog(__m256d x) {
  const __m256d zero = _mm256_setzero_pd();
  const __m256d tiny = set1(2.2250738585072014e-308);
  const __m256d is_sub = _mm256_cmp_pd(x, tiny, _CMP_LT_OQ);
  const __m256d xs = _mm256_blendv_pd(x, _mm256_mul_pd(x, set1(18014398509481984.0)), is_sub);
  const __m256d k_sub = _mm256_and_pd(is_sub, set1(54.0));

  const __m256i bits = _mm256_castpd_si256(xs);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000fffffffffffffLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3ff0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // Biased exponent -> double via the 2^52 trick.
  const __m256i e_bits = _mm256_srli_epi64(bits, 52);
  const __m256d magic = set1(4503599627370496.0);
  __m256d k = _mm256_sub_pd(
      _mm256_castsi256_pd(_mm256_or_si256(e_bits, _mm256_castpd_si256(magic))), magic);
  k = _mm256_sub_pd(k, _mm256_add_pd(set1(1023.0), k_sub));

  const __m256d big = _mm256_cmp_pd(m, set1(1.4142135623730951), _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, set1(0.5)), big);
  k = _mm256_add_pd(k, _mm256_and_pd(big, set1(1.0)));

  const __m256d f = _mm256_sub_pd(m, set1(1.0));
  const __m256d s = _mm256_div_pd(f, _mm256_add_pd(set1(2.0), f));
  const __m256d z = _mm256_mul_pd(s, s);
  // 1 + z/3 + z^2/5 + ... + z^11/23
  __m256d poly = set1(1.0 / 23.0);
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 21.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 19.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 17.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 15.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 13.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 11.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 9.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 7.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 5.0));
  poly = _mm256_fmadd_pd(poly, z, set1(1.0 / 3.0));
  // log m = 2 atanh(s) = 2s * (1 + z/3 + z^2/5 + ...)
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d tail = _mm256_mul_pd(_mm256_mul_pd(two_s, z), poly);
  const __m256d logm = _mm256_add_pd(two_s, tail);

  const __m256d ln2_hi = set1(6.93147180369123816490e-01);
  const __m256d ln2_lo = set1(1.90821492927058770002e-10);
  __m256d r = _mm256_fmadd_pd(k, ln2_lo, logm);
  r = _mm256_fmadd_pd(k, ln2_hi, r);

  const __m256d is_zero = _mm256_cmp_pd(x, zero, _CMP_EQ_OQ);
  const __m256d is_neg = _mm256_cmp_pd(x, zero, _CMP_LT_OQ);
  const __m256d is_inf = _mm256_cmp_pd(x, set1(HUGE_VAL), _CMP_EQ_OQ);
  r = _mm256_blendv_pd(r, set1(-HUGE_VAL), is_zero);
  r = _mm256_blendv_pd(r, set1(std::nan("")), is_neg);
  r = _mm256_blendv_pd(r, set1(HUGE_VAL), is_inf);
  return r;
}

// exp with Cody-Waite reduction and the classic (2,3) Pade form.
inline __m256d vexp(__m256d y) {
  const __m256d hi_cut = set1(709.782712893384);
  const __m256d lo_cut = set1(-745.1332191019411);
  const __m256d overflow = _mm256_cmp_pd(y, hi_cut, _CMP_GT_OQ);
  const __m256d underflow = _mm256_cmp_pd(y, lo_cut, _CMP_LT_OQ);
  const __m256d nan_mask = _mm256_cmp_pd(y, y, _CMP_UNORD_Q);
  __m256d x = _mm256_min_pd(_mm256_max_pd(y, lo_cut), hi_cut);

  const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, set1(1.4426950408889634)),
                                    _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
  x = _mm256_fnmadd_pd(n, set1(6.93145751953125E-1), x);
  x = _mm256_fnmadd_pd(n, set1(1.42860682030941723212E-6), x);

  const __m256d xx = _mm256_mul_pd(x, x);
  __m256d p = set1(1.26177193074810590878E-4);
  p = _mm256_fmadd_pd(p, xx, set1(3.02994407707441961300E-2));
  p = _mm256_fmadd_pd(p, xx, set1(9.99999999999999999910E-1));
  const __m256d px = _mm256_mul_pd(p, x);
  __m256d q = set1(3.00198505138664455042E-6);
  q = _mm256_fmadd_pd(q, xx, set1(2.52448340349684104192E-3));
  q = _mm256_fmadd_pd(q, xx, set1(2.27265548208155028766E-1));
  q = _mm256_fmadd_pd(q, xx, set1(2.00000000000000000009E0));
  __m256d r = _mm256_div_pd(px, _mm256_sub_pd(q, px));
  r = _mm256_fmadd_pd(set1(2.0), r, set1(1.0));

  // Scale by 2^n in two halves so that |n| up to ~1075 stays representable.
  const __m128i ni = _mm256_cvtpd_epi32(n);
  const __m128i n1 = _mm_srai_epi32(ni, 1);
  const __m128i n2 = _mm_sub_epi32(ni, n1);
  const __m256i bias = _mm256_set1_epi64x(1023);
  const __m256d s1 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n1), bias), 52));
  const __m256d s2 = _mm256_castsi256_pd(
      _mm256_slli_epi64(_mm256_add_epi64(_mm256_cvtepi32_epi64(n2), bias), 52));
  r = _mm256_mul_pd(_mm256_mul_pd(r, s1), s2);

  r = _mm256_blendv_pd(r, set1(HUGE_VAL), overflow);
  r = _mm256_blendv_pd(r, _mm256_setzero_pd(), underflow);
  r = _mm256_blendv_pd(r, y, nan_mask);
  return r;
}

enum class PowPath { Zero, Half, One, ThreeHalves, Two, General };

inline PowPath classify(double e) {
  if (e == 0.0) return PowPath::Zero;
  if (e == 0.5) return PowPath::Half;
  if (e == 1.0) return PowPath::One;
  if (e == 1.5) return PowPath::ThreeHalves;
  if (e == 2.0) return PowPath::Two;
  return PowPath::General;
}

// (b)^e for b >= 0 lanes, with 0^e = 0 (e > 0), 1 (e == 0), +inf (e < 0).
inline __m256d vpow(__m256d b, double e, PowPath path) {
  switch (path) {
    case PowPath::Zero:
      return set1(1.0);
    case PowPath::Half:
      return _mm256_sqrt_pd(b);
    case PowPath::One:
      return b;
    case PowPath::ThreeHalves:
      return _mm256_mul_pd(b, _mm256_sqrt_pd(b));
    case PowPath::Two:
      return _mm256_mul_pd(b, b);
    case PowPath::General:
      break;
  }
  __m256d r = vexp(_mm256_mul_pd(set1(e), vlog(b)));
  const __m256d is_zero = _mm256_cmp_pd(b, _mm256_setzero_pd(), _CMP_EQ_OQ);
  r = _mm256_blendv_pd(r, set1(e > 0.0 ? 0.0 : HUGE_VAL), is_zero);
  return r;
}

inline double scalar_pow(double b, double e) {
  if (b == 0.0) return e > 0.0 ? 0.0 : (e == 0.0 ? 1.0 : HUGE_VAL);
  return std::pow(b, e);
}

double avx2_weighted_pow_sum(std::span<const double> w, std::span<const double> s, double e,
                             double shift) {
  const std::size_t n = w.size();
  const PowPath path = classify(e);
  const __m256d vshift = set1(shift);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t q = 0;
  for (; q + 8 <= n; q += 8) {
    const __m256d b0 = _mm256_add_pd(_mm256_loadu_pd(s.data() + q), vshift);
    const __m256d b1 = _mm256_add_pd(_mm256_loadu_pd(s.data() + q + 4), vshift);
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w.data() + q), vpow(b0, e, path), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w.data() + q + 4), vpow(b1, e, path), acc1);
  }
  for (; q + 4 <= n; q += 4) {
    const __m256d b0 = _mm256_add_pd(_mm256_loadu_pd(s.data() + q), vshift);
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w.data() + q), vpow(b0, e, path), acc0);
  }
  double total = hsum(_mm256_add_pd(acc0, acc1));
  for (; q < n; ++q) total += w[q] * scalar_pow(s[q] + shift, e);
  return total;
}

void avx2_weighted_pow(std::span<const double> w, std::span<const double> s, double e,
                       double shift, std::span<double> out) {
  const std::size_t n = w.size();
  const PowPath path = classify(e);
  const __m256d vshift = set1(shift);
  std::size_t q = 0;
  for (; q + 4 <= n; q += 4) {
    const __m256d b = _mm256_add_pd(_mm256_loadu_pd(s.data() + q), vshift);
    _mm256_storeu_pd(out.data() + q, _mm256_mul_pd(_mm256_loadu_pd(w.data() + q), vpow(b, e, path)));
  }
  for (; q < n; ++q) out[q] = w[q] * scalar_pow(s[q] + shift, e);
}

void avx2_gather_combine(const GatherView& view, std::span<const double> u,
                         std::span<double> out) {
  const std::size_t n = view.points;
  const int arity = view.arity;
  const double* base = u.data();
  std::size_t q = 0;
  for (; q + 4 <= n; q += 4) {
    __m256d acc = _mm256_setzero_pd();
    for (int a = 0; a < arity; ++a) {
      const std::size_t off = static_cast<std::size_t>(a) * n + q;
      const __m128i vi =
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(view.index.data() + off));
      const __m256d uv = _mm256_i32gather_pd(base, vi, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(view.coef.data() + off), uv, acc);
    }
    _mm256_storeu_pd(out.data() + q, acc);
  }
  for (; q < n; ++q) {
    double acc = 0.0;
    for (int a = 0; a < arity; ++a) {
      const std::size_t off = static_cast<std::size_t>(a) * n + q;
      acc += view.coef[off] * u[view.index[off]];
    }
    out[q] = acc;
  }
}

void avx2_cap_min(std::span<const double> x, double cap, std::span<double> out) {
  const std::size_t n = x.size();
  const __m256d vcap = set1(cap);
  std::size_t q = 0;
  for (; q + 4 <= n; q += 4) {
    // min_pd returns the second operand when either is NaN.
    _mm256_storeu_pd(out.data() + q, _mm256_min_pd(_mm256_loadu_pd(x.data() + q), vcap));
  }
  for (; q < n; ++q) out[q] = (x[q] < cap) ? x[q] : cap;
}

}  // namespace

const KernelTable kAvx2Table{Isa::Avx2, avx2_weighted_pow_sum, avx2_weighted_pow,
                             avx2_gather_combine, avx2_cap_min};

}  // namespace hardy::kernels::detail

#endif  // HARDY_HAVE_AVX2
