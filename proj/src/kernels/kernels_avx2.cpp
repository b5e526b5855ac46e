#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "afs/kernels.hpp"

// AVX2 kernels, 4 doubles per lane-group with a scalar tail that reuses the
// reference expressions verbatim.  Element-wise kernels use only mul/add/sub/
// div intrinsics (never fmadd) so they stay bit-identical to the scalar
// reference; reductions keep one vector accumulator and fold it at the end,
// which reassociates — tests compare those to a tolerance.

namespace afs::kernels {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  __m128d s = _mm_add_pd(lo, hi);
  __m128d sh = _mm_unpackhi_pd(s, s);
  return _mm_cvtsd_f64(_mm_add_sd(s, sh));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc = _mm256_add_pd(
        acc, _mm256_mul_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i)));
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i] * b[i];
  return out;
}

double sum_sq_avx2(const double* a, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d v = _mm256_loadu_pd(a + i);
    acc = _mm256_add_pd(acc, _mm256_mul_pd(v, v));
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i] * a[i];
  return out;
}

void axpy_avx2(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i),
                              _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(y + i, r);
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_add_avx2(double alpha, const double* x, const double* y,
                    double* out, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d r = _mm256_add_pd(_mm256_loadu_pd(y + i),
                              _mm256_mul_pd(va, _mm256_loadu_pd(x + i)));
    _mm256_storeu_pd(out + i, r);
  }
  for (; i < n; ++i) out[i] = y[i] + alpha * x[i];
}

void steer_blend_avx2(const double* v, const double* grad, const double* mask,
                      double scale, double* out, std::size_t n) {
  const __m256d vs = _mm256_set1_pd(scale);
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vv = _mm256_loadu_pd(v + i);
    __m256d vm = _mm256_loadu_pd(mask + i);
    __m256d steered = _mm256_add_pd(
        vv, _mm256_mul_pd(_mm256_mul_pd(vs, _mm256_loadu_pd(grad + i)), vm));
    // Where mask == 0, keep v verbatim (preserves -0.0 in v).
    __m256d keep = _mm256_cmp_pd(vm, zero, _CMP_EQ_OQ);
    _mm256_storeu_pd(out + i, _mm256_blendv_pd(steered, vv, keep));
  }
  for (; i < n; ++i) {
    out[i] = (mask[i] == 0.0) ? v[i] : v[i] + scale * grad[i] * mask[i];
  }
}

double gmm_quad_avx2(const double* x, const double* mu, const double* s2,
                     double a, double t, std::size_t n) {
  const double a2s = a * a;
  const double t2s = t * t;
  const __m256d va = _mm256_set1_pd(a);
  const __m256d va2 = _mm256_set1_pd(a2s);
  const __m256d vt2 = _mm256_set1_pd(t2s);
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i),
                              _mm256_mul_pd(va, _mm256_loadu_pd(mu + i)));
    __m256d denom =
        _mm256_add_pd(_mm256_mul_pd(va2, _mm256_loadu_pd(s2 + i)), vt2);
    acc = _mm256_add_pd(acc, _mm256_div_pd(_mm256_mul_pd(d, d), denom));
  }
  double out = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - a * mu[i];
    out += (d * d) / (a2s * s2[i] + t2s);
  }
  return out;
}

void gmm_vel_accum_avx2(double r, const double* x, const double* mu,
                        const double* s2, double a, double t, double* out,
                        std::size_t n) {
  const double a2s = a * a;
  const double t2s = t * t;
  const __m256d vr = _mm256_set1_pd(r);
  const __m256d va = _mm256_set1_pd(a);
  const __m256d va2 = _mm256_set1_pd(a2s);
  const __m256d vt = _mm256_set1_pd(t);
  const __m256d vt2 = _mm256_set1_pd(t2s);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d vs2 = _mm256_loadu_pd(s2 + i);
    __m256d vmu = _mm256_loadu_pd(mu + i);
    __m256d denom = _mm256_add_pd(_mm256_mul_pd(va2, vs2), vt2);
    __m256d coef =
        _mm256_div_pd(_mm256_sub_pd(vt, _mm256_mul_pd(va, vs2)), denom);
    __m256d diff =
        _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_mul_pd(va, vmu));
    __m256d term = _mm256_sub_pd(_mm256_mul_pd(coef, diff), vmu);
    __m256d res =
        _mm256_add_pd(_mm256_loadu_pd(out + i), _mm256_mul_pd(vr, term));
    _mm256_storeu_pd(out + i, res);
  }
  for (; i < n; ++i) {
    const double denom = a2s * s2[i] + t2s;
    const double coef = (t - a * s2[i]) / denom;
    out[i] = out[i] + r * (coef * (x[i] - a * mu[i]) - mu[i]);
  }
}

}  // namespace

const KernelOps& avx2_ops() {
  static const KernelOps ops{
      "avx2",         dot_avx2,       sum_sq_avx2,
      axpy_avx2,      scale_add_avx2, steer_blend_avx2,
      gmm_quad_avx2,  gmm_vel_accum_avx2,
  };
  return ops;
}

bool avx2_supported() { return __builtin_cpu_supports("avx2") != 0; }

}  // namespace afs::kernels

#endif  // x86-64
