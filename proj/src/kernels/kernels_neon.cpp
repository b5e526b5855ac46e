#if defined(__aarch64__)

#include <arm_neon.h>

#include "afs/kernels.hpp"

// NEON kernels, 2 doubles per lane-group.  Same discipline as the AVX2 file:
// element-wise kernels avoid fused multiply-add so they match the scalar
// reference bit-for-bit; reductions fold a vector accumulator at the end.

namespace afs::kernels {
namespace {

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i] * b[i];
  return out;
}

double sum_sq_neon(const double* a, std::size_t n) {
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t v = vld1q_f64(a + i);
    acc = vaddq_f64(acc, vmulq_f64(v, v));
  }
  double out = hsum(acc);
  for (; i < n; ++i) out += a[i] * a[i];
  return out;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_add_neon(double alpha, const double* x, const double* y,
                    double* out, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(out + i,
              vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
  }
  for (; i < n; ++i) out[i] = y[i] + alpha * x[i];
}

void steer_blend_neon(const double* v, const double* grad, const double* mask,
                      double scale, double* out, std::size_t n) {
  const float64x2_t vs = vdupq_n_f64(scale);
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vv = vld1q_f64(v + i);
    float64x2_t vm = vld1q_f64(mask + i);
    float64x2_t steered =
        vaddq_f64(vv, vmulq_f64(vmulq_f64(vs, vld1q_f64(grad + i)), vm));
    uint64x2_t keep = vceqq_f64(vm, zero);  // all-ones where mask == 0
    vst1q_f64(out + i, vbslq_f64(keep, vv, steered));
  }
  for (; i < n; ++i) {
    out[i] = (mask[i] == 0.0) ? v[i] : v[i] + scale * grad[i] * mask[i];
  }
}

double gmm_quad_neon(const double* x, const double* mu, const double* s2,
                     double a, double t, std::size_t n) {
  const double a2s = a * a;
  const double t2s = t * t;
  const float64x2_t va = vdupq_n_f64(a);
  const float64x2_t va2 = vdupq_n_f64(a2s);
  const float64x2_t vt2 = vdupq_n_f64(t2s);
  float64x2_t acc = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t d =
        vsubq_f64(vld1q_f64(x + i), vmulq_f64(va, vld1q_f64(mu + i)));
    float64x2_t denom = vaddq_f64(vmulq_f64(va2, vld1q_f64(s2 + i)), vt2);
    acc = vaddq_f64(acc, vdivq_f64(vmulq_f64(d, d), denom));
  }
  double out = hsum(acc);
  for (; i < n; ++i) {
    const double d = x[i] - a * mu[i];
    out += (d * d) / (a2s * s2[i] + t2s);
  }
  return out;
}

void gmm_vel_accum_neon(double r, const double* x, const double* mu,
                        const double* s2, double a, double t, double* out,
                        std::size_t n) {
  const double a2s = a * a;
  const double t2s = t * t;
  const float64x2_t vr = vdupq_n_f64(r);
  const float64x2_t va = vdupq_n_f64(a);
  const float64x2_t va2 = vdupq_n_f64(a2s);
  const float64x2_t vt = vdupq_n_f64(t);
  const float64x2_t vt2 = vdupq_n_f64(t2s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t vs2 = vld1q_f64(s2 + i);
    float64x2_t vmu = vld1q_f64(mu + i);
    float64x2_t denom = vaddq_f64(vmulq_f64(va2, vs2), vt2);
    float64x2_t coef = vdivq_f64(vsubq_f64(vt, vmulq_f64(va, vs2)), denom);
    float64x2_t diff = vsubq_f64(vld1q_f64(x + i), vmulq_f64(va, vmu));
    float64x2_t term = vsubq_f64(vmulq_f64(coef, diff), vmu);
    vst1q_f64(out + i, vaddq_f64(vld1q_f64(out + i), vmulq_f64(vr, term)));
  }
  for (; i < n; ++i) {
    const double denom = a2s * s2[i] + t2s;
    const double coef = (t - a * s2[i]) / denom;
    out[i] = out[i] + r * (coef * (x[i] - a * mu[i]) - mu[i]);
  }
}

}  // namespace

const KernelOps& neon_ops() {
  static const KernelOps ops{
      "neon",         dot_neon,       sum_sq_neon,
      axpy_neon,      scale_add_neon, steer_blend_neon,
      gmm_quad_neon,  gmm_vel_accum_neon,
  };
  return ops;
}

}  // namespace afs::kernels

#endif  // aarch64
