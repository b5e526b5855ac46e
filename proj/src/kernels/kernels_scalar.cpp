#include "afs/kernels.hpp"

// Reference kernels.  Every SIMD variant must reproduce these element-wise
// expressions exactly (same operation order, no contraction), so keep the
// arithmetic here deliberately explicit; this file is the contract.

namespace afs::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * b[i];
  return acc;
}

double sum_sq_scalar(const double* a, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += a[i] * a[i];
  return acc;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void scale_add_scalar(double alpha, const double* x, const double* y,
                      double* out, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) out[i] = y[i] + alpha * x[i];
}

void steer_blend_scalar(const double* v, const double* grad,
                        const double* mask, double scale, double* out,
                        std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    // Copy, don't add zero: v + 0.0 would flip -0.0 to +0.0.
    out[i] = (mask[i] == 0.0) ? v[i] : v[i] + scale * grad[i] * mask[i];
  }
}

double gmm_quad_scalar(const double* x, const double* mu, const double* s2,
                       double a, double t, std::size_t n) {
  const double a2 = a * a;
  const double t2 = t * t;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - a * mu[i];
    acc += (d * d) / (a2 * s2[i] + t2);
  }
  return acc;
}

void gmm_vel_accum_scalar(double r, const double* x, const double* mu,
                          const double* s2, double a, double t, double* out,
                          std::size_t n) {
  const double a2 = a * a;
  const double t2 = t * t;
  for (std::size_t i = 0; i < n; ++i) {
    const double denom = a2 * s2[i] + t2;
    const double coef = (t - a * s2[i]) / denom;
    out[i] = out[i] + r * (coef * (x[i] - a * mu[i]) - mu[i]);
  }
}

}  // namespace

const KernelOps& scalar_ops() {
  static const KernelOps ops{
      "scalar",         dot_scalar,      sum_sq_scalar,
      axpy_scalar,      scale_add_scalar, steer_blend_scalar,
      gmm_quad_scalar,  gmm_vel_accum_scalar,
  };
  return ops;
}

}  // namespace afs::kernels
