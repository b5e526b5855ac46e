#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

// Numeric inner loops used by the flow/steering/search hot paths, provided as
// interchangeable kernel sets: a scalar reference implementation plus SIMD
// variants (AVX2 on x86-64, NEON on aarch64) selected once at runtime.
//
// Equivalence contract, enforced by tests/test_kernels.cpp:
//   * element-wise kernels (axpy, scale_add, steer_blend, gmm_vel_accum) are
//     bit-identical across implementations — every lane evaluates the same
//     expression tree, compiled with -ffp-contract=off so no variant gains an
//     FMA the reference lacks;
//   * reductions (dot, sum_sq, gmm_quad) may reassociate and agree to a
//     relative tolerance instead.
//
// Selection order: AFS_KERNELS env var ("scalar"/"avx2"/"neon") if set,
// otherwise the widest implementation the CPU supports, otherwise scalar.

namespace afs::kernels {

struct KernelOps {
  const char* name;

  // sum_i a[i]*b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);

  // sum_i a[i]^2
  double (*sum_sq)(const double* a, std::size_t n);

  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // out[i] = y[i] + alpha * x[i]   (out may alias y)
  void (*scale_add)(double alpha, const double* x, const double* y,
                    double* out, std::size_t n);

  // Masked steering update with a bitwise identity guarantee:
  //   out[i] = mask[i] == 0.0 ? v[i] : v[i] + scale * grad[i] * mask[i]
  // Lanes with mask 0 copy v[i] verbatim (signs of zeros included).
  void (*steer_blend)(const double* v, const double* grad, const double* mask,
                      double scale, double* out, std::size_t n);

  // Quadratic form of a diagonal Gaussian bridge at time t with a = 1 - t:
  //   sum_i (x[i] - a*mu[i])^2 / ((a*a)*s2[i] + t*t)
  double (*gmm_quad)(const double* x, const double* mu, const double* s2,
                     double a, double t, std::size_t n);

  // Responsibility-weighted velocity accumulation for one mixture component:
  //   coef[i]  = (t - a*s2[i]) / ((a*a)*s2[i] + t*t)
  //   out[i]  += r * (coef[i] * (x[i] - a*mu[i]) - mu[i])
  void (*gmm_vel_accum)(double r, const double* x, const double* mu,
                        const double* s2, double a, double t, double* out,
                        std::size_t n);
};

const KernelOps& scalar_ops();

#if defined(__x86_64__) || defined(_M_X64)
const KernelOps& avx2_ops();   // callable only if avx2_supported()
bool avx2_supported();
#endif
#if defined(__aarch64__)
const KernelOps& neon_ops();
#endif

// Runtime-selected implementation (memoized on first call).  Throws
// afs::InvalidArgument if AFS_KERNELS names an unknown or unsupported set.
const KernelOps& active();

// Lookup by the names AFS_KERNELS accepts; throws afs::InvalidArgument for
// unknown or unsupported names.
const KernelOps& by_name(const std::string& want);

// Every implementation usable on this machine (scalar first).
std::vector<const KernelOps*> available();

// ---- thin span conveniences over the active kernel set ------------------

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline double sum_sq(std::span<const double> a) {
  return active().sum_sq(a.data(), a.size());
}

inline double norm(std::span<const double> a) {
  return std::sqrt(active().sum_sq(a.data(), a.size()));
}

inline void axpy(double alpha, std::span<const double> x,
                 std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

inline std::vector<double> scale_add(double alpha, std::span<const double> x,
                                     std::span<const double> y) {
  std::vector<double> out(y.size());
  active().scale_add(alpha, x.data(), y.data(), out.data(), x.size());
  return out;
}

}  // namespace afs::kernels
