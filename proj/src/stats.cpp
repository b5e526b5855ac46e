#include "afs/stats.hpp"

#include <cmath>

#include "afs/errors.hpp"

namespace afs::stats {

Interval binomial_ci(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) throw InvalidArgument("binomial_ci: zero trials");
  if (successes > trials) {
    throw InvalidArgument("binomial_ci: successes exceed trials");
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  Interval out;
  out.lo = center - half;
  out.hi = center + half;
  if (out.lo < 0.0) out.lo = 0.0;
  if (out.hi > 1.0) out.hi = 1.0;
  return out;
}

double two_proportion_z(std::size_t s1, std::size_t n1, std::size_t s0,
                        std::size_t n0) {
  if (n1 == 0 || n0 == 0) return 0.0;
  const double p1 = static_cast<double>(s1) / static_cast<double>(n1);
  const double p0 = static_cast<double>(s0) / static_cast<double>(n0);
  const double pooled = static_cast<double>(s1 + s0) /
                        static_cast<double>(n1 + n0);
  const double se = std::sqrt(pooled * (1.0 - pooled) *
                              (1.0 / static_cast<double>(n1) +
                               1.0 / static_cast<double>(n0)));
  if (se == 0.0) return 0.0;
  return (p1 - p0) / se;
}

LineFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw InvalidArgument("fit_loglog: need >= 2 paired points");
  }
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw InvalidArgument("fit_loglog: inputs must be positive");
    }
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw InvalidArgument("fit_loglog: degenerate x values");
  LineFit fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace afs::stats
