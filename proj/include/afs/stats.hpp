#pragma once

#include <cstddef>
#include <span>

// Small frequentist toolbox for the experiment harness and acceptance
// checks.  Everything is closed-form; no RNG in here.

namespace afs::stats {

// z for a two-sided 99% interval / one-sided 0.5% tail.
inline constexpr double kZ99 = 2.5758293035489004;
// z for a one-sided test at p < 0.01.
inline constexpr double kZ99OneSided = 2.3263478740408408;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double p) const { return p >= lo && p <= hi; }
};

// Wilson score interval (well-behaved at p-hat = 0 or 1).
Interval binomial_ci(std::size_t successes, std::size_t trials,
                     double z = kZ99);

// Pooled one-sided two-proportion z statistic for H1: p1 > p0.
// Returns 0 when both samples are empty.
double two_proportion_z(std::size_t s1, std::size_t n1, std::size_t s0,
                        std::size_t n0);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares of log(y) on log(x); inputs must be positive.
LineFit fit_loglog(std::span<const double> x, std::span<const double> y);

}  // namespace afs::stats
