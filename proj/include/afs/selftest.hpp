#pragma once

#include <string>
#include <vector>

// The invariant suite behind `afs selftest` and the acceptance runner: each
// check exercises one numbered guarantee end-to-end against an independent
// oracle (algebraic identity, finite differences, closed forms, Monte Carlo
// statistics) and reports pass/fail with a one-line metric trail.

namespace afs::selftest {

struct CheckResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double ms = 0.0;
};

// Checks 1-6, 9, 10 (the fast, laptop-scale set run by `afs selftest`).
std::vector<CheckResult> run_core_checks();

// The two Monte Carlo comparisons (slow set, acceptance runner only).
CheckResult run_closed_loop_gain();      // check 7
CheckResult run_width_monotonicity();    // check 8

// Formats "[PASS]/[FAIL] criterion N: name (detail) [x ms]".
std::string format_result(const CheckResult& r);

}  // namespace afs::selftest
