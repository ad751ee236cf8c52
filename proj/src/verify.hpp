#pragma once

namespace cfpgd::app {

struct VerifyOptions {
  bool full = false;              // add randomized suites and the 32x32 run
  bool inject_asymmetry = false;  // test hook: corrupt a stiffness entry
};

/// Runs the built-in invariant suites, printing one PASS/FAIL line per check.
/// Returns 0 when everything passes, 1 otherwise (first failure named).
int run_verify(const VerifyOptions& options);

}  // namespace cfpgd::app
