#pragma once

#include <string>
#include <vector>

namespace gsmp {

// One end-to-end check of the numerical machinery.  Tolerances and runtime
// caps live in the implementations; `detail` reports the worst measured
// quantity either way.
struct CriterionResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

// Runs the full suite in order.  Exceptions inside a criterion are caught
// and reported as failures, never skipped.
std::vector<CriterionResult> run_acceptance();

// Prints one PASS/FAIL line per criterion to stdout; returns the number of
// failures (process exit code for the CLI wrappers).
int acceptance_main();

}  // namespace gsmp
