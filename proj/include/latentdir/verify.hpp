#pragma once

// Built-in oracle suite behind `latentdir verify`.

#include <string>
#include <vector>

namespace latentdir {

struct CheckResult {
  std::string name;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct VerifyReport {
  std::vector<CheckResult> checks;
  double seconds = 0.0;

  bool passed() const;
  /// Name of the first failing check, empty when everything passed.
  std::string first_failure() const;
  std::string to_json() const;
};

/// Closed-form Frechet cases run first, then numerics, Amari, ICA recovery,
/// back-projection and the MLP Jacobian check.
VerifyReport run_verification();

}  // namespace latentdir
