#ifndef MODCRF_VERIFY_HPP
#define MODCRF_VERIFY_HPP

#include <functional>
#include <string>
#include <vector>

#include "modcrf/crf.hpp"

// The release-gate oracle suite: CRF brute-force equivalence, gradient
// checks on every variant, label-algebra round-trips, partial-label masking
// zeros, and the gate-saturation reduction. Decode/partition hooks exist so
// tests can prove the oracles catch injected faults.

namespace modcrf {

struct VerifyHooks {
  std::function<Tensor(const CrfPotentials&)> log_partition = nullptr;
  std::function<ViterbiResult(const CrfPotentials&)> viterbi = nullptr;
};

struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyCheck> checks;
  bool all_passed() const {
    for (const auto& c : checks)
      if (!c.passed) return false;
    return true;
  }
};

VerifyReport run_verification(const VerifyHooks& hooks = {});

}  // namespace modcrf

#endif  // MODCRF_VERIFY_HPP
