#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ssmc {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

/// "PASS  3  limit-process convergence ... detail" style line.
std::string format_criterion(const CriterionResult& r);

/// Runs the twelve acceptance criteria in order. `on_result` (if set) is
/// called as each one finishes.
std::vector<CriterionResult> run_acceptance(
    const std::function<void(const CriterionResult&)>& on_result = {});

/// Runs a single criterion by id (1..12).
CriterionResult run_criterion(int id);

}  // namespace ssmc
