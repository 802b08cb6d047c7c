#pragma once

#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "typecrowd/rng.hpp"

namespace typecrowd {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

struct AcceptanceOptions {
  bool quick = false;  // fewer trials; count thresholds scale with the trial count
  Seed seed{2021};
  std::vector<int> only;  // criterion ids to run; empty runs all
};

/// Runs the acceptance criteria in order. `report` is called after each one.
std::vector<CriterionResult> run_acceptance(
    const AcceptanceOptions& options,
    const std::function<void(const CriterionResult&)>& report = {});

/// One line per criterion: "criterion N PASS|FAIL name: detail (s)".
std::string format_result(const CriterionResult& result);

}  // namespace typecrowd
