#pragma once

// The acceptance checks, with their tolerances. At scale 1 every check runs at
// its full replicate count; `bbm validate` defaults to a fraction of that.

#include <iosfwd>
#include <string>
#include <vector>

namespace bbm::harness {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
};

struct CriteriaOptions {
    double scale = 1.0;    ///< multiplies every replicate count (with a floor)
    unsigned threads = 1;  ///< 0: machine parallelism
};

inline constexpr int kCriterionCount = 12;

CriterionResult run_criterion(int id, const CriteriaOptions& opts);

/// "criterion 07 FAIL  <title> | <detail>"
std::string format_result(const CriterionResult& r);

/// Runs 1..12 in order, printing one line each as it finishes.
std::vector<CriterionResult> run_criteria(const CriteriaOptions& opts, std::ostream& out);

}  // namespace bbm::harness
