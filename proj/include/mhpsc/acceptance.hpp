#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mhpsc::accept {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

// Runs the nine release criteria in order, printing one PASS/FAIL line per
// criterion to `log` as each finishes. `data_dir` holds the shipped LDPC
// codes and trained weights; `work_dir` is scratch space for determinism
// artifacts (created if needed).
std::vector<CriterionResult> run_all(const std::string& data_dir, const std::string& work_dir,
                                     std::ostream& log);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace mhpsc::accept
