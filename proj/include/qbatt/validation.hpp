#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qbatt {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0;
};

// Runs the validation criteria and prints one pass/fail line per criterion.
// fast restricts to the N<=2 subset (CI budget). cli_path is the simulator
// binary used for the end-to-end determinism check; when empty the check
// falls back to in-process emission.
std::vector<CriterionResult> run_validation(bool fast, std::ostream& log,
                                            const std::string& cli_path);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace qbatt
