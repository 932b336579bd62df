// Full-size validation suite; one pass/fail line per criterion. The first
// argument is the simulator CLI used by the determinism criterion.

#include <iostream>

#include "qbatt/validation.hpp"

int main(int argc, char** argv) {
    const std::string cli_path = argc > 1 ? argv[1] : "";
    const auto results = qbatt::run_validation(/*fast=*/false, std::cout, cli_path);
    return qbatt::all_passed(results) ? 0 : 1;
}
