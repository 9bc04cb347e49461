// Runs every packaged verification suite and prints one pass/fail line per
// criterion; the process exits nonzero if any criterion fails.

#include <cstdio>

#include "conormal_lab/harness.hpp"

int main() {
    clab::harness::SuiteResult result = clab::harness::acceptance_suite("all");
    int failures = 0;
    for (const auto& c : result.results) {
        std::printf("[%s] %s  (%s)\n", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                    c.detail.c_str());
        if (!c.passed) ++failures;
    }
    std::printf("%zu criteria, %d failed, %.1f s total\n", result.results.size(), failures,
                result.wall_seconds);
    return failures == 0 ? 0 : 1;
}
