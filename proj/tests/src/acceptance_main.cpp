// Acceptance gate: runs the invariant suite and every acceptance criterion,
// prints one PASS/FAIL line per check, and exits nonzero if anything failed.
//
// Usage: memfem_acceptance [--scratch <dir>] [--level quick|full]

#include <cstdio>
#include <cstring>
#include <string>
#include <vector>

#include "memfem/checks.hpp"

int main(int argc, char** argv) {
    std::string scratch = "acceptance_scratch";
    std::string level_name = "full";

    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--scratch") == 0 && i + 1 < argc) {
            scratch = argv[++i];
        } else if (std::strcmp(argv[i], "--level") == 0 && i + 1 < argc) {
            level_name = argv[++i];
        } else {
            std::fprintf(stderr,
                         "usage: %s [--scratch <dir>] [--level quick|full]\n",
                         argv[0]);
            return 2;
        }
    }
    if (level_name != "quick" && level_name != "full") {
        std::fprintf(stderr, "level must be quick or full\n");
        return 2;
    }
    const memfem::CheckLevel level = level_name == "full"
                                         ? memfem::CheckLevel::Full
                                         : memfem::CheckLevel::Quick;

    std::vector<memfem::CheckResult> report = memfem::run_invariant_checks(level);
    {
        std::vector<memfem::CheckResult> acc =
            memfem::run_acceptance_checks(level, scratch);
        report.insert(report.end(), acc.begin(), acc.end());
    }

    int failed = 0;
    for (const memfem::CheckResult& check : report) {
        std::printf("%s %s", check.passed ? "PASS" : "FAIL", check.name.c_str());
        if (!check.detail.empty()) std::printf("  [%s]", check.detail.c_str());
        std::printf("\n");
        std::fflush(stdout);
        if (!check.passed) ++failed;
    }
    std::printf("%d/%zu checks passed (%s)\n", static_cast<int>(report.size()) - failed,
                report.size(), level_name.c_str());
    return failed == 0 ? 0 : 3;
}
