#pragma once

#include <string>
#include <vector>

namespace memfem {

struct CheckResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

enum class CheckLevel { Quick, Full };

// Cheap re-assertions of the per-module invariants (mesh structure, solver
// oracles, conservation identities, dissipativity, superposition).
std::vector<CheckResult> run_invariant_checks(CheckLevel level);

// The acceptance criteria. Quick runs a reduced-budget subset; Full runs all
// eleven. scratch_dir is used for determinism artifacts.
std::vector<CheckResult> run_acceptance_checks(CheckLevel level,
                                               const std::string& scratch_dir);

}  // namespace memfem
