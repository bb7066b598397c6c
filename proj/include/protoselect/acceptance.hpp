#pragma once

#include <cstdint>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

namespace protoselect {

struct CriterionResult {
    int id = 0;
    std::string title;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::set<int> only;        // empty runs criteria 1..8
    std::uint64_t seed = 20240611;
    std::ostream* progress = nullptr;  // optional per-criterion log
};

inline constexpr int kCriterionCount = 8;

/// Runs the selected criteria. Runs made by one criterion that use the aba
/// strategy also feed the budget checks of criteria 3 and 6, which run last.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options);

/// "PASS 3 strict query budget: ..." style line.
std::string format_result(const CriterionResult& result);

}  // namespace protoselect
