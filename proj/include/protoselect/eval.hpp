#pragma once

#include "protoselect/instance.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace protoselect {

// All evaluation goes through Dissimilarity::peek and never moves the query counter.

/// f(M) = sum_j q_j max_{i in M} (1 - d(j,i)); f(empty) = 0.
double objective(const ProblemInstance& instance, std::span<const std::size_t> chosen);

/// f of every prefix of `chosen`: entry t is f(chosen[0..t]).
std::vector<double> objective_trace(const ProblemInstance& instance, std::span<const std::size_t> chosen);

struct Optimum {
    std::vector<std::size_t> chosen;  // ascending
    double value = 0.0;
};

/// Largest number of subsets brute_force_optimum will enumerate.
inline constexpr std::uint64_t kBruteForceLimit = 1'000'000;

/// Exhaustive search over all k-subsets; the lexicographically least subset wins ties.
/// Throws SizeError when C(|S|, k) exceeds kBruteForceLimit.
Optimum brute_force_optimum(const ProblemInstance& instance);

/// Weighted fraction of targets whose nearest chosen prototype (lowest index on
/// ties) carries the target's label.
double accuracy(const ProblemInstance& instance, std::span<const std::size_t> chosen,
                std::span<const int> target_labels, std::span<const int> source_labels);

/// Same, with labels taken from the instance's point sets. Throws LabelError if absent.
double accuracy(const ProblemInstance& instance, std::span<const std::size_t> chosen);

enum class AccountingMode { cached, strict };

std::string_view to_string(AccountingMode mode) noexcept;
AccountingMode parse_accounting_mode(std::string_view name);

struct RunParams {
    std::size_t k = 0;
    std::size_t r = 1;
    double skew = 100.0;
    double epsilon = 0.0;
    double nu = 0.0;
    double delta = 0.0;
    std::string strategy = "none";
    std::uint64_t seed = 0;
    AccountingMode accounting = AccountingMode::cached;
};

/// Outcome of one algorithm run.
struct RunRecord {
    std::string algorithm;
    RunParams params;
    std::size_t run = 0;  // index within its grid cell
    std::uint64_t bai_queries = 0;
    std::uint64_t maintenance_queries = 0;
    std::uint64_t total_queries = 0;
    std::vector<double> objective_trace;        // length k
    std::vector<std::uint64_t> queries_trace;   // cumulative total queries after each prototype
    double final_objective = 0.0;
    std::optional<double> accuracy;
    double wall_time_ms = 0.0;
    std::vector<std::size_t> chosen;
    std::string error;  // non-empty for a failed run
};

}  // namespace protoselect
