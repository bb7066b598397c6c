#pragma once

#include "protoselect/bandit.hpp"
#include "protoselect/eval.hpp"
#include "protoselect/exact.hpp"

#include <cstddef>
#include <cstdint>
#include <vector>

namespace protoselect {

struct ProtoBanditConfig {
    double epsilon = 0.2;
    double nu = 0.05;
    double delta = 0.04;
    BaiStrategy strategy = BaiStrategy::aba;
    std::uint64_t rng_seed = 0;
    AccountingMode accounting = AccountingMode::cached;

    /// Throws ParameterError unless epsilon in (0,1), nu in (0, 1 - 1/e - epsilon)
    /// and delta in (0, 0.05).
    void validate() const;

    /// Tolerance handed to the bandit: nu / (1 - 1/e - epsilon).
    double arm_tolerance() const;
};

/// ceil((|S|/k) ln(1/epsilon)) clamped to [1, available].
std::size_t subset_size(std::size_t source_size, std::size_t k, double epsilon, std::size_t available);

/// 9 k |S| (nu / (1 - epsilon - 1/e))^{-2} ln(1/epsilon) ln(k/delta).
double similarity_query_bound(std::size_t k, std::size_t source_size, double epsilon, double nu, double delta);

struct IterationStats {
    std::size_t sampled = 0;  // |R| before removing duplicates
    std::size_t arms = 0;     // distinct candidates given to the bandit
    std::uint64_t pulls = 0;
    std::size_t selected = 0;
};

struct ProtoBanditRun {
    PrototypeState state;
    RunRecord record;
    std::vector<IterationStats> iterations;
    // Queries actually issued while pulling (one per pull; D_j is cached).
    std::uint64_t bai_queries_cached = 0;
    // Pulls in iteration i charged (i - 1) comparisons each, as if D_j were
    // recomputed from the i - 1 chosen prototypes on every pull.
    std::uint64_t bai_queries_strict = 0;
    // |T| queries per iteration to refresh D_j and E_j after a selection.
    std::uint64_t maintenance_queries = 0;
};

/// Stochastic-greedy subset sampling plus best-arm identification per step.
ProtoBanditRun protobandit(const ProblemInstance& instance, const ProtoBanditConfig& config);

}  // namespace protoselect
