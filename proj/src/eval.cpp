#include "protoselect/eval.hpp"

#include "protoselect/error.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace protoselect {

double objective(const ProblemInstance& instance, std::span<const std::size_t> chosen) {
    if (chosen.empty()) return 0.0;
    const auto& d = *instance.dissimilarity;
    double total = 0.0;
    for (std::size_t j = 0; j < instance.target_size(); ++j) {
        double best = 0.0;
        for (std::size_t i : chosen) best = std::max(best, 1.0 - d.peek(j, i));
        total += instance.weights[j] * best;
    }
    return total;
}

std::vector<double> objective_trace(const ProblemInstance& instance, std::span<const std::size_t> chosen) {
    const auto& d = *instance.dissimilarity;
    const std::size_t targets = instance.target_size();
    std::vector<double> best(targets, 0.0);
    std::vector<double> trace;
    trace.reserve(chosen.size());
    for (std::size_t i : chosen) {
        double total = 0.0;
        for (std::size_t j = 0; j < targets; ++j) {
            best[j] = std::max(best[j], 1.0 - d.peek(j, i));
            total += instance.weights[j] * best[j];
        }
        trace.push_back(total);
    }
    return trace;
}

namespace {

// C(n, k), saturating just above `limit`.
std::uint64_t bounded_binomial(std::uint64_t n, std::uint64_t k, std::uint64_t limit) {
    k = std::min(k, n - k);
    long double c = 1.0L;
    for (std::uint64_t t = 1; t <= k; ++t) {
        c = c * static_cast<long double>(n - k + t) / static_cast<long double>(t);
        if (c > static_cast<long double>(limit) + 1.0L) return limit + 1;
    }
    return static_cast<std::uint64_t>(c + 0.5L);
}

}  // namespace

Optimum brute_force_optimum(const ProblemInstance& instance) {
    validate(instance);
    const std::size_t n = instance.source_size();
    const std::size_t k = instance.k;
    const std::size_t targets = instance.target_size();
    const auto subsets = bounded_binomial(n, k, kBruteForceLimit);
    if (subsets > kBruteForceLimit) {
        throw SizeError("C(" + std::to_string(n) + ", " + std::to_string(k) + ") exceeds the enumeration guard");
    }

    // Similarity matrix, source-major so one subset member reads a contiguous row.
    std::vector<double> sim(n * targets);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < targets; ++j) sim[i * targets + j] = 1.0 - instance.dissimilarity->peek(j, i);
    }

    std::vector<std::size_t> combo(k);
    std::iota(combo.begin(), combo.end(), std::size_t{0});
    Optimum best{combo, -1.0};
    std::vector<double> cover(targets);
    while (true) {
        std::fill(cover.begin(), cover.end(), 0.0);
        for (std::size_t i : combo) {
            const double* row = sim.data() + i * targets;
            for (std::size_t j = 0; j < targets; ++j) cover[j] = std::max(cover[j], row[j]);
        }
        double value = 0.0;
        for (std::size_t j = 0; j < targets; ++j) value += instance.weights[j] * cover[j];
        if (value > best.value) best = {combo, value};

        // Next combination in lexicographic order.
        std::size_t pos = k;
        while (pos > 0 && combo[pos - 1] == n - k + pos - 1) --pos;
        if (pos == 0) break;
        ++combo[pos - 1];
        for (std::size_t t = pos; t < k; ++t) combo[t] = combo[t - 1] + 1;
    }
    return best;
}

double accuracy(const ProblemInstance& instance, std::span<const std::size_t> chosen,
                std::span<const int> target_labels, std::span<const int> source_labels) {
    if (target_labels.size() != instance.target_size() || source_labels.size() != instance.source_size()) {
        throw LabelError("label vectors do not match the instance");
    }
    if (chosen.empty()) return 0.0;
    const auto& d = *instance.dissimilarity;
    double hit = 0.0;
    for (std::size_t j = 0; j < instance.target_size(); ++j) {
        std::size_t nearest = chosen.front();
        double nearest_d = d.peek(j, nearest);
        for (std::size_t i : chosen.subspan(1)) {
            const double dist = d.peek(j, i);
            if (dist < nearest_d || (dist == nearest_d && i < nearest)) {
                nearest_d = dist;
                nearest = i;
            }
        }
        if (source_labels[nearest] == target_labels[j]) hit += instance.weights[j];
    }
    return hit;
}

double accuracy(const ProblemInstance& instance, std::span<const std::size_t> chosen) {
    if (!instance.source || !instance.target || !instance.source->labels || !instance.target->labels) {
        throw LabelError("accuracy needs labels on both source and target");
    }
    return accuracy(instance, chosen, *instance.target->labels, *instance.source->labels);
}

std::string_view to_string(AccountingMode mode) noexcept {
    return mode == AccountingMode::cached ? "cached" : "strict";
}

AccountingMode parse_accounting_mode(std::string_view name) {
    if (name == "cached") return AccountingMode::cached;
    if (name == "strict") return AccountingMode::strict;
    throw ParameterError("unknown accounting mode '" + std::string(name) + "'");
}

}  // namespace protoselect
