#include "protoselect/protobandit.hpp"

#include "protoselect/error.hpp"
#include "protoselect/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numbers>
#include <string>

namespace protoselect {

namespace {
constexpr double kInvE = 1.0 / std::numbers::e;
}

void ProtoBanditConfig::validate() const {
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw ParameterError("epsilon must lie in (0,1)");
    if (!(nu > 0.0 && nu < 1.0 - kInvE - epsilon)) {
        throw ParameterError("nu must lie in (0, 1 - 1/e - epsilon)");
    }
    if (!(delta > 0.0 && delta < 0.05)) throw ParameterError("delta must lie in (0, 0.05)");
}

double ProtoBanditConfig::arm_tolerance() const { return nu / (1.0 - kInvE - epsilon); }

std::size_t subset_size(std::size_t source_size, std::size_t k, double epsilon, std::size_t available) {
    if (source_size == 0 || k == 0 || !(epsilon > 0.0 && epsilon < 1.0)) {
        throw ParameterError("subset size needs positive |S|, k and epsilon in (0,1)");
    }
    const double raw = std::ceil(static_cast<double>(source_size) / static_cast<double>(k) * std::log(1.0 / epsilon));
    const auto size = static_cast<std::size_t>(std::max(raw, 1.0));
    return std::clamp<std::size_t>(size, 1, std::max<std::size_t>(available, 1));
}

double similarity_query_bound(std::size_t k, std::size_t source_size, double epsilon, double nu, double delta) {
    const double nu0 = nu / (1.0 - epsilon - kInvE);
    return 9.0 * static_cast<double>(k) * static_cast<double>(source_size) / (nu0 * nu0) * std::log(1.0 / epsilon) *
           std::log(static_cast<double>(k) / delta);
}

ProtoBanditRun protobandit(const ProblemInstance& instance, const ProtoBanditConfig& config) {
    validate(instance);
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    const std::size_t sources = instance.source_size();
    const std::size_t targets = instance.target_size();
    const std::size_t k = instance.k;
    auto& oracle = *instance.dissimilarity;

    // Separate streams: subset draws never depend on how many reward samples were taken.
    Rng subset_rng(derive_seed(config.rng_seed, 1));
    Rng bai_rng(derive_seed(config.rng_seed, 2));
    const TargetSampler sampler(instance.weights);

    ProtoBanditRun run;
    run.state = PrototypeState::empty(targets);
    run.iterations.reserve(k);
    std::vector<char> taken(sources, 0);
    std::vector<std::size_t> remaining;
    std::vector<double> column(targets);
    std::vector<std::uint64_t> queries_after;

    const double tolerance = config.arm_tolerance();
    const double error_prob = config.delta / static_cast<double>(k);
    std::uint64_t strict_total = 0;

    for (std::size_t iteration = 0; iteration < k; ++iteration) {
        remaining.clear();
        for (std::size_t i = 0; i < sources; ++i) {
            if (!taken[i]) remaining.push_back(i);
        }
        IterationStats it;
        it.sampled = subset_size(sources, k, config.epsilon, remaining.size());

        // Uniform positions into S \ M with replacement, deduplicated.
        std::uniform_int_distribution<std::size_t> pick(0, remaining.size() - 1);
        std::vector<std::size_t> positions(it.sampled);
        for (auto& p : positions) p = pick(subset_rng);
        std::sort(positions.begin(), positions.end());
        positions.erase(std::unique(positions.begin(), positions.end()), positions.end());

        BaiProblem problem;
        problem.arms.reserve(positions.size());
        for (std::size_t p : positions) problem.arms.push_back(remaining[p]);
        problem.tolerance = tolerance;
        problem.error_prob = error_prob;
        problem.reward = [&](std::size_t arm, Rng& rng) { return pull(instance, run.state, sampler, arm, rng); };
        it.arms = problem.arms.size();

        const auto before = oracle.queries();
        const BaiResult chosen = run_bai(config.strategy, problem, bai_rng);
        const auto spent = oracle.queries() - before;
        if (spent != chosen.pulls && !oracle.memoized()) {
            throw Error("pull accounting mismatch: " + std::to_string(spent) + " queries for " +
                        std::to_string(chosen.pulls) + " pulls");
        }
        it.pulls = chosen.pulls;
        it.selected = chosen.arm;
        run.bai_queries_cached += spent;
        strict_total += static_cast<std::uint64_t>(iteration) * chosen.pulls;

        const auto before_update = oracle.queries();
        oracle.column(chosen.arm, column);
        run.maintenance_queries += oracle.queries() - before_update;
        run.state.add(chosen.arm, column);
        taken[chosen.arm] = 1;
        run.iterations.push_back(it);

        queries_after.push_back(config.accounting == AccountingMode::cached
                                    ? run.bai_queries_cached + run.maintenance_queries
                                    : strict_total);
    }
    run.bai_queries_strict = strict_total;

    auto& rec = run.record;
    rec.algorithm = "protobandit";
    rec.params.k = k;
    rec.params.r = 1;
    rec.params.epsilon = config.epsilon;
    rec.params.nu = config.nu;
    rec.params.delta = config.delta;
    rec.params.strategy = std::string(to_string(config.strategy));
    rec.params.seed = config.rng_seed;
    rec.params.accounting = config.accounting;
    if (config.accounting == AccountingMode::cached) {
        rec.bai_queries = run.bai_queries_cached;
        rec.maintenance_queries = run.maintenance_queries;
    } else {
        rec.bai_queries = run.bai_queries_strict;
        rec.maintenance_queries = 0;
    }
    rec.total_queries = rec.bai_queries + rec.maintenance_queries;
    rec.chosen = run.state.chosen;
    rec.objective_trace = objective_trace(instance, rec.chosen);
    rec.queries_trace = std::move(queries_after);
    rec.final_objective = rec.objective_trace.back();
    rec.wall_time_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
    return run;
}

}  // namespace protoselect
