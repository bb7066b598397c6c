#include "protoselect/bandit.hpp"

#include "protoselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace protoselect {

TargetSampler::TargetSampler(const TargetWeights& weights) : cdf_(weights.size()) {
    if (weights.size() == 0) throw ParameterError("cannot sample from empty weights");
    std::partial_sum(weights.values().begin(), weights.values().end(), cdf_.begin());
}

std::size_t TargetSampler::sample(Rng& rng) const {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng) * cdf_.back();
    // First index whose cumulative weight exceeds u; zero-weight targets are never drawn.
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    const auto j = static_cast<std::size_t>(it - cdf_.begin());
    return std::min(j, cdf_.size() - 1);
}

double pull(const ProblemInstance& instance, const PrototypeState& state, const TargetSampler& sampler,
            std::size_t i, Rng& rng) {
    const std::size_t j = sampler.sample(rng);
    return std::max(state.nearest_dist[j] - instance.dissimilarity->distance(j, i), 0.0);
}

std::string_view to_string(BaiStrategy s) noexcept {
    switch (s) {
        case BaiStrategy::aba: return "aba";
        case BaiStrategy::naive: return "naive";
        case BaiStrategy::kl_lucb: return "kl_lucb";
        case BaiStrategy::kl_lucb_early: return "kl_lucb_early";
    }
    return "unknown";
}

BaiStrategy parse_bai_strategy(std::string_view name) {
    for (auto s : {BaiStrategy::aba, BaiStrategy::naive, BaiStrategy::kl_lucb, BaiStrategy::kl_lucb_early}) {
        if (name == to_string(s)) return s;
    }
    throw ParameterError("unknown BAI strategy '" + std::string(name) + "'");
}

std::uint64_t naive_pulls_per_arm(std::size_t arms, double tolerance, double error_prob) {
    return static_cast<std::uint64_t>(
        std::ceil(2.0 / (tolerance * tolerance) * std::log(2.0 * static_cast<double>(arms) / error_prob)));
}

std::uint64_t aba_pull_cap(std::size_t arms, double tolerance, double error_prob) {
    return static_cast<std::uint64_t>(
        std::ceil(18.0 * static_cast<double>(arms) / (tolerance * tolerance) * std::log(1.0 / error_prob)));
}

namespace {

void check_problem(const BaiProblem& problem) {
    if (problem.arms.empty()) throw ParameterError("BAI problem needs at least one arm");
    if (!(problem.tolerance > 0.0 && problem.tolerance < 1.0)) {
        throw ParameterError("BAI tolerance must lie in (0,1)");
    }
    if (!(problem.error_prob > 0.0 && problem.error_prob < 1.0)) {
        throw ParameterError("BAI error probability must lie in (0,1)");
    }
    if (!problem.reward) throw ParameterError("BAI problem has no reward oracle");
    auto sorted = problem.arms;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ParameterError("BAI arms must be distinct");
    }
}

// Pulls arm at `pos` and records the reward; rewards outside [0,1] are a contract breach.
void sample_arm(const BaiProblem& problem, std::size_t pos, std::vector<ArmStats>& stats, Rng& rng) {
    const double r = problem.reward(problem.arms[pos], rng);
    if (!(r >= 0.0 && r <= 1.0)) throw Error("reward " + std::to_string(r) + " outside [0,1]");
    stats[pos].record(r);
}

// Highest empirical mean among `positions` with at least one sample; earlier wins ties.
std::size_t best_by_mean(std::span<const std::size_t> positions, const std::vector<ArmStats>& stats) {
    std::size_t best = positions.front();
    double best_mean = -1.0;
    for (std::size_t p : positions) {
        if (stats[p].pulls == 0) continue;
        const double m = stats[p].mean();
        if (m > best_mean) {
            best_mean = m;
            best = p;
        }
    }
    return best;
}

std::uint64_t total_pulls(const std::vector<ArmStats>& stats) {
    std::uint64_t total = 0;
    for (const auto& s : stats) total += s.pulls;
    return total;
}

}  // namespace

BaiResult naive_elimination(const BaiProblem& problem, Rng& rng) {
    check_problem(problem);
    const std::size_t n = problem.arms.size();
    const auto m = naive_pulls_per_arm(n, problem.tolerance, problem.error_prob);
    std::vector<ArmStats> stats(n);
    for (std::size_t pos = 0; pos < n; ++pos) {
        for (std::uint64_t t = 0; t < m; ++t) sample_arm(problem, pos, stats, rng);
    }
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return {problem.arms[best_by_mean(all, stats)], total_pulls(stats)};
}

BaiResult aba(const BaiProblem& problem, Rng& rng) {
    check_problem(problem);
    if (problem.error_prob >= 0.5) throw ParameterError("ABA needs error probability below 0.5");
    const std::size_t n = problem.arms.size();
    if (n == 1) return {problem.arms.front(), 0};

    const double nu = problem.tolerance;
    const double delta = problem.error_prob;
    const std::uint64_t cap = aba_pull_cap(n, nu, delta);
    const double keep = std::pow(static_cast<double>(n), 0.75) / 2.0;
    const auto target = std::max<std::size_t>(2, static_cast<std::size_t>(std::ceil(keep)));
    const std::size_t rounds_total =
        n > target ? static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(n) / keep))) : 0;

    std::vector<ArmStats> stats(n);
    std::uint64_t used = 0;
    std::vector<std::size_t> survivors(n);
    std::iota(survivors.begin(), survivors.end(), std::size_t{0});

    // Round-robin within a phase, so that hitting the cap leaves every survivor
    // with (almost) the same number of samples.
    auto sample_round_robin = [&](std::uint64_t per_arm, std::vector<ArmStats>& into) {
        for (std::uint64_t t = 0; t < per_arm; ++t) {
            for (std::size_t p : survivors) {
                if (used == cap) return false;
                sample_arm(problem, p, into, rng);
                ++used;
            }
        }
        return true;
    };

    // Phase 1: aggressive elimination.
    if (rounds_total > 0) {
        const auto per_round = static_cast<std::uint64_t>(
            std::ceil(8.0 / (nu * nu) * std::log(4.0 * static_cast<double>(rounds_total) / delta)));
        for (std::size_t round = 0; round < rounds_total && survivors.size() > target; ++round) {
            if (!sample_round_robin(per_round, stats)) {
                return {problem.arms[best_by_mean(survivors, stats)], used};
            }
            std::stable_sort(survivors.begin(), survivors.end(), [&](std::size_t a, std::size_t b) {
                return stats[a].mean() > stats[b].mean();
            });
            survivors.resize((survivors.size() + 1) / 2);
            std::sort(survivors.begin(), survivors.end());
        }
    }

    // Phase 2: naive elimination on the survivors with half the tolerance and error budget.
    std::vector<ArmStats> fresh(n);
    const auto m = naive_pulls_per_arm(survivors.size(), nu / 2.0, delta / 2.0);
    if (!sample_round_robin(m, fresh)) {
        // Cap reached mid-phase: judge on everything seen so far.
        for (std::size_t p : survivors) {
            stats[p].pulls += fresh[p].pulls;
            stats[p].reward_sum += fresh[p].reward_sum;
        }
        return {problem.arms[best_by_mean(survivors, stats)], used};
    }
    return {problem.arms[best_by_mean(survivors, fresh)], used};
}

double bernoulli_kl(double p, double q) {
    constexpr double eps = 1e-15;
    p = std::clamp(p, 0.0, 1.0);
    q = std::clamp(q, eps, 1.0 - eps);
    double kl = 0.0;
    if (p > 0.0) kl += p * std::log(p / q);
    if (p < 1.0) kl += (1.0 - p) * std::log((1.0 - p) / (1.0 - q));
    return kl;
}

namespace {

// sup { q in [mean, 1] : pulls * kl(mean, q) <= level }
double kl_upper(double mean, std::uint64_t pulls, double level) {
    double lo = mean, hi = 1.0;
    const double budget = level / static_cast<double>(pulls);
    if (bernoulli_kl(mean, hi) <= budget) return 1.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bernoulli_kl(mean, mid) <= budget ? lo : hi) = mid;
    }
    return lo;
}

// inf { q in [0, mean] : pulls * kl(mean, q) <= level }
double kl_lower(double mean, std::uint64_t pulls, double level) {
    double lo = 0.0, hi = mean;
    const double budget = level / static_cast<double>(pulls);
    if (bernoulli_kl(mean, lo) <= budget) return 0.0;
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (bernoulli_kl(mean, mid) <= budget ? hi : lo) = mid;
    }
    return hi;
}

constexpr double kLucbAlpha = 1.1;
constexpr double kLucbK1 = 405.5;

}  // namespace

BaiResult kl_lucb(const BaiProblem& problem, Rng& rng, bool early_stop, std::optional<std::uint64_t> max_pulls) {
    check_problem(problem);
    const std::size_t n = problem.arms.size();
    if (n == 1) return {problem.arms.front(), 0};

    const double nu = problem.tolerance;
    const auto min_samples = static_cast<std::uint64_t>(std::ceil(1.0 / nu));
    std::vector<ArmStats> stats(n);
    std::uint64_t used = 0;
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});

    auto budget_left = [&] { return !max_pulls || used < *max_pulls; };
    auto take = [&](std::size_t pos) {
        sample_arm(problem, pos, stats, rng);
        ++used;
    };

    for (std::size_t pos = 0; pos < n; ++pos) {
        if (!budget_left()) return {problem.arms[best_by_mean(all, stats)], used};
        take(pos);
    }

    for (std::uint64_t t = 1;; ++t) {
        const double level = std::log(kLucbK1 * static_cast<double>(n) *
                                      std::pow(static_cast<double>(t), kLucbAlpha) / problem.error_prob);
        const std::size_t leader = best_by_mean(all, stats);
        std::size_t challenger = kNoPrototype;
        double challenger_ucb = -1.0;
        for (std::size_t p = 0; p < n; ++p) {
            if (p == leader) continue;
            const double u = kl_upper(stats[p].mean(), stats[p].pulls, level);
            if (u > challenger_ucb) {
                challenger_ucb = u;
                challenger = p;
            }
        }
        const double leader_lcb = kl_lower(stats[leader].mean(), stats[leader].pulls, level);
        if (leader_lcb >= challenger_ucb - nu) return {problem.arms[leader], used};
        if (early_stop && stats[leader].mean() - stats[challenger].mean() >= nu &&
            stats[leader].pulls >= min_samples && stats[challenger].pulls >= min_samples) {
            return {problem.arms[leader], used};
        }
        for (std::size_t pos : {leader, challenger}) {
            if (!budget_left()) return {problem.arms[best_by_mean(all, stats)], used};
            take(pos);
        }
    }
}

BaiResult run_bai(BaiStrategy strategy, const BaiProblem& problem, Rng& rng) {
    switch (strategy) {
        case BaiStrategy::aba: return aba(problem, rng);
        case BaiStrategy::naive: return naive_elimination(problem, rng);
        case BaiStrategy::kl_lucb: return kl_lucb(problem, rng, false);
        case BaiStrategy::kl_lucb_early: return kl_lucb(problem, rng, true);
    }
    throw ParameterError("unknown BAI strategy");
}

}  // namespace protoselect
