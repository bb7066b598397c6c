#include "protoselect/acceptance.hpp"

#include "protoselect/bandit.hpp"
#include "protoselect/dataset.hpp"
#include "protoselect/error.hpp"
#include "protoselect/eval.hpp"
#include "protoselect/exact.hpp"
#include "protoselect/instance.hpp"
#include "protoselect/protobandit.hpp"
#include "protoselect/random.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>

namespace protoselect {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::size_t uniform_size(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

TargetWeights random_weights(Rng& rng, std::size_t n) {
    std::exponential_distribution<double> expo(1.0);
    std::vector<double> q(n);
    for (double& x : q) x = expo(rng);
    const double total = std::accumulate(q.begin(), q.end(), 0.0);
    for (double& x : q) x /= total;
    return TargetWeights(std::move(q));
}

// Entries drawn independently from U[0,1].
ProblemInstance random_matrix_instance(Rng& rng, std::size_t sources, std::size_t targets, std::size_t k) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> m(sources * targets);
    for (double& x : m) x = unit(rng);
    return make_matrix_instance(targets, sources, std::move(m), random_weights(rng, targets), k);
}

// Clustered points in the plane, so that good prototype sets actually exist.
ProblemInstance random_points_instance(Rng& rng, std::size_t sources, std::size_t targets, std::size_t k) {
    MixtureSpec spec{3, sources, 2, 1.0, 8.0};
    const auto centers = rng();
    PointSet s = gaussian_mixture(spec, centers, rng());
    spec.points = targets;
    PointSet t = gaussian_mixture(spec, centers, rng());
    return make_euclidean_instance(std::move(s), std::move(t), k, false, random_weights(rng, targets));
}

// Budget bookkeeping for every aba run and invocation seen during the suite.
struct AbaLedger {
    std::size_t runs = 0;
    std::size_t budget_violations = 0;
    // Violations that persist when the bound is scaled by ceil(x)/x, x = (|S|/k) ln(1/epsilon),
    // i.e. when the integer subset size is used in place of x.
    std::size_t unexplained_violations = 0;
    double worst_budget_ratio = 0.0;  // bai_queries_strict / bound
    std::size_t invocations = 0;
    std::size_t cap_violations = 0;
    double worst_cap_ratio = 0.0;  // pulls / cap

    void add_invocation(std::size_t arms, double tolerance, double error_prob, std::uint64_t pulls) {
        ++invocations;
        const auto cap = aba_pull_cap(arms, tolerance, error_prob);
        if (pulls > cap) ++cap_violations;
        if (cap > 0) worst_cap_ratio = std::max(worst_cap_ratio, static_cast<double>(pulls) / static_cast<double>(cap));
    }

    void add_run(const ProblemInstance& instance, const ProtoBanditConfig& config, const ProtoBanditRun& run) {
        if (config.strategy != BaiStrategy::aba) return;
        ++runs;
        const double bound =
            similarity_query_bound(instance.k, instance.source_size(), config.epsilon, config.nu, config.delta);
        const auto strict = static_cast<double>(run.bai_queries_strict);
        if (!(strict < bound)) {
            ++budget_violations;
            const double x = static_cast<double>(instance.source_size()) / static_cast<double>(instance.k) *
                             std::log(1.0 / config.epsilon);
            const auto whole = subset_size(instance.source_size(), instance.k, config.epsilon, instance.source_size());
            if (!(strict < bound * static_cast<double>(whole) / x)) ++unexplained_violations;
        }
        worst_budget_ratio = std::max(worst_budget_ratio, strict / bound);
        const double error_prob = config.delta / static_cast<double>(instance.k);
        for (const auto& it : run.iterations) add_invocation(it.arms, config.arm_tolerance(), error_prob, it.pulls);
    }
};

ProtoBanditRun tracked_run(AbaLedger& ledger, const ProblemInstance& instance, const ProtoBanditConfig& config) {
    auto run = protobandit(instance, config);
    ledger.add_run(instance, config, run);
    return run;
}

std::string fixed(double x, int digits = 4) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(digits);
    out << x;
    return out.str();
}

struct Outcome {
    bool passed = false;
    std::string detail;
};

Outcome build_matches_spot(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 1));
    std::size_t mismatches = 0;
    for (int t = 0; t < 200; ++t) {
        const std::size_t s = uniform_size(rng, 5, 30);
        const std::size_t n = uniform_size(rng, 5, 50);
        const std::size_t k = uniform_size(rng, 1, std::min<std::size_t>(8, s));
        const std::size_t r = std::min(uniform_size(rng, 1, 3), k);
        const auto inst = t % 2 ? random_points_instance(rng, s, n, k) : random_matrix_instance(rng, s, n, k);
        const auto run_seed = rng();
        if (build(inst, r, run_seed).chosen != spot_greedy(inst, r, run_seed).chosen) ++mismatches;
    }
    return {mismatches == 0, std::to_string(200 - mismatches) + "/200 instances give identical ordered lists"};
}

Outcome approximation_guarantee(std::uint64_t seed, AbaLedger& ledger) {
    Rng rng(derive_seed(seed, 2));
    const ProtoBanditConfig base{0.2, 0.05, 0.04, BaiStrategy::aba, 0, AccountingMode::strict};
    const double factor = 1.0 - 1.0 / std::numbers::e - base.epsilon;
    constexpr int kRuns = 300;

    std::size_t failing_instances = 0, pointwise = 0, total_runs = 0;
    double worst_slack = std::numeric_limits<double>::infinity();
    double sum_alg = 0.0, sum_bound = 0.0;
    for (int t = 0; t < 30; ++t) {
        const std::size_t s = uniform_size(rng, 6, 12);
        const std::size_t n = uniform_size(rng, 5, 15);
        const std::size_t k = uniform_size(rng, 2, 3);
        const auto inst = random_points_instance(rng, s, n, k);
        const double bound = factor * brute_force_optimum(inst).value - base.nu;
        double sum = 0.0;
        for (int run = 0; run < kRuns; ++run) {
            auto config = base;
            config.rng_seed = rng();
            const double f = tracked_run(ledger, inst, config).record.final_objective;
            sum += f;
            if (f < bound) ++pointwise;
            ++total_runs;
        }
        const double mean = sum / kRuns;
        sum_alg += sum;
        sum_bound += bound * kRuns;
        worst_slack = std::min(worst_slack, mean - bound);
        if (mean < bound) ++failing_instances;
    }
    const double pooled_alg = sum_alg / static_cast<double>(total_runs);
    const double pooled_bound = sum_bound / static_cast<double>(total_runs);
    return {failing_instances == 0 && pooled_alg >= pooled_bound,
            "pooled mean f " + fixed(pooled_alg) + " vs bound " + fixed(pooled_bound) + "; instances below bound " +
                std::to_string(failing_instances) + "/30; smallest per-instance slack " + fixed(worst_slack) +
                "; pointwise shortfalls " + std::to_string(pointwise) + "/" + std::to_string(total_runs) +
                " (informational)"};
}

Outcome target_size_independence(std::uint64_t seed, AbaLedger& ledger) {
    const std::uint64_t centers = derive_seed(seed, 40);
    MixtureSpec spec{10, 2000, 8, 1.0, 10.0};
    const PointSet source = gaussian_mixture(spec, centers, derive_seed(seed, 41));
    ProtoBanditConfig config{0.2, 0.05, 0.04, BaiStrategy::aba, derive_seed(seed, 42), AccountingMode::cached};

    std::vector<std::vector<std::uint64_t>> pulls;
    for (std::size_t targets : {std::size_t{1000}, std::size_t{100000}}) {
        spec.points = targets;
        auto inst = make_euclidean_instance(source, gaussian_mixture(spec, centers, derive_seed(seed, 43)), 20);
        const auto run = tracked_run(ledger, inst, config);
        pulls.emplace_back();
        for (const auto& it : run.iterations) pulls.back().push_back(it.pulls);
    }
    const auto total = std::accumulate(pulls[0].begin(), pulls[0].end(), std::uint64_t{0});
    std::size_t differing = 0;
    for (std::size_t i = 0; i < pulls[0].size(); ++i) differing += pulls[0][i] != pulls[1][i];
    return {pulls[0] == pulls[1], std::to_string(differing) + "/20 iterations differ; " + std::to_string(total) +
                                      " pulls per run at |T|=1000"};
}

Outcome query_reduction(std::uint64_t seed, AbaLedger& ledger) {
    const std::uint64_t centers = derive_seed(seed, 50);
    MixtureSpec spec{10, 1000, 8, 1.0, 10.0};
    PointSet source = gaussian_mixture(spec, centers, derive_seed(seed, 51));
    spec.points = 20000;
    PointSet target = gaussian_mixture(spec, centers, derive_seed(seed, 52));
    const auto inst = make_euclidean_instance(std::move(source), std::move(target), 50);

    // SPOTgreedy only uses its seed for the zero-gain fill, so one run represents all seeds.
    inst.dissimilarity->reset_queries();
    const auto greedy = spot_greedy(inst, 1, derive_seed(seed, 53));
    const auto greedy_queries = static_cast<double>(inst.dissimilarity->queries());
    const double greedy_objective = objective(inst, greedy.chosen);

    double queries = 0.0, value = 0.0;
    constexpr int kRuns = 10;
    for (int run = 0; run < kRuns; ++run) {
        ProtoBanditConfig config{0.2, 0.05, 0.04, BaiStrategy::aba, derive_seed(seed, 60 + run),
                                 AccountingMode::cached};
        const auto result = tracked_run(ledger, inst, config);
        queries += static_cast<double>(result.record.total_queries);
        value += result.record.final_objective;
    }
    queries /= kRuns;
    value /= kRuns;
    const bool ok = queries <= greedy_queries / 10.0 && value >= 0.95 * greedy_objective;
    return {ok, "queries " + fixed(queries, 0) + " vs spot_greedy " + fixed(greedy_queries, 0) + " (ratio " +
                    fixed(greedy_queries / queries, 1) + "x); objective " + fixed(value) + " vs " +
                    fixed(greedy_objective) + " (" + fixed(100.0 * value / greedy_objective, 2) + "%)"};
}

Outcome bai_correctness(std::uint64_t seed, AbaLedger& ledger) {
    constexpr int kTrials = 500;
    constexpr std::size_t kArms = 10;
    const double tolerance = 0.1, error_prob = 0.05;
    const double limit = error_prob + 3.0 * std::sqrt(error_prob * (1.0 - error_prob) / kTrials);

    bool ok = true;
    std::string detail;
    for (auto strategy : {BaiStrategy::aba, BaiStrategy::naive, BaiStrategy::kl_lucb}) {
        Rng rng(derive_seed(seed, 70 + static_cast<std::uint64_t>(strategy)));
        int failures = 0;
        for (int t = 0; t < kTrials; ++t) {
            // Best arm 2*tolerance above every other arm, at a random position.
            std::vector<double> means(kArms, 0.5 - tolerance);
            const std::size_t best = uniform_size(rng, 0, kArms - 1);
            means[best] = 0.5 + tolerance;
            std::uint64_t pulls = 0;
            BaiProblem problem;
            problem.arms.resize(kArms);
            std::iota(problem.arms.begin(), problem.arms.end(), std::size_t{0});
            problem.tolerance = tolerance;
            problem.error_prob = error_prob;
            problem.reward = [&](std::size_t arm, Rng& r) {
                ++pulls;
                return std::bernoulli_distribution(means[arm])(r) ? 1.0 : 0.0;
            };
            const auto result = run_bai(strategy, problem, rng);
            if (means[result.arm] < means[best] - tolerance) ++failures;
            if (strategy == BaiStrategy::aba) ledger.add_invocation(kArms, tolerance, error_prob, pulls);
        }
        const double rate = static_cast<double>(failures) / kTrials;
        ok = ok && rate <= limit;
        detail += std::string(detail.empty() ? "" : ", ") + std::string(to_string(strategy)) + " " +
                  std::to_string(failures) + "/" + std::to_string(kTrials);
    }
    return {ok, "failures " + detail + " (limit rate " + fixed(limit) + ")"};
}

Outcome property_suites(std::uint64_t seed) {
    Rng rng(derive_seed(seed, 80));
    std::vector<std::string> failed;

    // Pull is an unbiased estimate of the exact gain.
    {
        auto inst = random_points_instance(rng, 30, 20, 8);
        auto state = build(inst, 1, rng());
        state.chosen.resize(3);
        state = recompute_state(inst, state.chosen);
        const TargetSampler sampler(inst.weights);
        Rng pull_rng(rng());
        bool ok = true;
        for (std::size_t i = 0; i < inst.source_size(); ++i) {
            if (state.contains(i)) continue;
            const double exact = gain(inst, state, i);
            constexpr int kPulls = 100000;
            double sum = 0.0, sq = 0.0;
            for (int p = 0; p < kPulls; ++p) {
                const double x = pull(inst, state, sampler, i, pull_rng);
                sum += x;
                sq += x * x;
            }
            const double mean = sum / kPulls;
            const double se = std::sqrt(std::max(sq / kPulls - mean * mean, 0.0) / kPulls);
            if (std::abs(mean - exact) > 3.0 * se + 1e-12) ok = false;
            if (i > 6) break;
        }
        if (!ok) failed.push_back("pull unbiasedness");
    }

    // Submodularity and monotonicity of the objective on random chains A within B.
    {
        bool ok = true;
        for (int t = 0; t < 1000 && ok; ++t) {
            const std::size_t s = uniform_size(rng, 4, 20);
            const auto inst = t % 2 ? random_points_instance(rng, s, uniform_size(rng, 3, 20), 1)
                                    : random_matrix_instance(rng, s, uniform_size(rng, 3, 20), 1);
            std::vector<std::size_t> perm(s);
            std::iota(perm.begin(), perm.end(), std::size_t{0});
            std::shuffle(perm.begin(), perm.end(), rng);
            const std::size_t b_size = uniform_size(rng, 0, s - 1);
            const std::size_t a_size = uniform_size(rng, 0, b_size);
            const std::size_t x = perm[b_size];
            std::vector<std::size_t> a(perm.begin(), perm.begin() + a_size);
            std::vector<std::size_t> b(perm.begin(), perm.begin() + b_size);
            const double fa = objective(inst, a), fb = objective(inst, b);
            a.push_back(x);
            b.push_back(x);
            const double ga = objective(inst, a) - fa, gb = objective(inst, b) - fb;
            if (ga < gb - 1e-9 || fb < fa - 1e-9 || ga < -1e-9) ok = false;
        }
        if (!ok) failed.push_back("submodularity/monotonicity");
    }

    // State coherence, objective identity, build query count and SWAP monotonicity.
    {
        bool coherent = true, identity = true, counted = true, monotone = true;
        auto same = [](const PrototypeState& x, const PrototypeState& y) {
            return x.nearest_dist == y.nearest_dist && x.second_dist == y.second_dist;
        };
        auto identity_holds = [](const ProblemInstance& inst, const PrototypeState& st) {
            return std::abs(objective(inst, st.chosen) - (1.0 - weighted_nearest_distance(inst.weights, st))) <=
                   1e-12;
        };
        for (int t = 0; t < 60; ++t) {
            const std::size_t s = uniform_size(rng, 5, 40);
            const std::size_t n = uniform_size(rng, 5, 40);
            const std::size_t k = uniform_size(rng, 1, std::min<std::size_t>(8, s));
            const std::size_t r = std::min(uniform_size(rng, 1, 3), k);
            auto inst = t % 2 ? random_points_instance(rng, s, n, k) : random_matrix_instance(rng, s, n, k);

            inst.dissimilarity->reset_queries();
            auto state = build(inst, r, rng());
            std::uint64_t expected = 0;
            for (std::size_t chosen = 0; chosen < k; chosen += r) expected += (s - chosen) * n;
            counted = counted && inst.dissimilarity->queries() == expected;
            coherent = coherent && same(state, recompute_state(inst, state.chosen));
            identity = identity && identity_holds(inst, state);

            const std::size_t l = std::min(uniform_size(rng, 1, 3), k);
            for (int pass = 0; pass < 50; ++pass) {
                const double before = weighted_nearest_distance(inst.weights, state);
                auto result = swap(inst, state, l);
                const double after = weighted_nearest_distance(inst.weights, result.state);
                monotone = monotone && after <= before + 1e-12;
                coherent = coherent && same(result.state, recompute_state(inst, result.state.chosen));
                identity = identity && identity_holds(inst, result.state);
                state = std::move(result.state);
                if (result.converged) break;
            }
        }
        if (!coherent) failed.push_back("D/E coherence");
        if (!identity) failed.push_back("objective identity");
        if (!counted) failed.push_back("build query count");
        if (!monotone) failed.push_back("swap monotonicity");
    }

    if (failed.empty()) {
        return {true, "pull unbiasedness, submodularity/monotonicity, D/E coherence, objective identity, "
                      "build query count and swap monotonicity all hold"};
    }
    std::string detail = "failed:";
    for (const auto& f : failed) detail += " " + f + ";";
    return {false, detail};
}

Outcome strict_budget(std::uint64_t seed, AbaLedger& ledger) {
    Rng rng(derive_seed(seed, 30));
    const std::uint64_t centers = rng();
    MixtureSpec spec{10, 500, 8, 1.0, 10.0};
    const PointSet target = gaussian_mixture(spec, centers, rng());
    for (std::size_t sources : {std::size_t{300}, std::size_t{1000}}) {
        spec.points = sources;
        const PointSet source = gaussian_mixture(spec, centers, rng());
        for (std::size_t k : {std::size_t{10}, std::size_t{50}}) {
            const auto inst = make_euclidean_instance(source, target, k);
            for (double eps : {0.2, 0.4}) {
                for (double nu : {0.05, 0.09}) {
                    if (!(nu < 1.0 - 1.0 / std::numbers::e - eps)) continue;
                    tracked_run(ledger, inst,
                                ProtoBanditConfig{eps, nu, 0.04, BaiStrategy::aba, rng(), AccountingMode::strict});
                }
            }
        }
    }
    return {ledger.budget_violations == 0 && ledger.runs > 0,
            std::to_string(ledger.runs - ledger.budget_violations) + "/" + std::to_string(ledger.runs) +
                " aba runs below the budget; largest strict count / budget = " + fixed(ledger.worst_budget_ratio) +
                "; violations not explained by rounding the subset size up: " +
                std::to_string(ledger.unexplained_violations)};
}

Outcome aba_cap(std::uint64_t seed, AbaLedger& ledger) {
    Rng rng(derive_seed(seed, 60));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        const std::size_t n = uniform_size(rng, 1, 200);
        std::vector<double> means(n);
        for (double& m : means) m = unit(rng);
        std::uint64_t pulls = 0;
        BaiProblem problem;
        problem.arms.resize(n);
        std::iota(problem.arms.begin(), problem.arms.end(), std::size_t{0});
        problem.tolerance = 0.1 + 0.3 * unit(rng);
        problem.error_prob = 0.001 + 0.2 * unit(rng);
        problem.reward = [&](std::size_t arm, Rng& r) {
            ++pulls;
            return std::bernoulli_distribution(means[arm])(r) ? 1.0 : 0.0;
        };
        const auto result = aba(problem, rng);
        if (result.pulls != pulls) ++ledger.cap_violations;  // reported count must be the real one
        ledger.add_invocation(n, problem.tolerance, problem.error_prob, pulls);
    }
    return {ledger.cap_violations == 0,
            std::to_string(ledger.invocations - ledger.cap_violations) + "/" + std::to_string(ledger.invocations) +
                " aba invocations within the cap; largest pulls / cap = " + fixed(ledger.worst_cap_ratio)};
}

struct CriterionSpec {
    int id;
    const char* title;
    double time_limit;  // seconds, 0 for none
};

constexpr CriterionSpec kCriteria[] = {
    {1, "build and spot_greedy select identical lists", 30},
    {2, "approximation guarantee against brute force", 300},
    {3, "strict query budget of every aba run", 0},
    {4, "pull counts independent of target size", 120},
    {5, "query reduction and objective versus spot_greedy", 600},
    {6, "aba pull cap", 0},
    {7, "best-arm identification failure rate", 180},
    {8, "property suites", 0},
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& options) {
    AbaLedger ledger;
    std::vector<CriterionResult> results;
    const std::uint64_t seed = options.seed;
    const std::function<Outcome()> bodies[] = {
        [&] { return build_matches_spot(seed); },       [&] { return approximation_guarantee(seed, ledger); },
        [&] { return strict_budget(seed, ledger); },     [&] { return target_size_independence(seed, ledger); },
        [&] { return query_reduction(seed, ledger); },   [&] { return aba_cap(seed, ledger); },
        [&] { return bai_correctness(seed, ledger); },   [&] { return property_suites(seed); },
    };
    // The budget and cap checks go last so that they also cover the other criteria's runs.
    for (int id : {1, 2, 4, 5, 7, 8, 3, 6}) {
        if (!options.only.empty() && !options.only.count(id)) continue;
        const auto& spec = kCriteria[id - 1];
        CriterionResult r{id, spec.title, false, "", 0.0};
        const auto start = Clock::now();
        try {
            const auto outcome = bodies[id - 1]();
            r.passed = outcome.passed;
            r.detail = outcome.detail;
        } catch (const std::exception& e) {
            r.detail = std::string("error: ") + e.what();
        }
        r.seconds = seconds_since(start);
        if (spec.time_limit > 0 && r.seconds >= spec.time_limit) {
            r.passed = false;
            r.detail += "; exceeded " + fixed(spec.time_limit, 0) + " s";
        }
        if (options.progress) *options.progress << format_result(r) << std::endl;
        results.push_back(std::move(r));
    }
    std::sort(results.begin(), results.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return results;
}

std::string format_result(const CriterionResult& result) {
    return std::string(result.passed ? "PASS" : "FAIL") + " criterion " + std::to_string(result.id) + " (" +
           result.title + "): " + result.detail + " [" + fixed(result.seconds, 1) + " s]";
}

}  // namespace protoselect
