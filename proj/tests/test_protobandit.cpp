#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "oracles.hpp"

#include "protoselect/error.hpp"
#include "protoselect/protobandit.hpp"

#include <cmath>
#include <set>

using namespace protoselect;

namespace {

ProblemInstance mixture_instance(std::size_t sources, std::size_t targets, std::size_t k, std::uint64_t seed) {
    MixtureSpec spec{5, sources, 4, 1.0, 10.0};
    PointSet s = gaussian_mixture(spec, seed, seed + 1);
    spec.points = targets;
    PointSet t = gaussian_mixture(spec, seed, seed + 2);
    return make_euclidean_instance(std::move(s), std::move(t), k);
}

ProtoBanditConfig config(BaiStrategy s, std::uint64_t seed, AccountingMode mode = AccountingMode::cached) {
    return ProtoBanditConfig{0.2, 0.05, 0.04, s, seed, mode};
}

}  // namespace

TEST_CASE("subset size") {
    CHECK(subset_size(5000, 100, 0.2, 5000) == 81);
    CHECK(subset_size(10, 10, 0.2, 10) == 2);
    CHECK(subset_size(10, 10, 0.999999, 10) == 1);
    CHECK(subset_size(5000, 1, 0.2, 3) == 3);
    CHECK_THROWS_AS(subset_size(10, 0, 0.2, 10), ParameterError);
}

TEST_CASE("config ranges") {
    CHECK_NOTHROW(config(BaiStrategy::aba, 0).validate());
    CHECK_THROWS_AS((ProtoBanditConfig{0.0, 0.05, 0.04}.validate()), ParameterError);
    CHECK_THROWS_AS((ProtoBanditConfig{0.2, 0.5, 0.04}.validate()), ParameterError);
    CHECK_THROWS_AS((ProtoBanditConfig{0.2, 0.05, 0.05}.validate()), ParameterError);
    CHECK_THROWS_AS((ProtoBanditConfig{0.2, 0.0, 0.04}.validate()), ParameterError);
    const double nu0 = config(BaiStrategy::aba, 0).arm_tolerance();
    CHECK(nu0 == doctest::Approx(0.05 / (1 - 1 / std::exp(1.0) - 0.2)));
    CHECK(nu0 < 1.0);
}

TEST_CASE("query bound formula") {
    const double nu0 = 0.05 / (1 - 0.2 - 1 / std::exp(1.0));
    CHECK(similarity_query_bound(50, 1000, 0.2, 0.05, 0.04) ==
          doctest::Approx(9 * 50 * 1000 / (nu0 * nu0) * std::log(5.0) * std::log(1250.0)));
}

TEST_CASE("k = |S| selects every source") {
    auto inst = mixture_instance(12, 30, 12, 3);
    for (auto s : {BaiStrategy::aba, BaiStrategy::naive, BaiStrategy::kl_lucb_early}) {
        const auto run = protobandit(inst, config(s, 5));
        std::set<std::size_t> chosen(run.state.chosen.begin(), run.state.chosen.end());
        CHECK(chosen.size() == 12);
    }
}

TEST_CASE("record invariants and accounting") {
    auto inst = mixture_instance(80, 120, 6, 7);
    for (auto mode : {AccountingMode::cached, AccountingMode::strict}) {
        inst.dissimilarity->reset_queries();
        const auto run = protobandit(inst, config(BaiStrategy::aba, 11, mode));
        const auto& r = run.record;
        CHECK(r.chosen.size() == 6);
        CHECK(std::set<std::size_t>(r.chosen.begin(), r.chosen.end()).size() == 6);
        CHECK(r.objective_trace.size() == 6);
        CHECK(r.queries_trace.size() == 6);
        CHECK(r.total_queries == r.bai_queries + r.maintenance_queries);
        CHECK(r.final_objective == doctest::Approx(oracle::f(inst, r.chosen)).epsilon(1e-12));
        CHECK(r.final_objective == doctest::Approx(1.0 - weighted_nearest_distance(inst.weights, run.state)));
        CHECK(run.state.nearest_dist == oracle::nearest(inst, run.state.chosen));

        std::uint64_t pulls = 0, strict = 0;
        for (std::size_t i = 0; i < run.iterations.size(); ++i) {
            pulls += run.iterations[i].pulls;
            strict += i * run.iterations[i].pulls;
            CHECK(run.iterations[i].sampled == subset_size(80, 6, 0.2, 80 - i));
            CHECK(run.iterations[i].arms <= run.iterations[i].sampled);
        }
        CHECK(run.bai_queries_cached == pulls);
        CHECK(run.bai_queries_strict == strict);
        CHECK(run.maintenance_queries == 6 * 120);
        CHECK(inst.dissimilarity->queries() == pulls + 6 * 120);
        if (mode == AccountingMode::strict) {
            CHECK(r.bai_queries == strict);
            CHECK(r.maintenance_queries == 0);
        } else {
            CHECK(r.bai_queries == pulls);
            CHECK(r.maintenance_queries == 6 * 120);
        }
    }
}

TEST_CASE("reproducible for a fixed seed") {
    auto inst = mixture_instance(60, 50, 5, 1);
    const auto a = protobandit(inst, config(BaiStrategy::kl_lucb, 3));
    const auto b = protobandit(inst, config(BaiStrategy::kl_lucb, 3));
    CHECK(a.record.chosen == b.record.chosen);
    CHECK(a.record.total_queries == b.record.total_queries);
    CHECK(a.record.objective_trace == b.record.objective_trace);
}

TEST_CASE("pull counts do not depend on the target size for budgeted strategies") {
    MixtureSpec spec{5, 200, 4, 1.0, 10.0};
    const PointSet s = gaussian_mixture(spec, 9, 10);
    for (auto strategy : {BaiStrategy::aba, BaiStrategy::naive}) {
        std::vector<std::vector<std::uint64_t>> pulls;
        for (std::size_t n : {std::size_t{50}, std::size_t{3000}}) {
            spec.points = n;
            auto inst = make_euclidean_instance(s, gaussian_mixture(spec, 9, 11), 8);
            const auto run = protobandit(inst, config(strategy, 21));
            pulls.emplace_back();
            for (const auto& it : run.iterations) pulls.back().push_back(it.pulls);
        }
        CHECK(pulls[0] == pulls[1]);
    }
}

TEST_CASE("objective trace increments are non-negative in expectation") {
    auto inst = mixture_instance(40, 40, 6, 17);
    std::vector<double> mean_inc(5, 0.0);
    const int runs = 100;
    for (int t = 0; t < runs; ++t) {
        const auto run = protobandit(inst, config(BaiStrategy::kl_lucb_early, 100 + t));
        for (std::size_t i = 1; i < 6; ++i) {
            mean_inc[i - 1] += (run.record.objective_trace[i] - run.record.objective_trace[i - 1]) / runs;
        }
    }
    for (double inc : mean_inc) CHECK(inc >= -1e-9);
}

TEST_CASE("strict count stays under the budget when subset rounding is negligible") {
    // |S|/k ln(1/eps) = 160.9, so the rounded subset size is within 0.1 percent.
    auto inst = mixture_instance(1000, 100, 10, 5);
    const auto run = protobandit(inst, config(BaiStrategy::aba, 1, AccountingMode::strict));
    CHECK(static_cast<double>(run.bai_queries_strict) < similarity_query_bound(10, 1000, 0.2, 0.05, 0.04));
    const double nu0 = config(BaiStrategy::aba, 1).arm_tolerance();
    for (const auto& it : run.iterations) CHECK(it.pulls <= aba_pull_cap(it.arms, nu0, 0.004));
}

TEST_CASE("invalid instance or config is rejected") {
    auto inst = mixture_instance(10, 10, 3, 1);
    CHECK_THROWS_AS(protobandit(inst, ProtoBanditConfig{0.9, 0.05, 0.04}), ParameterError);
    inst.k = 11;
    CHECK_THROWS_AS(protobandit(inst, config(BaiStrategy::aba, 0)), ParameterError);
}
