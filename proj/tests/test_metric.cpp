#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "protoselect/error.hpp"
#include "protoselect/metric.hpp"

#include <cmath>
#include <filesystem>
#include <thread>
#include <vector>

using namespace protoselect;

namespace {
std::shared_ptr<const PointSet> points(std::size_t n, std::size_t d, std::vector<double> v) {
    return std::make_shared<const PointSet>(n, d, std::move(v));
}
}  // namespace

TEST_CASE("euclidean distance is normalized and counted") {
    auto t = points(1, 2, {0, 0});
    auto s = points(2, 2, {3, 4, 0, 0});
    auto d = Dissimilarity::euclidean(t, s, 10.0);
    CHECK(d->distance(0, 0) == 0.5);
    CHECK(d->distance(0, 1) == 0.0);
    CHECK(d->queries() == 2);
    CHECK(d->similarity(0, 0) == 0.5);
    CHECK(d->queries() == 3);
}

TEST_CASE("precomputed matrix with and without memoization") {
    auto plain = Dissimilarity::precomputed(1, 1, {0.2});
    CHECK(plain->distance(0, 0) == 0.2);
    CHECK(plain->distance(0, 0) == 0.2);
    CHECK(plain->queries() == 2);

    auto memo = Dissimilarity::precomputed(1, 1, {0.2}, true);
    CHECK(memo->distance(0, 0) == 0.2);
    CHECK(memo->queries() == 1);
    CHECK(memo->distance(0, 0) == 0.2);
    CHECK(memo->queries() == 1);
    memo->clear_cache();
    CHECK(memo->distance(0, 0) == 0.2);
    CHECK(memo->queries() == 2);
}

TEST_CASE("similarity is one minus distance") {
    auto d = Dissimilarity::precomputed(1, 3, {0.3, 0.0, 1.0});
    CHECK(d->similarity(0, 0) == doctest::Approx(0.7));
    CHECK(d->similarity(0, 1) == 1.0);
    CHECK(d->similarity(0, 2) == 0.0);
    for (std::size_t i = 0; i < 3; ++i) CHECK(d->similarity(0, i) + d->distance(0, i) == 1.0);
}

TEST_CASE("peek does not move the counter or fill the cache") {
    auto d = Dissimilarity::precomputed(2, 2, {0.1, 0.2, 0.3, 0.4}, true);
    CHECK(d->peek(1, 0) == 0.3);
    CHECK(d->queries() == 0);
    CHECK(d->distance(1, 0) == 0.3);
    CHECK(d->queries() == 1);
}

TEST_CASE("column counts one query per target, and only misses when memoized") {
    auto d = Dissimilarity::precomputed(3, 2, {0.1, 0.2, 0.3, 0.4, 0.5, 0.6}, true);
    d->distance(1, 1);
    std::vector<double> col(3);
    d->column(1, col);
    CHECK(col == std::vector<double>{0.2, 0.4, 0.6});
    CHECK(d->queries() == 3);
    d->column(1, col);
    CHECK(d->queries() == 3);
}

TEST_CASE("errors: bounds, normalization, matrix range") {
    auto d = Dissimilarity::precomputed(1, 1, {0.5});
    CHECK_THROWS_AS(d->distance(1, 0), BoundsError);
    CHECK_THROWS_AS(d->distance(0, 1), BoundsError);
    CHECK_THROWS_AS(Dissimilarity::precomputed(1, 1, {1.5}), Error);
    CHECK_THROWS_AS(Dissimilarity::precomputed(1, 2, {0.5}), Error);

    auto t = points(1, 1, {0});
    auto s = points(1, 1, {5});
    auto small = Dissimilarity::euclidean(t, s, 2.0);
    CHECK_THROWS_AS(small->distance(0, 0), NormalizationError);
    CHECK_THROWS_AS(Dissimilarity::euclidean(t, points(1, 2, {0, 0}), 1.0), ParameterError);
}

TEST_CASE("normalization is the bounding-box diagonal") {
    const PointSet s(2, 2, {0, 0, 1, 0});
    const PointSet t(1, 2, {0, 1});
    CHECK(compute_normalization(s, t) == doctest::Approx(std::sqrt(2.0)));

    const PointSet one(1, 2, {2, 2});
    CHECK(compute_normalization(one, one) == 1.0);

    const PointSet a(1, 2, {0, 0});
    const PointSet b(1, 2, {3, 4});
    CHECK(compute_normalization(a, b) == doctest::Approx(5.0));
}

TEST_CASE("normalization bounds every pairwise distance") {
    std::vector<double> v;
    for (int i = 0; i < 60; ++i) v.push_back(std::sin(i * 1.7) * (i % 7));
    auto s = points(20, 3, v);
    auto t = points(20, 3, std::vector<double>(v.rbegin(), v.rend()));
    auto d = Dissimilarity::euclidean(t, s, compute_normalization(*s, *t));
    for (std::size_t j = 0; j < 20; ++j) {
        for (std::size_t i = 0; i < 20; ++i) {
            const double x = d->peek(j, i);
            CHECK(x >= 0.0);
            CHECK(x <= 1.0);
        }
    }
}

TEST_CASE("concurrent callers get an exact total and a consistent cache") {
    std::vector<double> m(50 * 40);
    for (std::size_t x = 0; x < m.size(); ++x) m[x] = static_cast<double>(x % 97) / 97.0;
    for (bool memoize : {false, true}) {
        auto d = Dissimilarity::precomputed(50, 40, m, memoize);
        {
            std::vector<std::jthread> pool;
            for (int w = 0; w < 4; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t j = 0; j < 50; ++j) {
                        for (std::size_t i = 0; i < 40; ++i) CHECK(d->distance(j, i) == m[j * 40 + i]);
                    }
                });
            }
        }
        if (memoize) {
            CHECK(d->queries() >= 2000);
            CHECK(d->queries() <= 4 * 2000);
            const auto before = d->queries();
            d->distance(3, 3);
            CHECK(d->queries() == before);
        } else {
            CHECK(d->queries() == 4 * 2000);
        }
    }
}

TEST_CASE("matrix file loads as a precomputed provider") {
    const auto path = std::filesystem::temp_directory_path() / "protoselect_test_dist.bin";
    write_binary_matrix(path, PointSet(2, 2, {0.0, 0.25, 0.5, 1.0}));
    auto d = Dissimilarity::from_matrix_file(path);
    CHECK(d->target_size() == 2);
    CHECK(d->source_size() == 2);
    CHECK(d->distance(1, 0) == 0.5);
    std::filesystem::remove(path);
}
