#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "protoselect/dataset.hpp"
#include "protoselect/error.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

using namespace protoselect;

namespace {

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / ("protoselect_test_" + name);
}

void put_be32(std::string& out, std::uint32_t v) {
    for (int s = 24; s >= 0; s -= 8) out.push_back(static_cast<char>((v >> s) & 0xff));
}

std::string idx_images(std::uint32_t magic, std::uint32_t count, std::uint32_t rows, std::uint32_t cols,
                       const std::vector<unsigned char>& pixels) {
    std::string s;
    put_be32(s, magic);
    put_be32(s, count);
    put_be32(s, rows);
    put_be32(s, cols);
    s.append(pixels.begin(), pixels.end());
    return s;
}

std::string idx_labels(std::uint32_t count, const std::vector<unsigned char>& labels) {
    std::string s;
    put_be32(s, 0x801);
    put_be32(s, count);
    s.append(labels.begin(), labels.end());
    return s;
}

PointSet toy_labelled(std::size_t zeros, std::size_t ones) {
    std::vector<double> v;
    std::vector<int> l;
    for (std::size_t i = 0; i < zeros + ones; ++i) {
        v.push_back(static_cast<double>(i));
        l.push_back(i < zeros ? 0 : 1);
    }
    return PointSet(zeros + ones, 1, v, l);
}

}  // namespace

TEST_CASE("csv: plain rows") {
    std::istringstream in("0,0\n1,0\n0,1\n");
    const auto p = parse_csv(in, false);
    CHECK(p.size() == 3);
    CHECK(p.dims() == 2);
    CHECK(p.row(2)[1] == 1.0);
    CHECK_FALSE(p.has_labels());
}

TEST_CASE("csv: trailing label column") {
    std::istringstream in("0,0,7\n");
    const auto p = parse_csv(in, true);
    CHECK(p.size() == 1);
    CHECK(p.dims() == 2);
    REQUIRE(p.labels);
    CHECK((*p.labels)[0] == 7);
}

TEST_CASE("csv: malformed cell names the row") {
    std::istringstream in("0,abc\n");
    try {
        parse_csv(in, false);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 1);
    }
}

TEST_CASE("csv: header detection and error cases") {
    std::istringstream header("x,y\n1,2\n3,4\n");
    CHECK(parse_csv(header, false).size() == 2);

    std::istringstream empty("");
    CHECK_THROWS_AS(parse_csv(empty, false), EmptyInputError);

    std::istringstream ragged("1,2\n3\n");
    try {
        parse_csv(ragged, false);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.row() == 2);
    }

    std::istringstream bad_label("1,2,x\n");
    CHECK_THROWS_AS(parse_csv(bad_label, true), ParseError);

    std::istringstream inf("1,inf\n");
    CHECK_THROWS_AS(parse_csv(inf, false), ParseError);
}

TEST_CASE("csv: write and load round trip") {
    const auto path = temp_file("roundtrip.csv");
    const PointSet p(2, 2, {0.125, -3.5, 1e-7, 42.0}, std::vector<int>{3, 4});
    write_csv(path, p);
    const auto back = load_csv(path, true);
    CHECK(back.values == p.values);
    CHECK(*back.labels == *p.labels);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_csv(path, false), Error);
}

TEST_CASE("idx: pixels scaled to [0,1]") {
    std::istringstream images(idx_images(0x803, 1, 2, 2, {0, 255, 128, 0}), std::ios::binary);
    std::istringstream labels(idx_labels(1, {9}), std::ios::binary);
    const auto p = parse_idx(images, &labels);
    REQUIRE(p.size() == 1);
    REQUIRE(p.dims() == 4);
    CHECK(p.values == std::vector<double>{0.0, 1.0, 128.0 / 255.0, 0.0});
    CHECK((*p.labels)[0] == 9);
}

TEST_CASE("idx: count mismatch and bad magic") {
    std::istringstream images(idx_images(0x803, 2, 1, 1, {1, 2}), std::ios::binary);
    std::istringstream labels(idx_labels(1, {0}), std::ios::binary);
    CHECK_THROWS_AS(parse_idx(images, &labels), ConsistencyError);

    std::istringstream bad(idx_images(0x0, 1, 1, 1, {1}), std::ios::binary);
    CHECK_THROWS_AS(parse_idx(bad, nullptr), FormatError);

    std::istringstream truncated(idx_images(0x803, 3, 1, 1, {1}), std::ios::binary);
    CHECK_THROWS_AS(parse_idx(truncated, nullptr), FormatError);
}

TEST_CASE("binary matrix round trip is float32 exact") {
    const auto path = temp_file("matrix.bin");
    const PointSet p(2, 3, {0.5, 0.25, 1.0, -2.0, 3.0, 0.125});
    write_binary_matrix(path, p);
    CHECK(std::filesystem::file_size(path) == 16 + 6 * 4);
    const auto back = read_binary_matrix(path);
    CHECK(back.size() == 2);
    CHECK(back.dims() == 3);
    CHECK(back.values == p.values);
    std::filesystem::remove(path);
}

TEST_CASE("point set and weight invariants") {
    CHECK_THROWS_AS(PointSet(0, 2, {}), ParameterError);
    CHECK_THROWS_AS(PointSet(1, 1, {std::nan("")}), ParameterError);
    CHECK_THROWS_AS(PointSet(2, 1, {1, 2}, std::vector<int>{1}), ParameterError);
    CHECK_THROWS_AS(TargetWeights({0.5, 0.6}), ParameterError);
    CHECK_THROWS_AS(TargetWeights({1.5, -0.5}), ParameterError);
    CHECK_NOTHROW(TargetWeights({0.25, 0.75}));
    const auto u = TargetWeights::uniform(3);
    CHECK(u[0] == doctest::Approx(1.0 / 3));
}

TEST_CASE("skewed target: toy base at 50 percent") {
    const auto base = toy_labelled(4, 4);
    const auto t = build_skewed_target(base, 0, 50, 11);
    CHECK(t.points.size() == 8);
    CHECK(std::count(t.points.labels->begin(), t.points.labels->end(), 0) == 4);
    double sum = 0;
    for (double q : t.weights.values()) sum += q;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("skewed target: 100 percent is exactly the skew class, and sizes follow round(100c/theta)") {
    const auto base = toy_labelled(10, 90);
    const auto all = build_skewed_target(base, 0, 100, 1);
    CHECK(all.points.size() == 10);
    CHECK(std::all_of(all.points.labels->begin(), all.points.labels->end(), [](int l) { return l == 0; }));
    for (double theta : {10.0, 20.0, 30.0, 70.0}) {
        const auto t = build_skewed_target(base, 0, theta, 5);
        CHECK(t.points.size() == static_cast<std::size_t>(std::llround(1000.0 / theta)));
        CHECK(std::count(t.points.labels->begin(), t.points.labels->end(), 0) == 10);
    }
}

TEST_CASE("skewed target: sampled rows are distinct and deterministic") {
    const auto base = toy_labelled(10, 90);
    const auto a = build_skewed_target(base, 0, 10, 77);
    const auto b = build_skewed_target(base, 0, 10, 77);
    CHECK(a.points.values == b.points.values);
    auto v = a.points.values;
    std::sort(v.begin(), v.end());
    CHECK(std::adjacent_find(v.begin(), v.end()) == v.end());
}

TEST_CASE("skewed target: errors") {
    const auto base = toy_labelled(10, 5);
    CHECK_THROWS_AS(build_skewed_target(base, 0, 0, 1), ParameterError);
    CHECK_THROWS_AS(build_skewed_target(base, 0, 101, 1), ParameterError);
    CHECK_THROWS_AS(build_skewed_target(base, 0, 10, 1), InsufficientDataError);
    CHECK_THROWS_AS(build_skewed_target(PointSet(1, 1, {0.0}), 0, 50, 1), LabelError);
}

TEST_CASE("mixture generator: labels, determinism and shared centers") {
    MixtureSpec spec{4, 400, 3, 0.5, 10.0};
    const auto a = gaussian_mixture(spec, 1, 2);
    const auto b = gaussian_mixture(spec, 1, 2);
    CHECK(a.values == b.values);
    CHECK(a.dims() == 3);
    std::map<int, int> counts;
    for (int l : *a.labels) ++counts[l];
    CHECK(counts.size() == 4);

    // Same centers, different draw: per-label means agree closely.
    const auto c = gaussian_mixture(spec, 1, 3);
    auto mean_of = [](const PointSet& p, int label) {
        double s = 0;
        int n = 0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            if ((*p.labels)[i] == label) {
                s += p.row(i)[0];
                ++n;
            }
        }
        return s / n;
    };
    CHECK(mean_of(a, 0) == doctest::Approx(mean_of(c, 0)).epsilon(0.05));
}

TEST_CASE("row sampling and least frequent label") {
    const auto base = toy_labelled(3, 7);
    const auto s = sample_rows(base, 10, 4);
    auto v = s.values;
    std::sort(v.begin(), v.end());
    CHECK(v == base.values);
    CHECK_THROWS_AS(sample_rows(base, 11, 4), InsufficientDataError);
    CHECK(least_frequent_label(base) == 0);
}
