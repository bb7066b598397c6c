#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "protoselect/error.hpp"
#include "protoselect/harness.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace protoselect;

namespace {

std::filesystem::path scratch(const std::string& name) {
    auto p = std::filesystem::temp_directory_path() / ("protoselect_harness_" + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

const char* kSmall = R"({
  "dataset": {"kind": "synthetic", "components": 4, "points": 300, "dims": 3, "seed": 5},
  "source_size": 100,
  "skew_grid": [50],
  "k_grid": [4],
  "epsilon_grid": [0.2],
  "nu_grid": [0.09],
  "delta": 0.04,
  "strategies": ["kl_lucb_early"],
  "algorithms": ["protobandit", "spot_greedy", "spot_m", "pam"],
  "runs_per_cell": 2,
  "base_seed": 7,
  "record_wall_time": false
})";

RunRecord record(const std::string& algorithm, std::uint64_t queries, double objective) {
    RunRecord r;
    r.algorithm = algorithm;
    r.params.k = 5;
    r.total_queries = queries;
    r.bai_queries = queries;
    r.final_objective = objective;
    return r;
}

}  // namespace

TEST_CASE("config parsing mirrors the field names and rejects unknown keys") {
    const auto c = parse_config(kSmall);
    CHECK(c.source_size == 100);
    CHECK(c.dataset.points == 300);
    CHECK(c.strategies == std::vector<BaiStrategy>{BaiStrategy::kl_lucb_early});
    CHECK(c.runs_per_cell == 2);
    CHECK_FALSE(c.record_wall_time);
    CHECK(c.accounting_mode == AccountingMode::cached);

    CHECK_THROWS_AS(parse_config(R"({"k_grid": [3], "colour": 1})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"dataset": {"kind": "hdf5"}})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"runs_per_cell": 0})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"nu_grid": [0.5]})"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"algorithms": ["clarans"]})"), ParameterError);
    CHECK_THROWS_AS(parse_config("{not json"), ParameterError);
    CHECK_THROWS_AS(parse_config(R"({"k_grid": "three"})"), ParameterError);
}

TEST_CASE("grid expansion and seeds") {
    auto c = parse_config(kSmall);
    c.algorithms = {"protobandit", "spot_greedy"};
    c.k_grid = {3, 6};
    c.strategies = {BaiStrategy::aba, BaiStrategy::naive};
    const auto cells = expand_grid(c);
    CHECK(cells.size() == 2 * 2 + 2);
    std::set<std::string> keys;
    std::set<std::uint64_t> seeds;
    for (const auto& cell : cells) {
        keys.insert(cell.key());
        for (std::size_t run = 0; run < 10; ++run) seeds.insert(run_seed(c.base_seed, cell, run));
    }
    CHECK(keys.size() == cells.size());
    CHECK(seeds.size() == cells.size() * 10);
    CHECK(cells.back().params.strategy == "none");
    CHECK(run_seed(7, cells[0], 3) == 7 + stable_hash(cells[0].key()) + 3);
}

TEST_CASE("one cell with ten runs gives ten records with distinct seeds") {
    auto c = parse_config(kSmall);
    c.algorithms = {"protobandit"};
    c.runs_per_cell = 10;
    const auto records = run_experiments(c);
    REQUIRE(records.size() == 10);
    std::set<std::uint64_t> seeds;
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(records[i].error.empty());
        CHECK(records[i].run == i);
        CHECK(records[i].objective_trace.size() == 4);
        CHECK(records[i].accuracy.has_value());
        seeds.insert(records[i].params.seed);
    }
    CHECK(seeds.size() == 10);
}

TEST_CASE("memoized baseline stays under |S| |T| queries") {
    auto c = parse_config(kSmall);
    c.algorithms = {"spot_m", "spot_greedy"};
    c.runs_per_cell = 1;
    c.skew_grid = {100};
    const auto records = run_experiments(c);
    REQUIRE(records.size() == 2);
    REQUIRE(records[0].error.empty());
    // Target size equals the skew class size at 100 percent; recover it from the greedy count.
    const std::uint64_t greedy = records[1].total_queries;
    const std::uint64_t targets = greedy / (100 + 99 + 98 + 97);
    CHECK(greedy == targets * (100 + 99 + 98 + 97));
    CHECK(records[0].total_queries <= 100 * targets);
    CHECK(records[0].chosen == records[1].chosen);
}

TEST_CASE("identical config gives byte-identical files, regardless of thread count") {
    const auto c = parse_config(kSmall);
    const auto a = scratch("a"), b = scratch("b");
    setenv("PROTOSELECT_THREADS", "1", 1);
    CHECK(worker_count() == 1);
    write_records(a, run_experiments(c));
    setenv("PROTOSELECT_THREADS", "3", 1);
    CHECK(worker_count() == 3);
    write_records(b, run_experiments(c));
    unsetenv("PROTOSELECT_THREADS");
    CHECK(slurp(a / "records.csv") == slurp(b / "records.csv"));
    CHECK(slurp(a / "traces.jsonl") == slurp(b / "traces.jsonl"));
    CHECK(slurp(a / "records.csv").rfind(
              "algorithm,strategy,k,r,skew,epsilon,nu,delta,seed,accounting_mode,bai_queries,"
              "maintenance_queries,total_queries,final_objective,accuracy,wall_time_ms",
              0) == 0);
}

TEST_CASE("a failing cell becomes an error row and the grid continues") {
    auto c = parse_config(kSmall);
    c.algorithms = {"spot_greedy"};
    c.k_grid = {4, 500};
    c.runs_per_cell = 1;
    const auto records = run_experiments(c);
    REQUIRE(records.size() == 2);
    CHECK(records[0].error.empty());
    CHECK_FALSE(records[1].error.empty());

    const auto dir = scratch("errors");
    write_records(dir, records);
    const auto back = read_records(dir / "records.csv");
    REQUIRE(back.size() == 2);
    CHECK(back[1].error == records[1].error);
    CHECK(back[0].objective_trace == records[0].objective_trace);
    CHECK(back[0].final_objective == records[0].final_objective);
    CHECK(back[0].params.seed == records[0].params.seed);
}

TEST_CASE("dataset problems are fatal") {
    auto c = parse_config(kSmall);
    c.dataset.kind = DatasetSpec::Kind::csv;
    c.dataset.train = "/nonexistent/file.csv";
    CHECK_THROWS_AS(run_experiments(c), Error);
}

TEST_CASE("csv datasets load from files") {
    const auto dir = scratch("csv");
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "pool.csv");
        out << "x,y,label\n";
        for (int i = 0; i < 60; ++i) out << (i % 7) << ',' << (i % 5) * 0.5 << ',' << (i % 3) << '\n';
    }
    auto c = parse_config(kSmall);
    c.dataset.kind = DatasetSpec::Kind::csv;
    c.dataset.train = (dir / "pool.csv").string();
    c.source_size = 30;
    c.algorithms = {"build"};
    c.runs_per_cell = 1;
    const auto records = run_experiments(c);
    REQUIRE(records.size() == 1);
    CHECK(records[0].error.empty());
}

TEST_CASE("summary statistics") {
    CHECK(describe({}).count == 0);
    const auto one = describe({3.5});
    CHECK(one.mean == 3.5);
    CHECK(one.sd == 0.0);
    const auto two = describe({10, 20});
    CHECK(two.mean == 15.0);
    CHECK(two.sd == doctest::Approx(7.0711).epsilon(1e-4));
    CHECK(describe(std::vector<double>(10, 4.0)).sd == 0.0);
}

TEST_CASE("summarize groups by cell and skips failed runs") {
    std::vector<RunRecord> records{record("spot_greedy", 10, 0.5), record("spot_greedy", 20, 0.7),
                                   record("pam", 5, 0.1)};
    records[0].objective_trace = {0.4, 0.5};
    records[0].queries_trace = {4, 10};
    records[1].objective_trace = {0.6, 0.7};
    records[1].queries_trace = {8, 20};
    auto failed = record("pam", 0, 0.0);
    failed.error = "boom";
    records.push_back(failed);

    const auto rows = summarize(records);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].cell.algorithm == "spot_greedy");
    CHECK(rows[0].total_queries.mean == 15.0);
    CHECK(rows[0].total_queries.sd == doctest::Approx(7.0711).epsilon(1e-4));
    CHECK(rows[0].final_objective.mean == doctest::Approx(0.6));
    REQUIRE(rows[0].curve.size() == 2);
    CHECK(rows[0].curve[1].queries_mean == 15.0);
    CHECK(rows[0].curve[0].objective_mean == doctest::Approx(0.5));
    CHECK(rows[1].runs == 2);
    CHECK(rows[1].failed == 1);
    CHECK(rows[1].total_queries.count == 1);

    const auto path = scratch("summary") / "summary.csv";
    write_summary(path, rows);
    CHECK(std::filesystem::exists(path));
    CHECK(std::filesystem::exists(path.parent_path() / "summary_curves.csv"));
}
