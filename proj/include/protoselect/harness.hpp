#pragma once

#include "protoselect/bandit.hpp"
#include "protoselect/dataset.hpp"
#include "protoselect/eval.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace protoselect {

// Where the two point pools come from. Targets are drawn from the `target_split`
// pool with the skew protocol; sources are a uniform sample of the
// `source_split` pool.
struct DatasetSpec {
    enum class Kind { synthetic, csv, idx };
    Kind kind = Kind::synthetic;

    // synthetic: labelled Gaussian mixture; "train" has `points` rows, "test"
    // has `test_points` rows (defaults to `points`), same centers.
    std::size_t components = 10;
    std::size_t points = 2000;
    std::size_t test_points = 0;
    std::size_t dims = 8;
    double spread = 1.0;
    double center_box = 10.0;
    std::uint64_t seed = 0;

    // csv: "train" and optional "test" files (test falls back to train).
    std::string train;
    std::string test;
    bool has_labels = true;

    // idx: image and label files per split.
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;

    std::string target_split = "train";
    std::string source_split = "test";
};

struct ExperimentConfig {
    DatasetSpec dataset;
    std::size_t source_size = 0;  // 0 uses the whole source pool
    std::vector<double> skew_grid{100.0};
    std::vector<std::size_t> k_grid{10};
    std::vector<double> epsilon_grid{0.2};
    std::vector<double> nu_grid{0.05};
    double delta = 0.04;
    std::size_t r = 1;
    std::vector<BaiStrategy> strategies{BaiStrategy::aba};
    // Any of: protobandit, spot_greedy, spot_m, build, pam.
    std::vector<std::string> algorithms{"protobandit", "spot_greedy"};
    std::size_t runs_per_cell = 10;
    std::uint64_t base_seed = 0;
    AccountingMode accounting_mode = AccountingMode::cached;
    std::string output = "results";
    std::optional<int> skew_label;  // least frequent target label when unset
    bool record_wall_time = true;   // false writes 0, making outputs byte-identical across runs
    std::size_t swap_size = 1;      // l for pam
    std::size_t max_swap_passes = 100;

    /// Throws ParameterError on values outside the admissible ranges.
    void validate() const;
};

/// Parses a JSON document whose keys mirror the ExperimentConfig field names.
/// Unknown keys are rejected.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// One (algorithm, parameters) combination of the grid.
struct Cell {
    std::string algorithm;
    RunParams params;  // seed unused

    /// Canonical text "algorithm=...|strategy=...|k=...|...". Run seeds are
    /// base_seed + stable_hash(key()) + run index (mod 2^64).
    std::string key() const;
};

/// Cells in output order (algorithm, strategy, k, skew, epsilon, nu).
std::vector<Cell> expand_grid(const ExperimentConfig& config);

std::uint64_t run_seed(std::uint64_t base_seed, const Cell& cell, std::size_t run);

/// Worker count: PROTOSELECT_THREADS if set to a positive integer, else the
/// hardware concurrency (at least 1).
std::size_t worker_count();

using RecordCallback = std::function<void(const RunRecord&)>;

/// Runs every cell `runs_per_cell` times on a worker pool. A failing run becomes
/// a record with `error` set. Dataset problems are thrown. The result is in
/// cell order then run order regardless of scheduling; `on_record` is called
/// (serialized) as runs finish.
std::vector<RunRecord> run_experiments(const ExperimentConfig& config, const RecordCallback& on_record = {});

/// records.csv and traces.jsonl inside `dir` (created if needed).
void write_records(const std::filesystem::path& dir, const std::vector<RunRecord>& records);

/// Reads a records.csv written by write_records; traces come from a sibling
/// traces.jsonl when present.
std::vector<RunRecord> read_records(const std::filesystem::path& csv_path);

struct Stat {
    std::size_t count = 0;
    double mean = 0.0;
    double sd = 0.0;  // sample standard deviation, 0 for fewer than two values
};

Stat describe(const std::vector<double>& values);

struct CurvePoint {
    std::size_t iteration = 0;  // number of prototypes chosen
    double queries_mean = 0.0;
    double objective_mean = 0.0;
    double objective_sd = 0.0;
};

struct SummaryRow {
    Cell cell;
    std::size_t runs = 0;
    std::size_t failed = 0;
    Stat total_queries;
    Stat final_objective;
    Stat accuracy;
    Stat wall_time_ms;
    std::vector<CurvePoint> curve;  // empty when no traces were available
};

/// Per-cell statistics over the successful runs, in first-appearance order.
std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records);

/// Writes the table to `path` and, if any curve is present, the objective
/// versus queries data to `<path stem>_curves.csv` next to it.
void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows);

}  // namespace protoselect
