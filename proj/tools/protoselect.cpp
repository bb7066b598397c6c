// Command-line front end: experiment grids, summaries, the acceptance suite and
// synthetic data generation.

#include "protoselect/acceptance.hpp"
#include "protoselect/dataset.hpp"
#include "protoselect/error.hpp"
#include "protoselect/harness.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>

namespace ps = protoselect;

namespace {

int run_grid(const std::string& config_path, const std::string& output_override, bool quiet) {
    auto config = ps::load_config(config_path);
    if (!output_override.empty()) config.output = output_override;
    std::size_t done = 0, failed = 0;
    const auto records = ps::run_experiments(config, [&](const ps::RunRecord& r) {
        ++done;
        if (!r.error.empty()) {
            ++failed;
            std::cerr << "run failed: " << r.algorithm << " k=" << r.params.k << " seed=" << r.params.seed << ": "
                      << r.error << '\n';
        } else if (!quiet) {
            std::cerr << "[" << done << "] " << r.algorithm << " k=" << r.params.k << " queries=" << r.total_queries
                      << " objective=" << r.final_objective << '\n';
        }
    });
    ps::write_records(config.output, records);
    std::cout << records.size() << " records (" << failed << " failed) written to "
              << (std::filesystem::path(config.output) / "records.csv").string() << '\n';
    return 0;
}

int summarize(const std::string& input, const std::string& output) {
    const auto records = ps::read_records(input);
    if (records.empty()) throw ps::EmptyInputError(input + " holds no records");
    const auto rows = ps::summarize(records);
    ps::write_summary(output, rows);
    std::cout << rows.size() << " cells summarized into " << output << '\n';
    return 0;
}

int validate(const std::vector<int>& only, std::uint64_t seed) {
    ps::AcceptanceOptions options;
    options.only.insert(only.begin(), only.end());
    options.seed = seed;
    bool all = true;
    for (const auto& r : ps::run_acceptance(options)) {
        std::cout << ps::format_result(r) << std::endl;
        all = all && r.passed;
    }
    return all ? 0 : 1;
}

int gen_synth(const ps::MixtureSpec& spec, std::uint64_t seed, const std::string& out) {
    const auto points = ps::gaussian_mixture(spec, seed, ps::derive_seed(seed, 1));
    const std::filesystem::path path(out);
    if (path.extension() == ".bin") {
        ps::write_binary_matrix(path, points);
    } else {
        ps::write_csv(path, points);
    }
    std::cout << "wrote " << points.size() << " x " << points.dims() << " points to " << out << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Prototype selection with exact greedy and bandit-based algorithms"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment grid described by a JSON config");
    std::string config_path, output_override;
    bool quiet = false;
    run->add_option("--config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--output", output_override, "Output directory (overrides the config)");
    run->add_flag("--quiet", quiet, "Only report failed runs");

    auto* sum = app.add_subcommand("summarize", "Per-cell mean and standard deviation of a records file");
    std::string input, output;
    sum->add_option("--input", input, "records.csv written by run")->required()->check(CLI::ExistingFile);
    sum->add_option("--output", output, "Summary CSV to write")->required();

    auto* val = app.add_subcommand("validate", "Run the acceptance criteria and print PASS/FAIL per criterion");
    std::vector<int> only;
    std::uint64_t validate_seed = ps::AcceptanceOptions{}.seed;
    val->add_option("--only", only, "Criterion ids to run (default: all)")->check(CLI::Range(1, ps::kCriterionCount));
    val->add_option("--seed", validate_seed, "Master seed of the suite");

    auto* gen = app.add_subcommand("gen-synth", "Write a labelled Gaussian mixture (CSV, or binary for .bin)");
    ps::MixtureSpec spec;
    std::uint64_t seed = 0;
    std::string out;
    gen->add_option("--components", spec.components, "Mixture components")->capture_default_str();
    gen->add_option("--points", spec.points, "Number of points")->capture_default_str();
    gen->add_option("--dims", spec.dims, "Dimensions")->capture_default_str();
    gen->add_option("--seed", seed, "Seed")->capture_default_str();
    gen->add_option("--out", out, "Output file")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return run_grid(config_path, output_override, quiet);
        if (*sum) return summarize(input, output);
        if (*val) return validate(only, validate_seed);
        if (*gen) return gen_synth(spec, seed, out);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
