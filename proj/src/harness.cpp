#include "protoselect/harness.hpp"

#include "protoselect/error.hpp"
#include "protoselect/exact.hpp"
#include "protoselect/instance.hpp"
#include "protoselect/protobandit.hpp"
#include "protoselect/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace protoselect {

using nlohmann::json;

namespace {

const std::set<std::string> kAlgorithms{"protobandit", "spot_greedy", "spot_m", "build", "pam"};

// Shortest text that reads back to the same double.
std::string fmt(double x) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc{}) throw Error("number formatting failed");
    return {buf, end};
}

template <typename T>
T take(const json& obj, const char* key, T fallback) {
    const auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    try {
        return it->get<T>();
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config key '") + key + "': " + e.what());
    }
}

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (const auto& [key, value] : obj.items()) {
        if (!known.count(key)) throw ParameterError("unknown " + where + " key '" + key + "'");
    }
}

DatasetSpec parse_dataset(const json& j) {
    if (!j.is_object()) throw ParameterError("'dataset' must be an object");
    reject_unknown(j,
                   {"kind", "components", "points", "test_points", "dims", "spread", "center_box", "seed", "train",
                    "test", "has_labels", "train_images", "train_labels", "test_images", "test_labels",
                    "target_split", "source_split"},
                   "dataset");
    DatasetSpec d;
    const auto kind = take<std::string>(j, "kind", "synthetic");
    if (kind == "synthetic") d.kind = DatasetSpec::Kind::synthetic;
    else if (kind == "csv") d.kind = DatasetSpec::Kind::csv;
    else if (kind == "idx") d.kind = DatasetSpec::Kind::idx;
    else throw ParameterError("unknown dataset kind '" + kind + "'");
    d.components = take(j, "components", d.components);
    d.points = take(j, "points", d.points);
    d.test_points = take(j, "test_points", d.test_points);
    d.dims = take(j, "dims", d.dims);
    d.spread = take(j, "spread", d.spread);
    d.center_box = take(j, "center_box", d.center_box);
    d.seed = take(j, "seed", d.seed);
    d.train = take(j, "train", d.train);
    d.test = take(j, "test", d.test);
    d.has_labels = take(j, "has_labels", d.has_labels);
    d.train_images = take(j, "train_images", d.train_images);
    d.train_labels = take(j, "train_labels", d.train_labels);
    d.test_images = take(j, "test_images", d.test_images);
    d.test_labels = take(j, "test_labels", d.test_labels);
    d.target_split = take(j, "target_split", d.target_split);
    d.source_split = take(j, "source_split", d.source_split);
    return d;
}

}  // namespace

void ExperimentConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ParameterError(msg); };
    for (const auto* split : {&dataset.target_split, &dataset.source_split}) {
        if (*split != "train" && *split != "test") fail("dataset splits must be 'train' or 'test'");
    }
    if (runs_per_cell < 1) fail("runs_per_cell must be at least 1");
    if (skew_grid.empty() || k_grid.empty() || algorithms.empty()) fail("skew_grid, k_grid and algorithms must be non-empty");
    for (double s : skew_grid) {
        if (!(s > 0.0 && s <= 100.0)) fail("skew values must lie in (0, 100]");
    }
    for (auto k : k_grid) {
        if (k < 1) fail("k values must be positive");
        if (r > k) fail("r must not exceed any k in k_grid");
    }
    if (r < 1) fail("r must be at least 1");
    if (swap_size < 1) fail("swap_size must be at least 1");
    for (const auto& a : algorithms) {
        if (!kAlgorithms.count(a)) fail("unknown algorithm '" + a + "'");
    }
    if (std::count(algorithms.begin(), algorithms.end(), "protobandit")) {
        if (epsilon_grid.empty() || nu_grid.empty() || strategies.empty()) {
            fail("protobandit needs non-empty epsilon_grid, nu_grid and strategies");
        }
        for (double e : epsilon_grid) {
            for (double n : nu_grid) {
                ProtoBanditConfig{e, n, delta, BaiStrategy::aba, 0, accounting_mode}.validate();
            }
        }
    }
}

ExperimentConfig parse_config(std::string_view json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParameterError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ParameterError("config must be a JSON object");
    reject_unknown(j,
                   {"dataset", "source_size", "skew_grid", "k_grid", "epsilon_grid", "nu_grid", "delta", "r",
                    "strategies", "algorithms", "runs_per_cell", "base_seed", "accounting_mode", "output",
                    "skew_label", "record_wall_time", "swap_size", "max_swap_passes"},
                   "config");
    ExperimentConfig c;
    if (j.contains("dataset")) c.dataset = parse_dataset(j.at("dataset"));
    c.source_size = take(j, "source_size", c.source_size);
    c.skew_grid = take(j, "skew_grid", c.skew_grid);
    c.k_grid = take(j, "k_grid", c.k_grid);
    c.epsilon_grid = take(j, "epsilon_grid", c.epsilon_grid);
    c.nu_grid = take(j, "nu_grid", c.nu_grid);
    c.delta = take(j, "delta", c.delta);
    c.r = take(j, "r", c.r);
    if (j.contains("strategies")) {
        c.strategies.clear();
        for (const auto& s : take<std::vector<std::string>>(j, "strategies", {})) {
            c.strategies.push_back(parse_bai_strategy(s));
        }
    }
    c.algorithms = take(j, "algorithms", c.algorithms);
    c.runs_per_cell = take(j, "runs_per_cell", c.runs_per_cell);
    c.base_seed = take(j, "base_seed", c.base_seed);
    c.accounting_mode = parse_accounting_mode(take<std::string>(j, "accounting_mode", "cached"));
    c.output = take(j, "output", c.output);
    if (j.contains("skew_label") && !j.at("skew_label").is_null()) c.skew_label = take(j, "skew_label", 0);
    c.record_wall_time = take(j, "record_wall_time", c.record_wall_time);
    c.swap_size = take(j, "swap_size", c.swap_size);
    c.max_swap_passes = take(j, "max_swap_passes", c.max_swap_passes);
    c.validate();
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string Cell::key() const {
    std::string out = "algorithm=" + algorithm;
    out += "|strategy=" + params.strategy;
    out += "|k=" + std::to_string(params.k);
    out += "|r=" + std::to_string(params.r);
    out += "|skew=" + fmt(params.skew);
    out += "|epsilon=" + fmt(params.epsilon);
    out += "|nu=" + fmt(params.nu);
    out += "|delta=" + fmt(params.delta);
    out += "|accounting=" + std::string(to_string(params.accounting));
    return out;
}

std::vector<Cell> expand_grid(const ExperimentConfig& config) {
    std::vector<Cell> cells;
    for (const auto& algorithm : config.algorithms) {
        for (double skew : config.skew_grid) {
            for (std::size_t k : config.k_grid) {
                Cell base;
                base.algorithm = algorithm;
                base.params.k = k;
                base.params.skew = skew;
                base.params.accounting = config.accounting_mode;
                if (algorithm != "protobandit") {
                    base.params.r = config.r;
                    cells.push_back(base);
                    continue;
                }
                base.params.r = 1;
                base.params.delta = config.delta;
                for (auto strategy : config.strategies) {
                    for (double eps : config.epsilon_grid) {
                        for (double nu : config.nu_grid) {
                            Cell c = base;
                            c.params.strategy = std::string(to_string(strategy));
                            c.params.epsilon = eps;
                            c.params.nu = nu;
                            cells.push_back(std::move(c));
                        }
                    }
                }
            }
        }
    }
    return cells;
}

std::uint64_t run_seed(std::uint64_t base_seed, const Cell& cell, std::size_t run) {
    return base_seed + stable_hash(cell.key()) + static_cast<std::uint64_t>(run);
}

std::size_t worker_count() {
    if (const char* env = std::getenv("PROTOSELECT_THREADS")) {
        std::size_t n = 0;
        const std::string_view text(env);
        const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
        if (ec == std::errc{} && ptr == text.data() + text.size() && n > 0) return n;
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

namespace {

struct Pools {
    PointSet train;
    PointSet test;
    const PointSet& split(const std::string& name) const { return name == "train" ? train : test; }
};

Pools load_pools(const DatasetSpec& d) {
    Pools p;
    switch (d.kind) {
        case DatasetSpec::Kind::synthetic: {
            MixtureSpec spec{d.components, d.points, d.dims, d.spread, d.center_box};
            p.train = gaussian_mixture(spec, d.seed, derive_seed(d.seed, 1));
            spec.points = d.test_points > 0 ? d.test_points : d.points;
            p.test = gaussian_mixture(spec, d.seed, derive_seed(d.seed, 2));
            break;
        }
        case DatasetSpec::Kind::csv:
            if (d.train.empty()) throw ParameterError("csv dataset needs a 'train' path");
            p.train = load_csv(d.train, d.has_labels);
            p.test = d.test.empty() ? p.train : load_csv(d.test, d.has_labels);
            break;
        case DatasetSpec::Kind::idx: {
            auto opt = [](const std::string& s) {
                return s.empty() ? std::nullopt : std::optional<std::filesystem::path>(s);
            };
            if (d.train_images.empty()) throw ParameterError("idx dataset needs 'train_images'");
            p.train = load_idx(d.train_images, opt(d.train_labels));
            p.test = d.test_images.empty() ? p.train : load_idx(d.test_images, opt(d.test_labels));
            break;
        }
    }
    return p;
}

// The data for run `run` at a given skew is shared by every algorithm, so cells
// compare algorithms on identical instances.
ProblemInstance make_run_instance(const Pools& pools, const ExperimentConfig& config, int skew_label,
                                  const Cell& cell, std::size_t run) {
    const PointSet& target_pool = pools.split(config.dataset.target_split);
    const PointSet& source_pool = pools.split(config.dataset.source_split);
    const std::uint64_t target_seed =
        derive_seed(config.base_seed + stable_hash("target|skew=" + fmt(cell.params.skew)), run);
    const std::uint64_t source_seed = derive_seed(config.base_seed + stable_hash("source"), run);

    auto target = build_skewed_target(target_pool, skew_label, cell.params.skew, target_seed);
    const std::size_t n = config.source_size == 0 ? source_pool.size() : config.source_size;
    if (n > source_pool.size()) {
        throw InsufficientDataError("source_size " + std::to_string(n) + " exceeds the source pool (" +
                                    std::to_string(source_pool.size()) + " rows)");
    }
    PointSet source = sample_rows(source_pool, n, source_seed);
    return make_euclidean_instance(std::move(source), std::move(target.points), cell.params.k,
                                   cell.algorithm == "spot_m", std::move(target.weights));
}

void check_identity(const ProblemInstance& instance, const PrototypeState& state, double final_objective) {
    const double identity = 1.0 - weighted_nearest_distance(instance.weights, state);
    if (std::abs(identity - final_objective) > 1e-9) {
        throw Error("objective " + fmt(final_objective) + " disagrees with 1 - sum q D = " + fmt(identity));
    }
}

RunRecord run_exact(const ProblemInstance& instance, const ExperimentConfig& config, const Cell& cell,
                    std::uint64_t seed) {
    auto& oracle = *instance.dissimilarity;
    std::vector<std::uint64_t> queries;
    const StepObserver observer = [&](const PrototypeState& s) { queries.resize(s.size(), oracle.queries()); };
    const std::size_t r = cell.params.r;

    PrototypeState state;
    if (cell.algorithm == "spot_greedy" || cell.algorithm == "spot_m") {
        state = spot_greedy(instance, r, seed, observer);
    } else {
        state = build(instance, r, seed, observer);
        if (cell.algorithm == "pam") {
            const std::size_t l = std::min(config.swap_size, instance.k);
            for (std::size_t pass = 0; pass < config.max_swap_passes; ++pass) {
                auto result = swap(instance, state, l);
                if (result.converged) break;
                state = std::move(result.state);
            }
            queries.back() = oracle.queries();
        }
    }

    RunRecord rec;
    rec.algorithm = cell.algorithm;
    rec.params = cell.params;
    rec.params.seed = seed;
    rec.bai_queries = oracle.queries();
    rec.maintenance_queries = 0;
    rec.total_queries = rec.bai_queries;
    rec.chosen = state.chosen;
    rec.objective_trace = objective_trace(instance, rec.chosen);
    rec.queries_trace = std::move(queries);
    rec.final_objective = rec.objective_trace.back();
    check_identity(instance, state, rec.final_objective);
    return rec;
}

RunRecord run_one(const Pools& pools, const ExperimentConfig& config, int skew_label, const Cell& cell,
                  std::size_t run) {
    const std::uint64_t seed = run_seed(config.base_seed, cell, run);
    RunRecord rec;
    try {
        const auto instance = make_run_instance(pools, config, skew_label, cell, run);
        const auto started = std::chrono::steady_clock::now();
        if (cell.algorithm == "protobandit") {
            ProtoBanditConfig pc{cell.params.epsilon, cell.params.nu, cell.params.delta,
                                 parse_bai_strategy(cell.params.strategy), seed, cell.params.accounting};
            auto result = protobandit(instance, pc);
            check_identity(instance, result.state, result.record.final_objective);
            rec = std::move(result.record);
            rec.params.skew = cell.params.skew;
        } else {
            rec = run_exact(instance, config, cell, seed);
        }
        const auto elapsed = std::chrono::steady_clock::now() - started;
        rec.wall_time_ms =
            config.record_wall_time ? std::chrono::duration<double, std::milli>(elapsed).count() : 0.0;
        if (instance.source->has_labels() && instance.target->has_labels()) {
            rec.accuracy = accuracy(instance, rec.chosen);
        }
    } catch (const std::exception& e) {
        rec = RunRecord{};
        rec.algorithm = cell.algorithm;
        rec.params = cell.params;
        rec.params.seed = seed;
        rec.error = e.what();
        if (rec.error.empty()) rec.error = "unknown error";
    }
    rec.run = run;
    return rec;
}

}  // namespace

std::vector<RunRecord> run_experiments(const ExperimentConfig& config, const RecordCallback& on_record) {
    config.validate();
    const Pools pools = load_pools(config.dataset);
    const PointSet& target_pool = pools.split(config.dataset.target_split);
    if (!target_pool.has_labels()) throw LabelError("the target pool needs labels for the skew protocol");
    const int skew_label = config.skew_label ? *config.skew_label : least_frequent_label(target_pool);

    const auto cells = expand_grid(config);
    const std::size_t jobs = cells.size() * config.runs_per_cell;
    std::vector<RunRecord> records(jobs);
    std::atomic<std::size_t> next{0};
    std::mutex report;

    auto worker = [&] {
        for (std::size_t job = next++; job < jobs; job = next++) {
            const auto& cell = cells[job / config.runs_per_cell];
            records[job] = run_one(pools, config, skew_label, cell, job % config.runs_per_cell);
            if (on_record) {
                std::lock_guard lock(report);
                on_record(records[job]);
            }
        }
    };
    const std::size_t threads = std::min(worker_count(), std::max<std::size_t>(jobs, 1));
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
        worker();
    }
    return records;
}

namespace {

const char* const kColumns[] = {"algorithm", "strategy",       "k",         "r",
                                "skew",      "epsilon",        "nu",        "delta",
                                "seed",      "accounting_mode", "bai_queries", "maintenance_queries",
                                "total_queries", "final_objective", "accuracy", "wall_time_ms",
                                "run",       "error"};

std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> fields(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                fields.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                fields.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.emplace_back();
        } else {
            fields.back() += c;
        }
    }
    return fields;
}

template <typename T>
T parse_number(const std::string& text, std::size_t line, const char* column) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        throw ParseError(line, std::string("bad value '") + text + "' in column " + column);
    }
    return value;
}

json trace_json(const RunRecord& r) {
    return json{{"algorithm", r.algorithm},
                {"strategy", r.params.strategy},
                {"k", r.params.k},
                {"r", r.params.r},
                {"skew", r.params.skew},
                {"epsilon", r.params.epsilon},
                {"nu", r.params.nu},
                {"delta", r.params.delta},
                {"seed", r.params.seed},
                {"run", r.run},
                {"accounting_mode", std::string(to_string(r.params.accounting))},
                {"chosen", r.chosen},
                {"objective_trace", r.objective_trace},
                {"queries_trace", r.queries_trace}};
}

}  // namespace

void write_records(const std::filesystem::path& dir, const std::vector<RunRecord>& records) {
    std::filesystem::create_directories(dir);
    std::ofstream csv(dir / "records.csv", std::ios::binary);
    std::ofstream traces(dir / "traces.jsonl", std::ios::binary);
    if (!csv || !traces) throw Error("cannot write outputs in " + dir.string());

    for (std::size_t c = 0; c < std::size(kColumns); ++c) csv << (c ? "," : "") << kColumns[c];
    csv << '\n';
    for (const auto& r : records) {
        const auto& p = r.params;
        csv << csv_escape(r.algorithm) << ',' << csv_escape(p.strategy) << ',' << p.k << ',' << p.r << ','
            << fmt(p.skew) << ',' << fmt(p.epsilon) << ',' << fmt(p.nu) << ',' << fmt(p.delta) << ',' << p.seed
            << ',' << to_string(p.accounting) << ',' << r.bai_queries << ',' << r.maintenance_queries << ','
            << r.total_queries << ',' << fmt(r.final_objective) << ',' << (r.accuracy ? fmt(*r.accuracy) : "")
            << ',' << fmt(r.wall_time_ms) << ',' << r.run << ',' << csv_escape(r.error) << '\n';
        traces << trace_json(r).dump() << '\n';
    }
    if (!csv || !traces) throw Error("write failed in " + dir.string());
}

std::vector<RunRecord> read_records(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw Error("cannot open " + csv_path.string());
    std::string line;
    if (!std::getline(in, line)) throw EmptyInputError(csv_path.string() + " is empty");
    const auto header = csv_split(line);
    std::map<std::string, std::size_t> col;
    for (std::size_t c = 0; c < header.size(); ++c) col[header[c]] = c;
    for (const char* name : kColumns) {
        if (!col.count(name)) throw FormatError(std::string("records file lacks column '") + name + "'");
    }

    std::vector<RunRecord> records;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = csv_split(line);
        if (f.size() != header.size()) throw ParseError(row, "expected " + std::to_string(header.size()) + " fields");
        auto get = [&](const char* name) -> const std::string& { return f[col[name]]; };
        RunRecord r;
        r.algorithm = get("algorithm");
        r.params.strategy = get("strategy");
        r.params.k = parse_number<std::size_t>(get("k"), row, "k");
        r.params.r = parse_number<std::size_t>(get("r"), row, "r");
        r.params.skew = parse_number<double>(get("skew"), row, "skew");
        r.params.epsilon = parse_number<double>(get("epsilon"), row, "epsilon");
        r.params.nu = parse_number<double>(get("nu"), row, "nu");
        r.params.delta = parse_number<double>(get("delta"), row, "delta");
        r.params.seed = parse_number<std::uint64_t>(get("seed"), row, "seed");
        r.params.accounting = parse_accounting_mode(get("accounting_mode"));
        r.bai_queries = parse_number<std::uint64_t>(get("bai_queries"), row, "bai_queries");
        r.maintenance_queries = parse_number<std::uint64_t>(get("maintenance_queries"), row, "maintenance_queries");
        r.total_queries = parse_number<std::uint64_t>(get("total_queries"), row, "total_queries");
        r.final_objective = parse_number<double>(get("final_objective"), row, "final_objective");
        if (!get("accuracy").empty()) r.accuracy = parse_number<double>(get("accuracy"), row, "accuracy");
        r.wall_time_ms = parse_number<double>(get("wall_time_ms"), row, "wall_time_ms");
        r.run = parse_number<std::size_t>(get("run"), row, "run");
        r.error = get("error");
        records.push_back(std::move(r));
    }

    const auto traces_path = csv_path.parent_path() / "traces.jsonl";
    std::ifstream traces(traces_path);
    if (traces) {
        std::size_t i = 0;
        while (std::getline(traces, line) && i < records.size()) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            auto& r = records[i++];
            if (j.at("seed").get<std::uint64_t>() != r.params.seed || j.at("algorithm") != r.algorithm) {
                throw ConsistencyError("traces.jsonl does not line up with " + csv_path.string());
            }
            r.chosen = j.at("chosen").get<std::vector<std::size_t>>();
            r.objective_trace = j.at("objective_trace").get<std::vector<double>>();
            r.queries_trace = j.at("queries_trace").get<std::vector<std::uint64_t>>();
        }
    }
    return records;
}

Stat describe(const std::vector<double>& values) {
    Stat s;
    s.count = values.size();
    if (values.empty()) return s;
    double sum = 0.0;
    for (double v : values) sum += v;
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - s.mean) * (v - s.mean);
        s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return s;
}

std::vector<SummaryRow> summarize(const std::vector<RunRecord>& records) {
    std::vector<SummaryRow> rows;
    std::map<std::string, std::size_t> index;
    std::map<std::string, std::vector<const RunRecord*>> members;
    for (const auto& r : records) {
        Cell cell{r.algorithm, r.params};
        cell.params.seed = 0;
        const auto key = cell.key();
        if (!index.count(key)) {
            index[key] = rows.size();
            SummaryRow row;
            row.cell = cell;
            rows.push_back(std::move(row));
        }
        members[key].push_back(&r);
    }

    for (auto& row : rows) {
        std::vector<double> queries, objective, acc, wall;
        std::vector<const RunRecord*> ok;
        for (const RunRecord* r : members[row.cell.key()]) {
            ++row.runs;
            if (!r->error.empty()) {
                ++row.failed;
                continue;
            }
            ok.push_back(r);
            queries.push_back(static_cast<double>(r->total_queries));
            objective.push_back(r->final_objective);
            if (r->accuracy) acc.push_back(*r->accuracy);
            wall.push_back(r->wall_time_ms);
        }
        row.total_queries = describe(queries);
        row.final_objective = describe(objective);
        row.accuracy = describe(acc);
        row.wall_time_ms = describe(wall);

        std::size_t length = 0;
        for (const RunRecord* r : ok) length = std::max(length, r->objective_trace.size());
        for (std::size_t t = 0; t < length; ++t) {
            std::vector<double> q, f;
            for (const RunRecord* r : ok) {
                if (t < r->objective_trace.size() && t < r->queries_trace.size()) {
                    q.push_back(static_cast<double>(r->queries_trace[t]));
                    f.push_back(r->objective_trace[t]);
                }
            }
            if (f.empty()) continue;
            const Stat fs = describe(f);
            row.curve.push_back({t + 1, describe(q).mean, fs.mean, fs.sd});
        }
    }
    return rows;
}

void write_summary(const std::filesystem::path& path, const std::vector<SummaryRow>& rows) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    const std::string cell_header = "algorithm,strategy,k,r,skew,epsilon,nu,delta,accounting_mode";
    auto cell_fields = [](const Cell& c) {
        const auto& p = c.params;
        return csv_escape(c.algorithm) + ',' + csv_escape(p.strategy) + ',' + std::to_string(p.k) + ',' +
               std::to_string(p.r) + ',' + fmt(p.skew) + ',' + fmt(p.epsilon) + ',' + fmt(p.nu) + ',' +
               fmt(p.delta) + ',' + std::string(to_string(p.accounting));
    };
    auto stat_fields = [](const Stat& s) { return s.count ? fmt(s.mean) + ',' + fmt(s.sd) : std::string(","); };

    out << cell_header
        << ",runs,failed,total_queries_mean,total_queries_sd,final_objective_mean,final_objective_sd,"
           "accuracy_mean,accuracy_sd,wall_time_ms_mean,wall_time_ms_sd\n";
    bool any_curve = false;
    for (const auto& row : rows) {
        out << cell_fields(row.cell) << ',' << row.runs << ',' << row.failed << ',' << stat_fields(row.total_queries)
            << ',' << stat_fields(row.final_objective) << ',' << stat_fields(row.accuracy) << ','
            << stat_fields(row.wall_time_ms) << '\n';
        any_curve = any_curve || !row.curve.empty();
    }
    if (!out) throw Error("write failed: " + path.string());
    if (!any_curve) return;

    auto curves_path = path;
    curves_path.replace_filename(path.stem().string() + "_curves.csv");
    std::ofstream curves(curves_path, std::ios::binary);
    if (!curves) throw Error("cannot write " + curves_path.string());
    curves << cell_header << ",iteration,queries_mean,objective_mean,objective_sd\n";
    for (const auto& row : rows) {
        for (const auto& pt : row.curve) {
            curves << cell_fields(row.cell) << ',' << pt.iteration << ',' << fmt(pt.queries_mean) << ','
                   << fmt(pt.objective_mean) << ',' << fmt(pt.objective_sd) << '\n';
        }
    }
}

}  // namespace protoselect
