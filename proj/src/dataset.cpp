#include "protoselect/dataset.hpp"

#include "protoselect/error.hpp"
#include "protoselect/random.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>

namespace protoselect {

PointSet::PointSet(std::size_t n, std::size_t d, std::vector<double> data,
                   std::optional<std::vector<int>> row_labels)
    : rows(n), cols(d), values(std::move(data)), labels(std::move(row_labels)) {
    validate(*this);
}

PointSet PointSet::select(std::span<const std::size_t> indices) const {
    PointSet out;
    out.rows = indices.size();
    out.cols = cols;
    out.values.reserve(indices.size() * cols);
    if (labels) out.labels.emplace().reserve(indices.size());
    for (std::size_t i : indices) {
        if (i >= rows) throw BoundsError("row index " + std::to_string(i) + " out of range");
        const auto r = row(i);
        out.values.insert(out.values.end(), r.begin(), r.end());
        if (labels) out.labels->push_back((*labels)[i]);
    }
    return out;
}

void validate(const PointSet& points) {
    if (points.rows == 0 || points.cols == 0) {
        throw ParameterError("point set must have at least one row and one column");
    }
    if (points.values.size() != points.rows * points.cols) {
        throw ParameterError("point set storage does not match its shape");
    }
    for (double v : points.values) {
        if (!std::isfinite(v)) throw ParameterError("point set contains a non-finite value");
    }
    if (points.labels && points.labels->size() != points.rows) {
        throw ParameterError("label count does not match row count");
    }
}

TargetWeights::TargetWeights(std::vector<double> q) : q_(std::move(q)) {
    if (q_.empty()) throw ParameterError("target weights must not be empty");
    double total = 0.0;
    for (double w : q_) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw ParameterError("target weights must be finite and non-negative");
        }
        total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) {
        throw ParameterError("target weights must sum to 1 (got " + std::to_string(total) + ")");
    }
}

TargetWeights TargetWeights::uniform(std::size_t n) {
    if (n == 0) throw ParameterError("target weights must not be empty");
    return TargetWeights(std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        cells.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return cells;
}

std::optional<double> parse_double(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    // std::from_chars rejects a leading '+'; strtod semantics are what CSV writers expect.
    std::string buf(cell);
    char* end = nullptr;
    const double v = std::strtod(buf.c_str(), &end);
    if (end != buf.c_str() + buf.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<int> parse_int(std::string_view cell) {
    int v = 0;
    const auto* first = cell.data();
    const auto* last = cell.data() + cell.size();
    if (!cell.empty() && cell.front() == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last || first == last) {
        // Accept integral floats such as "7.0".
        auto d = parse_double(cell);
        if (d && std::floor(*d) == *d && std::abs(*d) < 2147483647.0) return static_cast<int>(*d);
        return std::nullopt;
    }
    return v;
}

}  // namespace

PointSet parse_csv(std::istream& in, bool has_labels) {
    std::vector<double> values;
    std::vector<int> labels;
    std::size_t cols = 0;
    std::size_t rows = 0;
    std::size_t row_index = 0;  // 1-based index of data rows, as reported in errors
    bool first_line = true;
    std::string line;

    while (std::getline(in, line)) {
        const auto view = trim(line);
        if (view.empty()) continue;
        const auto cells = split_commas(view);

        if (first_line) {
            first_line = false;
            // A header has no numeric cell at all; "0,abc" is a malformed data row.
            const bool header = std::none_of(cells.begin(), cells.end(),
                                             [](auto c) { return parse_double(c).has_value(); });
            if (header) continue;
        }
        ++row_index;

        const std::size_t min_cells = has_labels ? 2 : 1;
        if (cells.size() < min_cells) throw ParseError(row_index, "too few columns");
        const std::size_t feature_cells = has_labels ? cells.size() - 1 : cells.size();
        if (cols == 0) {
            cols = feature_cells;
        } else if (feature_cells != cols) {
            throw ParseError(row_index, "expected " + std::to_string(cols) + " feature columns, found " +
                                            std::to_string(feature_cells));
        }
        for (std::size_t c = 0; c < feature_cells; ++c) {
            const auto v = parse_double(cells[c]);
            if (!v) throw ParseError(row_index, "cannot parse '" + std::string(cells[c]) + "' as a number");
            values.push_back(*v);
        }
        if (has_labels) {
            const auto label = parse_int(cells.back());
            if (!label) throw ParseError(row_index, "cannot parse label '" + std::string(cells.back()) + "'");
            labels.push_back(*label);
        }
        ++rows;
    }
    if (rows == 0) throw EmptyInputError("CSV input contains no data rows");

    return PointSet(rows, cols, std::move(values),
                    has_labels ? std::optional<std::vector<int>>(std::move(labels)) : std::nullopt);
}

PointSet load_csv(const std::filesystem::path& path, bool has_labels) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path.string());
    return parse_csv(in, has_labels);
}

void write_csv(const std::filesystem::path& path, const PointSet& points) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write " + path.string());
    out.precision(17);
    for (std::size_t i = 0; i < points.rows; ++i) {
        const auto r = points.row(i);
        for (std::size_t c = 0; c < r.size(); ++c) {
            if (c) out << ',';
            out << r[c];
        }
        if (points.labels) out << ',' << (*points.labels)[i];
        out << '\n';
    }
}

namespace {

std::uint32_t read_be32(std::istream& in, const char* what) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
        throw FormatError(std::string("truncated IDX header (") + what + ")");
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

}  // namespace

PointSet parse_idx(std::istream& images, std::istream* labels) {
    const auto magic = read_be32(images, "magic");
    if (magic != kIdxImagesMagic) throw FormatError("bad IDX image magic");
    const std::size_t count = read_be32(images, "count");
    const std::size_t height = read_be32(images, "rows");
    const std::size_t width = read_be32(images, "cols");
    const std::size_t dims = height * width;
    if (count == 0 || dims == 0) throw EmptyInputError("IDX image file holds no pixels");

    std::vector<unsigned char> raw(count * dims);
    if (!images.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw FormatError("truncated IDX image payload");
    }
    std::vector<double> values(raw.size());
    std::transform(raw.begin(), raw.end(), values.begin(),
                   [](unsigned char p) { return static_cast<double>(p) / 255.0; });

    std::optional<std::vector<int>> label_vec;
    if (labels) {
        if (read_be32(*labels, "magic") != kIdxLabelsMagic) throw FormatError("bad IDX label magic");
        const std::size_t label_count = read_be32(*labels, "count");
        if (label_count != count) {
            throw ConsistencyError("IDX label count " + std::to_string(label_count) +
                                   " does not match image count " + std::to_string(count));
        }
        std::vector<unsigned char> raw_labels(count);
        if (!labels->read(reinterpret_cast<char*>(raw_labels.data()), static_cast<std::streamsize>(count))) {
            throw FormatError("truncated IDX label payload");
        }
        label_vec.emplace(raw_labels.begin(), raw_labels.end());
    }
    return PointSet(count, dims, std::move(values), std::move(label_vec));
}

PointSet load_idx(const std::filesystem::path& images_path,
                  const std::optional<std::filesystem::path>& labels_path) {
    std::ifstream images(images_path, std::ios::binary);
    if (!images) throw Error("cannot open " + images_path.string());
    if (!labels_path) return parse_idx(images, nullptr);
    std::ifstream labels(*labels_path, std::ios::binary);
    if (!labels) throw Error("cannot open " + labels_path->string());
    return parse_idx(images, &labels);
}

namespace {

template <typename T>
T from_little_endian(const unsigned char* bytes) {
    static_assert(std::is_trivially_copyable_v<T>);
    std::array<unsigned char, sizeof(T)> buf{};
    std::memcpy(buf.data(), bytes, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    T out;
    std::memcpy(&out, buf.data(), sizeof(T));
    return out;
}

template <typename T>
void write_little_endian(std::ostream& out, T value) {
    std::array<unsigned char, sizeof(T)> buf{};
    std::memcpy(buf.data(), &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(buf.begin(), buf.end());
    out.write(reinterpret_cast<const char*>(buf.data()), sizeof(T));
}

}  // namespace

PointSet read_binary_matrix(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::array<unsigned char, 16> header{};
    if (!in.read(reinterpret_cast<char*>(header.data()), 16)) throw FormatError("truncated matrix header");
    const auto n = from_little_endian<std::uint64_t>(header.data());
    const auto d = from_little_endian<std::uint64_t>(header.data() + 8);
    if (n == 0 || d == 0) throw EmptyInputError("binary matrix is empty");
    if (n > (std::uint64_t{1} << 40) / d) throw FormatError("binary matrix header is implausibly large");

    std::vector<unsigned char> payload(n * d * 4);
    if (!in.read(reinterpret_cast<char*>(payload.data()), static_cast<std::streamsize>(payload.size()))) {
        throw FormatError("truncated matrix payload");
    }
    std::vector<double> values(n * d);
    for (std::size_t i = 0; i < values.size(); ++i) {
        values[i] = from_little_endian<float>(payload.data() + 4 * i);
    }
    return PointSet(n, d, std::move(values));
}

void write_binary_matrix(const std::filesystem::path& path, const PointSet& points) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    write_little_endian<std::uint64_t>(out, points.rows);
    write_little_endian<std::uint64_t>(out, points.cols);
    for (double v : points.values) write_little_endian<float>(out, static_cast<float>(v));
}

SkewedTarget build_skewed_target(const PointSet& base, int skew_label, double skew_percent,
                                 std::uint64_t rng_seed) {
    if (!(skew_percent > 0.0 && skew_percent <= 100.0)) {
        throw ParameterError("skew percent must lie in (0, 100]");
    }
    if (!base.labels) throw LabelError("skewed target construction needs labels");

    std::vector<std::size_t> skewed;
    std::vector<std::size_t> others;
    for (std::size_t i = 0; i < base.rows; ++i) {
        ((*base.labels)[i] == skew_label ? skewed : others).push_back(i);
    }
    const std::size_t c = skewed.size();
    if (c == 0) throw ParameterError("skew label " + std::to_string(skew_label) + " not present");

    const auto total = static_cast<std::size_t>(std::llround(100.0 * static_cast<double>(c) / skew_percent));
    if (total < c) throw ParameterError("skew percent yields a target smaller than the skew class");
    const std::size_t extra = total - c;
    if (extra > others.size()) {
        throw InsufficientDataError("need " + std::to_string(extra) + " rows outside the skew label, have " +
                                    std::to_string(others.size()));
    }

    // Partial Fisher-Yates: the first `extra` entries become the sample.
    Rng rng(rng_seed);
    for (std::size_t t = 0; t < extra; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, others.size() - 1);
        std::swap(others[t], others[pick(rng)]);
    }
    skewed.insert(skewed.end(), others.begin(), others.begin() + static_cast<std::ptrdiff_t>(extra));

    SkewedTarget out{base.select(skewed), TargetWeights::uniform(total)};
    return out;
}

PointSet sample_rows(const PointSet& base, std::size_t count, std::uint64_t rng_seed) {
    if (count == 0 || count > base.rows) {
        throw InsufficientDataError("cannot sample " + std::to_string(count) + " of " + std::to_string(base.rows) +
                             " rows");
    }
    std::vector<std::size_t> idx(base.rows);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(rng_seed);
    for (std::size_t t = 0; t < count; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, idx.size() - 1);
        std::swap(idx[t], idx[pick(rng)]);
    }
    idx.resize(count);
    return base.select(idx);
}

int least_frequent_label(const PointSet& points) {
    if (!points.labels) throw LabelError("point set has no labels");
    std::map<int, std::size_t> counts;
    for (int l : *points.labels) ++counts[l];
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it) {
        if (it->second < best->second) best = it;
    }
    return best->first;
}

PointSet gaussian_mixture(const MixtureSpec& spec, std::uint64_t center_seed, std::uint64_t sample_seed) {
    if (spec.components == 0 || spec.points == 0 || spec.dims == 0) {
        throw ParameterError("mixture needs at least one component, point and dimension");
    }
    if (!(spec.spread > 0.0) || !(spec.center_box > 0.0)) {
        throw ParameterError("mixture spread and center box must be positive");
    }
    Rng center_rng(center_seed);
    std::uniform_real_distribution<double> box(0.0, spec.center_box);
    std::vector<double> centers(spec.components * spec.dims);
    for (double& c : centers) c = box(center_rng);

    Rng rng(sample_seed);
    std::uniform_int_distribution<std::size_t> component(0, spec.components - 1);
    std::normal_distribution<double> noise(0.0, spec.spread);
    std::vector<double> values(spec.points * spec.dims);
    std::vector<int> labels(spec.points);
    for (std::size_t i = 0; i < spec.points; ++i) {
        const std::size_t m = component(rng);
        labels[i] = static_cast<int>(m);
        for (std::size_t d = 0; d < spec.dims; ++d) {
            values[i * spec.dims + d] = centers[m * spec.dims + d] + noise(rng);
        }
    }
    return PointSet(spec.points, spec.dims, std::move(values), std::move(labels));
}

}  // namespace protoselect
