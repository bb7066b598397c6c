#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace protoselect {

/// Dense row-major point set with optional integer class labels.
struct PointSet {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;
    std::optional<std::vector<int>> labels;

    PointSet() = default;
    PointSet(std::size_t n, std::size_t d, std::vector<double> data,
             std::optional<std::vector<int>> row_labels = std::nullopt);

    std::size_t size() const noexcept { return rows; }
    std::size_t dims() const noexcept { return cols; }
    bool has_labels() const noexcept { return labels.has_value(); }

    std::span<const double> row(std::size_t i) const noexcept {
        return {values.data() + i * cols, cols};
    }

    /// Copy of the given rows, in the given order, labels included.
    PointSet select(std::span<const std::size_t> indices) const;
};

/// Throws ParameterError unless n >= 1, d >= 1, values finite and label count matches.
void validate(const PointSet& points);

/// Probability weights over the target set.
class TargetWeights {
  public:
    TargetWeights() = default;
    explicit TargetWeights(std::vector<double> q);

    static TargetWeights uniform(std::size_t n);

    std::size_t size() const noexcept { return q_.size(); }
    double operator[](std::size_t j) const noexcept { return q_[j]; }
    std::span<const double> values() const noexcept { return q_; }

  private:
    std::vector<double> q_;
};

// CSV: comma separated, optional header (detected when the first row is not
// numeric), optional trailing integer label column.
PointSet parse_csv(std::istream& in, bool has_labels);
PointSet load_csv(const std::filesystem::path& path, bool has_labels);
void write_csv(const std::filesystem::path& path, const PointSet& points);

// IDX (MNIST container). Pixels are scaled to [0,1] and flattened row-major.
PointSet parse_idx(std::istream& images, std::istream* labels);
PointSet load_idx(const std::filesystem::path& images_path,
                  const std::optional<std::filesystem::path>& labels_path);

// Binary matrix: little-endian u64 n, u64 d, then n*d little-endian float32.
PointSet read_binary_matrix(const std::filesystem::path& path);
void write_binary_matrix(const std::filesystem::path& path, const PointSet& points);

struct SkewedTarget {
    PointSet points;
    TargetWeights weights;
};

/// Every row labelled `skew_label`, topped up with rows drawn uniformly without
/// replacement from the other labels so that the skew label makes up
/// `skew_percent` of the result. Result size is round(100 * c / skew_percent).
SkewedTarget build_skewed_target(const PointSet& base, int skew_label, double skew_percent,
                                 std::uint64_t rng_seed);

/// `count` rows drawn uniformly without replacement, in draw order.
PointSet sample_rows(const PointSet& base, std::size_t count, std::uint64_t rng_seed);

/// Label with the fewest rows (lowest label on ties).
int least_frequent_label(const PointSet& points);

struct MixtureSpec {
    std::size_t components = 10;
    std::size_t points = 1000;
    std::size_t dims = 8;
    double spread = 1.0;       // per-coordinate standard deviation
    double center_box = 10.0;  // component centers uniform in [0, center_box]^dims
};

/// Labelled Gaussian mixture. Component j owns label j. Centers depend only on
/// `center_seed`, so independent draws sharing it come from the same mixture.
PointSet gaussian_mixture(const MixtureSpec& spec, std::uint64_t center_seed,
                          std::uint64_t sample_seed);

}  // namespace protoselect
