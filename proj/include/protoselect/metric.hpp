#pragma once

#include "protoselect/dataset.hpp"

#include <atomic>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

namespace protoselect {

/// The dissimilarity oracle d: T x S -> [0,1].
///
/// Every underlying evaluation bumps an atomic query counter. With memoization
/// on, each (target, source) pair is evaluated at most once; cache hits are
/// free. `peek` evaluates without touching the counter or the cache and is what
/// evaluation code (objective, accuracy, coherence checks) uses, so that the
/// counter reflects algorithmic work only.
class Dissimilarity {
  public:
    enum class Kind { euclidean_normalized, precomputed_matrix };

    /// ||t_j - s_i|| / normalization. Throws ParameterError on a dimension
    /// mismatch or non-positive normalization.
    static std::shared_ptr<Dissimilarity> euclidean(std::shared_ptr<const PointSet> target,
                                                    std::shared_ptr<const PointSet> source,
                                                    double normalization, bool memoize = false);

    /// Row-major |T| x |S| matrix; every entry must lie in [0,1].
    static std::shared_ptr<Dissimilarity> precomputed(std::size_t targets, std::size_t sources,
                                                      std::vector<double> matrix, bool memoize = false);

    /// Precomputed matrix read from a binary matrix file (rows = targets).
    static std::shared_ptr<Dissimilarity> from_matrix_file(const std::filesystem::path& path,
                                                           bool memoize = false);

    Dissimilarity(const Dissimilarity&) = delete;
    Dissimilarity& operator=(const Dissimilarity&) = delete;

    Kind kind() const noexcept { return kind_; }
    bool memoized() const noexcept { return memoize_; }
    double normalization() const noexcept { return normalization_; }
    std::size_t target_size() const noexcept { return targets_; }
    std::size_t source_size() const noexcept { return sources_; }

    double distance(std::size_t j, std::size_t i);
    double similarity(std::size_t j, std::size_t i) { return 1.0 - distance(j, i); }

    /// d(j, i) for every target j, written to `out` (size |T|).
    void column(std::size_t i, std::span<double> out);

    /// Uncounted, uncached evaluation.
    double peek(std::size_t j, std::size_t i) const;

    std::uint64_t queries() const noexcept { return queries_.load(std::memory_order_relaxed); }
    void reset_queries() noexcept { queries_.store(0, std::memory_order_relaxed); }

    /// Drops every memoized value; the counter is untouched.
    void clear_cache();

  private:
    Dissimilarity(Kind kind, std::size_t targets, std::size_t sources, bool memoize);

    void check_bounds(std::size_t j, std::size_t i) const;
    double evaluate(std::size_t j, std::size_t i) const;
    double lookup_or_evaluate(std::size_t j, std::size_t i, std::uint64_t& evaluations);

    Kind kind_;
    std::size_t targets_;
    std::size_t sources_;
    bool memoize_;
    double normalization_ = 1.0;
    std::shared_ptr<const PointSet> target_points_;
    std::shared_ptr<const PointSet> source_points_;
    std::vector<double> matrix_;
    // Dense |T| x |S| cache, NaN marks "not yet evaluated". Accessed through
    // std::atomic_ref so concurrent readers and writers are well defined.
    std::vector<double> cache_;
    std::atomic<std::uint64_t> queries_{0};
};

/// Upper bound on every ||t_j - s_i||: the length of the diagonal of the
/// bounding box of source and target together. Floored at 1 when the box is a
/// single point.
double compute_normalization(const PointSet& source, const PointSet& target);

}  // namespace protoselect
