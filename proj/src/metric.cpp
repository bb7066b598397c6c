#include "protoselect/metric.hpp"

#include "protoselect/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace protoselect {

Dissimilarity::Dissimilarity(Kind kind, std::size_t targets, std::size_t sources, bool memoize)
    : kind_(kind), targets_(targets), sources_(sources), memoize_(memoize) {
    if (memoize_) cache_.assign(targets_ * sources_, std::numeric_limits<double>::quiet_NaN());
}

std::shared_ptr<Dissimilarity> Dissimilarity::euclidean(std::shared_ptr<const PointSet> target,
                                                        std::shared_ptr<const PointSet> source,
                                                        double normalization, bool memoize) {
    if (!target || !source) throw ParameterError("euclidean dissimilarity needs both point sets");
    validate(*target);
    validate(*source);
    if (target->dims() != source->dims()) {
        throw ParameterError("source and target dimensions differ (" + std::to_string(source->dims()) +
                             " vs " + std::to_string(target->dims()) + ")");
    }
    if (!(normalization > 0.0) || !std::isfinite(normalization)) {
        throw ParameterError("normalization constant must be positive");
    }
    std::shared_ptr<Dissimilarity> d(
        new Dissimilarity(Kind::euclidean_normalized, target->size(), source->size(), memoize));
    d->normalization_ = normalization;
    d->target_points_ = std::move(target);
    d->source_points_ = std::move(source);
    return d;
}

std::shared_ptr<Dissimilarity> Dissimilarity::precomputed(std::size_t targets, std::size_t sources,
                                                          std::vector<double> matrix, bool memoize) {
    if (targets == 0 || sources == 0) throw ParameterError("precomputed matrix must be non-empty");
    if (matrix.size() != targets * sources) throw ParameterError("precomputed matrix has the wrong size");
    for (double v : matrix) {
        if (!(v >= 0.0 && v <= 1.0)) throw NormalizationError("precomputed dissimilarity outside [0,1]");
    }
    std::shared_ptr<Dissimilarity> d(new Dissimilarity(Kind::precomputed_matrix, targets, sources, memoize));
    d->matrix_ = std::move(matrix);
    return d;
}

std::shared_ptr<Dissimilarity> Dissimilarity::from_matrix_file(const std::filesystem::path& path,
                                                               bool memoize) {
    auto m = read_binary_matrix(path);
    return precomputed(m.rows, m.cols, std::move(m.values), memoize);
}

void Dissimilarity::check_bounds(std::size_t j, std::size_t i) const {
    if (j >= targets_ || i >= sources_) {
        throw BoundsError("dissimilarity index (" + std::to_string(j) + ", " + std::to_string(i) +
                          ") outside " + std::to_string(targets_) + " x " + std::to_string(sources_));
    }
}

double Dissimilarity::evaluate(std::size_t j, std::size_t i) const {
    if (kind_ == Kind::precomputed_matrix) return matrix_[j * sources_ + i];

    const auto t = target_points_->row(j);
    const auto s = source_points_->row(i);
    double sum = 0.0;
    for (std::size_t c = 0; c < t.size(); ++c) {
        const double diff = t[c] - s[c];
        sum += diff * diff;
    }
    const double d = std::sqrt(sum) / normalization_;
    if (d > 1.0) {
        throw NormalizationError("normalized distance " + std::to_string(d) +
                                 " exceeds 1; the normalization constant is too small");
    }
    return d;
}

double Dissimilarity::lookup_or_evaluate(std::size_t j, std::size_t i, std::uint64_t& evaluations) {
    if (!memoize_) {
        ++evaluations;
        return evaluate(j, i);
    }
    std::atomic_ref<double> slot(cache_[j * sources_ + i]);
    const double cached = slot.load(std::memory_order_relaxed);
    if (!std::isnan(cached)) return cached;
    ++evaluations;
    const double value = evaluate(j, i);
    slot.store(value, std::memory_order_relaxed);
    return value;
}

double Dissimilarity::distance(std::size_t j, std::size_t i) {
    check_bounds(j, i);
    std::uint64_t evaluations = 0;
    const double d = lookup_or_evaluate(j, i, evaluations);
    if (evaluations) queries_.fetch_add(evaluations, std::memory_order_relaxed);
    return d;
}

void Dissimilarity::column(std::size_t i, std::span<double> out) {
    if (out.size() != targets_) throw ParameterError("column buffer must have one slot per target");
    check_bounds(0, i);
    std::uint64_t evaluations = 0;
    for (std::size_t j = 0; j < targets_; ++j) out[j] = lookup_or_evaluate(j, i, evaluations);
    if (evaluations) queries_.fetch_add(evaluations, std::memory_order_relaxed);
}

double Dissimilarity::peek(std::size_t j, std::size_t i) const {
    check_bounds(j, i);
    return evaluate(j, i);
}

void Dissimilarity::clear_cache() {
    std::fill(cache_.begin(), cache_.end(), std::numeric_limits<double>::quiet_NaN());
}

double compute_normalization(const PointSet& source, const PointSet& target) {
    validate(source);
    validate(target);
    if (source.dims() != target.dims()) throw ParameterError("source and target dimensions differ");
    const std::size_t dims = source.dims();
    std::vector<double> lo(dims, std::numeric_limits<double>::infinity());
    std::vector<double> hi(dims, -std::numeric_limits<double>::infinity());
    for (const PointSet* set : {&source, &target}) {
        for (std::size_t r = 0; r < set->size(); ++r) {
            const auto row = set->row(r);
            for (std::size_t c = 0; c < dims; ++c) {
                lo[c] = std::min(lo[c], row[c]);
                hi[c] = std::max(hi[c], row[c]);
            }
        }
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < dims; ++c) {
        const double range = hi[c] - lo[c];
        sum += range * range;
    }
    const double diameter = std::sqrt(sum);
    return diameter > 0.0 ? diameter : 1.0;
}

}  // namespace protoselect
