#pragma once

#include "protoselect/dataset.hpp"
#include "protoselect/metric.hpp"

#include <cstddef>
#include <memory>

namespace protoselect {

/// (S, T, q, d, k). The point sets are optional for matrix-backed instances;
/// sizes always come from the dissimilarity provider.
struct ProblemInstance {
    std::shared_ptr<const PointSet> source;
    std::shared_ptr<const PointSet> target;
    TargetWeights weights;
    std::shared_ptr<Dissimilarity> dissimilarity;
    std::size_t k = 1;

    std::size_t source_size() const noexcept { return dissimilarity->source_size(); }
    std::size_t target_size() const noexcept { return dissimilarity->target_size(); }
};

/// Throws ParameterError when k is outside [1, |S|] or weights and provider disagree.
void validate(const ProblemInstance& instance);

/// Euclidean instance normalized by the bounding-box diameter, uniform weights
/// unless given.
ProblemInstance make_euclidean_instance(PointSet source, PointSet target, std::size_t k,
                                        bool memoize = false,
                                        std::optional<TargetWeights> weights = std::nullopt);

/// Instance over a precomputed |T| x |S| matrix.
ProblemInstance make_matrix_instance(std::size_t targets, std::size_t sources, std::vector<double> matrix,
                                     TargetWeights weights, std::size_t k, bool memoize = false);

}  // namespace protoselect
