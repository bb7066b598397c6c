#include "protoselect/instance.hpp"

#include "protoselect/error.hpp"

#include <string>

namespace protoselect {

void validate(const ProblemInstance& instance) {
    if (!instance.dissimilarity) throw ParameterError("instance has no dissimilarity provider");
    if (instance.k < 1 || instance.k > instance.source_size()) {
        throw ParameterError("k = " + std::to_string(instance.k) + " must lie in [1, " +
                             std::to_string(instance.source_size()) + "]");
    }
    if (instance.weights.size() != instance.target_size()) {
        throw ParameterError("weight vector length does not match the target set");
    }
    if (instance.source && instance.source->size() != instance.source_size()) {
        throw ParameterError("source point set does not match the provider");
    }
    if (instance.target && instance.target->size() != instance.target_size()) {
        throw ParameterError("target point set does not match the provider");
    }
}

ProblemInstance make_euclidean_instance(PointSet source, PointSet target, std::size_t k, bool memoize,
                                        std::optional<TargetWeights> weights) {
    const double norm = compute_normalization(source, target);
    auto src = std::make_shared<const PointSet>(std::move(source));
    auto tgt = std::make_shared<const PointSet>(std::move(target));
    ProblemInstance instance{src, tgt, weights ? std::move(*weights) : TargetWeights::uniform(tgt->size()),
                             Dissimilarity::euclidean(tgt, src, norm, memoize), k};
    validate(instance);
    return instance;
}

ProblemInstance make_matrix_instance(std::size_t targets, std::size_t sources, std::vector<double> matrix,
                                     TargetWeights weights, std::size_t k, bool memoize) {
    ProblemInstance instance{nullptr, nullptr, std::move(weights),
                             Dissimilarity::precomputed(targets, sources, std::move(matrix), memoize), k};
    validate(instance);
    return instance;
}

}  // namespace protoselect
