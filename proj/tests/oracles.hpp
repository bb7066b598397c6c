#pragma once

// Independent reference computations used by the unit tests. These are kept
// deliberately naive: direct formulas over peek(), no shared code paths with
// the library's fast implementations.

#include "protoselect/dataset.hpp"
#include "protoselect/instance.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace oracle {

using protoselect::ProblemInstance;

inline double d(const ProblemInstance& inst, std::size_t j, std::size_t i) { return inst.dissimilarity->peek(j, i); }

// f(M) = sum_j q_j max_{i in M} (1 - d(j,i)), with f(empty) = 0.
inline double f(const ProblemInstance& inst, std::span<const std::size_t> m) {
    double total = 0.0;
    for (std::size_t j = 0; j < inst.target_size(); ++j) {
        double best = 0.0;
        for (std::size_t i : m) best = std::max(best, 1.0 - d(inst, j, i));
        total += inst.weights[j] * best;
    }
    return total;
}

// D_j for a chosen set, 1 for the empty set.
inline std::vector<double> nearest(const ProblemInstance& inst, std::span<const std::size_t> m) {
    std::vector<double> out(inst.target_size(), 1.0);
    for (std::size_t j = 0; j < out.size(); ++j) {
        if (m.empty()) continue;
        out[j] = d(inst, j, m[0]);
        for (std::size_t i : m) out[j] = std::min(out[j], d(inst, j, i));
    }
    return out;
}

inline double gain(const ProblemInstance& inst, std::span<const std::size_t> m, std::size_t i) {
    const auto D = nearest(inst, m);
    double g = 0.0;
    for (std::size_t j = 0; j < D.size(); ++j) g += inst.weights[j] * std::max(D[j] - d(inst, j, i), 0.0);
    return g;
}

inline double sum_qd(const ProblemInstance& inst, std::span<const std::size_t> m) {
    const auto D = nearest(inst, m);
    double s = 0.0;
    for (std::size_t j = 0; j < D.size(); ++j) s += inst.weights[j] * D[j];
    return s;
}

inline protoselect::TargetWeights random_weights(std::mt19937_64& rng, std::size_t n) {
    std::exponential_distribution<double> e(1.0);
    std::vector<double> q(n);
    for (double& x : q) x = e(rng);
    const double s = std::accumulate(q.begin(), q.end(), 0.0);
    for (double& x : q) x /= s;
    return protoselect::TargetWeights(std::move(q));
}

inline ProblemInstance random_matrix(std::mt19937_64& rng, std::size_t sources, std::size_t targets, std::size_t k,
                                     bool memoize = false) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> m(sources * targets);
    for (double& x : m) x = u(rng);
    return protoselect::make_matrix_instance(targets, sources, std::move(m), random_weights(rng, targets), k,
                                             memoize);
}

// Points on a line, S = T, normalized by the range.
inline ProblemInstance line(std::vector<double> xs, std::size_t k) {
    protoselect::PointSet p(xs.size(), 1, xs);
    return protoselect::make_euclidean_instance(p, p, k);
}

}  // namespace oracle
