#pragma once

#include "protoselect/instance.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

namespace protoselect {

inline constexpr std::size_t kNoPrototype = std::numeric_limits<std::size_t>::max();

/// Chosen prototypes plus, per target, the distance to the nearest (D_j) and
/// second-nearest (E_j) chosen prototype.
///
/// Conventions: D_j = 1 while nothing is chosen and E_j = 1 while fewer than two
/// prototypes are chosen. Both are exact upper bounds because d <= 1, so gains
/// computed from them agree with the marginal gains of the similarity objective.
struct PrototypeState {
    std::vector<std::size_t> chosen;
    std::vector<double> nearest_dist;
    std::vector<double> second_dist;
    std::vector<std::size_t> nearest_idx;

    static PrototypeState empty(std::size_t targets);

    std::size_t size() const noexcept { return chosen.size(); }
    bool contains(std::size_t i) const noexcept;

    /// Appends source `i` given its column d(., i). Ties with the current nearest
    /// keep the earlier prototype as nearest.
    void add(std::size_t i, std::span<const double> column);
};

/// Rebuilds the state for `chosen` (in order) using uncounted evaluations.
PrototypeState recompute_state(const ProblemInstance& instance, std::span<const std::size_t> chosen);

/// Sum_j q_j D_j.
double weighted_nearest_distance(const TargetWeights& weights, const PrototypeState& state);

/// Sum_j q_j max{D_j - d(j,i), 0}; costs |T| queries.
double gain(const ProblemInstance& instance, const PrototypeState& state, std::size_t i);

using StepObserver = std::function<void(const PrototypeState&)>;

/// Generalized PAM BUILD with batch size r. The observer, if set, runs after each batch.
PrototypeState build(const ProblemInstance& instance, std::size_t r, std::uint64_t rng_seed,
                     const StepObserver& observer = {});

/// SPOTgreedy: greedy on the marginal gains f(M + i) - f(M) of the similarity
/// objective. Same selection and tie-breaking rules, and the same random stream,
/// as build().
PrototypeState spot_greedy(const ProblemInstance& instance, std::size_t r, std::uint64_t rng_seed,
                           const StepObserver& observer = {});

struct SwapResult {
    PrototypeState state;
    bool converged = false;
    std::size_t swaps_applied = 0;
    double best_change = 0.0;  // most negative T_ih seen in the pass
};

/// One SWAP pass exchanging up to l (prototype, non-prototype) pairs. T_ih is the
/// exact change of Sum_j q_j D_j when i is replaced by h.
SwapResult swap(const ProblemInstance& instance, const PrototypeState& state, std::size_t l);

struct PamResult {
    PrototypeState state;
    std::size_t swap_passes = 0;
    bool converged = false;
};

/// BUILD followed by SWAP passes until convergence or `max_swap_passes`.
PamResult pam(const ProblemInstance& instance, std::size_t r, std::size_t l, std::uint64_t rng_seed,
              std::size_t max_swap_passes = 100);

}  // namespace protoselect
