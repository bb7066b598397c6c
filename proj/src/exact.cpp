#include "protoselect/exact.hpp"

#include "protoselect/error.hpp"
#include "protoselect/random.hpp"

#include <algorithm>
#include <string>
#include <utility>

namespace protoselect {

PrototypeState PrototypeState::empty(std::size_t targets) {
    PrototypeState s;
    s.nearest_dist.assign(targets, 1.0);
    s.second_dist.assign(targets, 1.0);
    s.nearest_idx.assign(targets, kNoPrototype);
    return s;
}

bool PrototypeState::contains(std::size_t i) const noexcept {
    return std::find(chosen.begin(), chosen.end(), i) != chosen.end();
}

void PrototypeState::add(std::size_t i, std::span<const double> column) {
    chosen.push_back(i);
    for (std::size_t j = 0; j < column.size(); ++j) {
        const double d = column[j];
        if (nearest_idx[j] == kNoPrototype) {
            nearest_dist[j] = d;
            nearest_idx[j] = i;
        } else if (d < nearest_dist[j]) {
            second_dist[j] = nearest_dist[j];
            nearest_dist[j] = d;
            nearest_idx[j] = i;
        } else if (d < second_dist[j]) {
            second_dist[j] = d;
        }
    }
}

PrototypeState recompute_state(const ProblemInstance& instance, std::span<const std::size_t> chosen) {
    const std::size_t targets = instance.target_size();
    auto state = PrototypeState::empty(targets);
    std::vector<double> column(targets);
    for (std::size_t i : chosen) {
        for (std::size_t j = 0; j < targets; ++j) column[j] = instance.dissimilarity->peek(j, i);
        state.add(i, column);
    }
    return state;
}

double weighted_nearest_distance(const TargetWeights& weights, const PrototypeState& state) {
    double total = 0.0;
    for (std::size_t j = 0; j < weights.size(); ++j) total += weights[j] * state.nearest_dist[j];
    return total;
}

namespace {

double gain_from_column(const TargetWeights& weights, const PrototypeState& state,
                        std::span<const double> column) {
    double g = 0.0;
    for (std::size_t j = 0; j < column.size(); ++j) {
        g += weights[j] * std::max(state.nearest_dist[j] - column[j], 0.0);
    }
    return g;
}

void check_batch_size(const ProblemInstance& instance, std::size_t r) {
    validate(instance);
    if (r < 1 || r > instance.k) {
        throw ParameterError("batch size r = " + std::to_string(r) + " must lie in [1, k]");
    }
}

struct Selected {
    std::size_t index;
    std::vector<double> column;
};

// One greedy batch shared by BUILD and SPOTgreedy. Scores every candidate in
// S \ M with `score(column)`, keeps the top `need` strictly positive scores
// (ties to the lower index) and fills any shortfall from a uniformly drawn
// fallback list. The fallback is drawn before scoring so that the columns of
// possible picks can be retained during the single scan.
template <typename Score>
std::vector<Selected> greedy_batch(const ProblemInstance& instance, const PrototypeState& state,
                                   std::size_t r, Rng& rng, Score&& score) {
    const std::size_t sources = instance.source_size();
    const std::size_t targets = instance.target_size();

    std::vector<char> taken(sources, 0);
    for (std::size_t i : state.chosen) taken[i] = 1;
    std::vector<std::size_t> remaining;
    remaining.reserve(sources - state.size());
    for (std::size_t i = 0; i < sources; ++i) {
        if (!taken[i]) remaining.push_back(i);
    }
    const std::size_t need = std::min({r, instance.k - state.size(), remaining.size()});

    std::vector<std::size_t> fallback = remaining;
    for (std::size_t t = 0; t < need; ++t) {
        std::uniform_int_distribution<std::size_t> pick(t, fallback.size() - 1);
        std::swap(fallback[t], fallback[pick(rng)]);
    }
    fallback.resize(need);
    std::vector<std::vector<double>> fallback_columns(need);
    std::vector<std::ptrdiff_t> fallback_slot(sources, -1);
    for (std::size_t t = 0; t < need; ++t) fallback_slot[fallback[t]] = static_cast<std::ptrdiff_t>(t);

    struct Ranked {
        double score;
        std::size_t index;
        std::vector<double> column;
    };
    std::vector<Ranked> top;  // sorted by score descending, index ascending
    std::vector<double> column(targets);

    for (std::size_t c : remaining) {
        instance.dissimilarity->column(c, column);
        const double s = score(std::span<const double>(column));
        if (fallback_slot[c] >= 0) fallback_columns[static_cast<std::size_t>(fallback_slot[c])] = column;
        if (!(s > 0.0)) continue;
        // Candidates arrive in ascending index order, so an equal score never displaces.
        if (top.size() == need && !(s > top.back().score)) continue;
        auto pos = std::find_if(top.begin(), top.end(), [s](const Ranked& x) { return s > x.score; });
        top.insert(pos, Ranked{s, c, column});
        if (top.size() > need) top.pop_back();
    }

    std::vector<Selected> out;
    out.reserve(need);
    for (auto& t : top) out.push_back({t.index, std::move(t.column)});
    for (std::size_t t = 0; t < need && out.size() < need; ++t) {
        const std::size_t c = fallback[t];
        const bool already = std::any_of(out.begin(), out.end(), [c](const Selected& s) { return s.index == c; });
        if (!already) out.push_back({c, std::move(fallback_columns[t])});
    }
    return out;
}

}  // namespace

double gain(const ProblemInstance& instance, const PrototypeState& state, std::size_t i) {
    if (i >= instance.source_size()) throw BoundsError("source index out of range");
    if (state.contains(i)) {
        throw PreconditionError("gain requested for already chosen source " + std::to_string(i));
    }
    std::vector<double> column(instance.target_size());
    instance.dissimilarity->column(i, column);
    return gain_from_column(instance.weights, state, column);
}

PrototypeState build(const ProblemInstance& instance, std::size_t r, std::uint64_t rng_seed,
                     const StepObserver& observer) {
    check_batch_size(instance, r);
    Rng rng(rng_seed);
    auto state = PrototypeState::empty(instance.target_size());
    while (state.size() < instance.k) {
        auto batch = greedy_batch(instance, state, r, rng, [&](std::span<const double> column) {
            return gain_from_column(instance.weights, state, column);
        });
        for (const auto& s : batch) state.add(s.index, s.column);
        if (observer) observer(state);
    }
    return state;
}

PrototypeState spot_greedy(const ProblemInstance& instance, std::size_t r, std::uint64_t rng_seed,
                           const StepObserver& observer) {
    check_batch_size(instance, r);
    Rng rng(rng_seed);
    const std::size_t targets = instance.target_size();
    const auto& q = instance.weights;

    auto state = PrototypeState::empty(targets);
    // max_{i in M} Z_ji with Z = 1 - d; zero for the empty set so that f(empty) = 0.
    std::vector<double> best_similarity(targets, 0.0);

    while (state.size() < instance.k) {
        double f_current = 0.0;
        for (std::size_t j = 0; j < targets; ++j) f_current += q[j] * best_similarity[j];

        auto batch = greedy_batch(instance, state, r, rng, [&](std::span<const double> column) {
            double f_with = 0.0;
            for (std::size_t j = 0; j < targets; ++j) {
                f_with += q[j] * std::max(best_similarity[j], 1.0 - column[j]);
            }
            return f_with - f_current;
        });
        for (const auto& s : batch) {
            state.add(s.index, s.column);
            for (std::size_t j = 0; j < targets; ++j) {
                best_similarity[j] = std::max(best_similarity[j], 1.0 - s.column[j]);
            }
        }
        if (observer) observer(state);
    }
    return state;
}

namespace {

PrototypeState rebuild_counted(const ProblemInstance& instance, const std::vector<std::size_t>& chosen) {
    const std::size_t targets = instance.target_size();
    auto state = PrototypeState::empty(targets);
    std::vector<double> column(targets);
    for (std::size_t i : chosen) {
        instance.dissimilarity->column(i, column);
        state.add(i, column);
    }
    return state;
}

}  // namespace

SwapResult swap(const ProblemInstance& instance, const PrototypeState& state, std::size_t l) {
    validate(instance);
    if (state.size() != instance.k) {
        throw PreconditionError("swap needs exactly k chosen prototypes, have " + std::to_string(state.size()));
    }
    if (l < 1 || l > instance.k) throw ParameterError("swap count l must lie in [1, k]");

    const std::size_t sources = instance.source_size();
    const std::size_t targets = instance.target_size();
    const auto& q = instance.weights;
    const std::size_t k = state.size();

    std::vector<std::size_t> position(sources, kNoPrototype);
    for (std::size_t p = 0; p < k; ++p) position[state.chosen[p]] = p;
    std::vector<std::size_t> owner(targets);
    for (std::size_t j = 0; j < targets; ++j) owner[j] = position[state.nearest_idx[j]];

    struct Pair {
        double change;
        std::size_t out;  // prototype i leaving
        std::size_t in;   // candidate h entering
    };
    std::vector<Pair> best_per_candidate;
    std::vector<double> column(targets);
    std::vector<double> correction(k);

    for (std::size_t h = 0; h < sources; ++h) {
        if (position[h] != kNoPrototype) continue;
        instance.dissimilarity->column(h, column);
        // T_ih = sum_j q_j K_jih. For targets not served by i, K = min{d(j,h) - D_j, 0};
        // for targets served by i, K = min{d(j,h), E_j} - D_j. The shared first part
        // is accumulated once and the per-i difference added on top.
        double shared = 0.0;
        std::fill(correction.begin(), correction.end(), 0.0);
        for (std::size_t j = 0; j < targets; ++j) {
            const double D = state.nearest_dist[j];
            const double stay = std::min(column[j] - D, 0.0);
            const double moved = std::min(column[j], state.second_dist[j]) - D;
            shared += q[j] * stay;
            correction[owner[j]] += q[j] * (moved - stay);
        }
        Pair best{0.0, kNoPrototype, h};
        for (std::size_t p = 0; p < k; ++p) {
            const double t = shared + correction[p];
            const std::size_t i = state.chosen[p];
            if (best.out == kNoPrototype || t < best.change || (t == best.change && i < best.out)) {
                best.change = t;
                best.out = i;
            }
        }
        best_per_candidate.push_back(best);
    }

    SwapResult result{state, true, 0, 0.0};
    if (best_per_candidate.empty()) return result;

    std::sort(best_per_candidate.begin(), best_per_candidate.end(), [](const Pair& a, const Pair& b) {
        return a.change != b.change ? a.change < b.change : a.in < b.in;
    });
    result.best_change = best_per_candidate.front().change;
    if (!(result.best_change < 0.0)) return result;

    auto apply = [&](std::size_t limit) {
        std::vector<std::size_t> chosen = state.chosen;
        std::vector<char> swapped_out(sources, 0);
        std::size_t applied = 0;
        for (const auto& pair : best_per_candidate) {
            if (applied == limit || !(pair.change < 0.0)) break;
            if (swapped_out[pair.out]) continue;
            chosen[position[pair.out]] = pair.in;
            swapped_out[pair.out] = 1;
            ++applied;
        }
        return std::make_pair(rebuild_counted(instance, chosen), applied);
    };

    auto [next, applied] = apply(l);
    // Swaps evaluated against the same starting state can interact; if the joint
    // result is worse than where we started, fall back to the single best swap.
    if (applied > 1 && weighted_nearest_distance(q, next) > weighted_nearest_distance(q, state)) {
        std::tie(next, applied) = apply(1);
    }
    result.state = std::move(next);
    result.converged = false;
    result.swaps_applied = applied;
    return result;
}

PamResult pam(const ProblemInstance& instance, std::size_t r, std::size_t l, std::uint64_t rng_seed,
              std::size_t max_swap_passes) {
    PamResult result{build(instance, r, rng_seed), 0, false};
    while (result.swap_passes < max_swap_passes) {
        auto pass = swap(instance, result.state, l);
        if (pass.converged) {
            result.converged = true;
            break;
        }
        result.state = std::move(pass.state);
        ++result.swap_passes;
    }
    return result;
}

}  // namespace protoselect
