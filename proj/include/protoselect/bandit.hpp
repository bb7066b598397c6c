#pragma once

#include "protoselect/exact.hpp"
#include "protoselect/instance.hpp"
#include "protoselect/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace protoselect {

/// Draws target indices j ~ q by inverting the cumulative distribution.
class TargetSampler {
  public:
    explicit TargetSampler(const TargetWeights& weights);
    std::size_t sample(Rng& rng) const;

  private:
    std::vector<double> cdf_;
};

/// One stochastic reward for candidate i: max{D_j - d(j,i), 0} for j ~ q.
/// Its expectation is gain(instance, state, i). Costs one query; D_j comes from
/// the state.
double pull(const ProblemInstance& instance, const PrototypeState& state, const TargetSampler& sampler,
            std::size_t i, Rng& rng);

struct ArmStats {
    std::uint64_t pulls = 0;
    double reward_sum = 0.0;

    void record(double reward) {
        ++pulls;
        reward_sum += reward;
    }
    double mean() const { return reward_sum / static_cast<double>(pulls); }
};

/// Reward source keyed by arm id. Must return values in [0,1].
using RewardOracle = std::function<double(std::size_t arm, Rng& rng)>;

struct BaiProblem {
    std::vector<std::size_t> arms;  // distinct arm ids; ties resolve toward earlier entries
    double tolerance = 0.1;         // nu_0
    double error_prob = 0.05;       // delta'
    RewardOracle reward;
};

struct BaiResult {
    std::size_t arm = 0;
    std::uint64_t pulls = 0;
};

enum class BaiStrategy { aba, naive, kl_lucb, kl_lucb_early };

std::string_view to_string(BaiStrategy s) noexcept;
BaiStrategy parse_bai_strategy(std::string_view name);

/// Per-arm sample count of naive elimination: ceil((2/nu^2) ln(2n/delta)).
std::uint64_t naive_pulls_per_arm(std::size_t arms, double tolerance, double error_prob);

/// Total-sample cap for ABA: ceil(18 n / nu^2 * ln(1/delta)).
std::uint64_t aba_pull_cap(std::size_t arms, double tolerance, double error_prob);

/// Pull every arm the Hoeffding-sufficient number of times; return the best mean.
BaiResult naive_elimination(const BaiProblem& problem, Rng& rng);

/// Aggressive halving down to about n^{3/4}/2 survivors, then naive elimination
/// on the survivors, under the hard cap aba_pull_cap().
BaiResult aba(const BaiProblem& problem, Rng& rng);

/// KL-LUCB. With `early_stop`, also stops once the leader's mean beats the
/// challenger's by the tolerance and both have at least ceil(1/nu) samples.
BaiResult kl_lucb(const BaiProblem& problem, Rng& rng, bool early_stop,
                  std::optional<std::uint64_t> max_pulls = std::nullopt);

BaiResult run_bai(BaiStrategy strategy, const BaiProblem& problem, Rng& rng);

/// Bernoulli KL divergence kl(p, q) with the 0 log 0 = 0 convention.
double bernoulli_kl(double p, double q);

}  // namespace protoselect
