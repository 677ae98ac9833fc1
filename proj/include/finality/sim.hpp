#pragma once

// Synthetic chain traces: i.i.d. Poisson(fullness * e) block counts per round.

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

#include "finality/chain.hpp"
#include "finality/errors.hpp"
#include "finality/pmf.hpp"

namespace finality {

struct SimConfig {
  double fullness = 1.0;  // observed mean tipset size over the target e
  std::int64_t rounds = 40000;
  std::uint64_t seed = 0;
  double blocks_per_round = 5.0;
  Round start_round = 0;

  void validate() const {
    if (!(fullness >= 0.0 && fullness <= 1.2)) throw DomainError("fullness must lie in [0, 1.2]");
    if (rounds < 1) throw DomainError("rounds must be >= 1");
    if (!(blocks_per_round > 0.0)) throw DomainError("blocks_per_round must be positive");
  }
};

/// Uniform double in [0, 1) from the top 53 bits of one generator output.
inline double unit_uniform(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

/// Poisson sampler by inversion against a precomputed CDF table, so a given
/// generator state yields the same draw on every platform.
class PoissonSampler {
 public:
  explicit PoissonSampler(double rate) {
    if (!(rate >= 0.0)) throw DomainError("PoissonSampler: negative rate");
    const std::int64_t cap = poisson_support_cap(rate);
    double acc = 0.0;
    for (std::int64_t k = 0; k <= cap; ++k) {
      acc += poisson_pmf(k, rate);
      cdf_.push_back(acc);
      if (static_cast<double>(k) > rate && 1.0 - acc < 1e-17) break;
    }
  }

  std::int64_t operator()(std::mt19937_64& gen) const {
    const double u = unit_uniform(gen);
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return static_cast<std::int64_t>(it - cdf_.begin());
  }

 private:
  std::vector<double> cdf_;
};

inline ChainTrace generate_trace(const SimConfig& config) {
  config.validate();
  std::mt19937_64 gen(config.seed);
  const PoissonSampler sample(config.fullness * config.blocks_per_round);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(config.rounds));
  for (auto& c : counts) c = sample(gen);
  return ChainTrace(config.start_round, std::move(counts));
}

/// Copy of `base` with rounds [first, first + replacement.size()) replaced.
inline ChainTrace splice_trace(const ChainTrace& base, Round first, const std::vector<std::int64_t>& replacement) {
  std::vector<std::int64_t> counts = base.counts();
  for (std::size_t i = 0; i < replacement.size(); ++i) {
    const Round r = first + static_cast<Round>(i);
    if (!base.contains(r)) throw RangeError("splice_trace: segment exceeds trace");
    counts[static_cast<std::size_t>(r - base.start_round())] = replacement[i];
  }
  return ChainTrace(base.start_round(), std::move(counts));
}

}  // namespace finality
