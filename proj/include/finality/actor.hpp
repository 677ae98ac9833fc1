#pragma once

// On-chain (actor) view. A contract only sees its own chain, so every block
// produced in a window but absent from the chain is assumed to help the
// adversary. For a window of `window_rounds` rounds holding `chain_blocks`
// observed blocks:
//   T        total production, Poisson(window_rounds * e), conditioned on
//            T >= chain_blocks
//   Z        T - chain_blocks, blocks missing from the chain
//   X_f | T  Binomial(T, f), malicious blocks
//   BpZ      X_f + Z, an adversary-favoring bound that may count a block
//            twice
// BpZ replaces the Poisson laws of the node view for the lead and recent
// spans; the future span and the error combination are unchanged.

#include <algorithm>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <utility>
#include <vector>

#include "finality/chain.hpp"
#include "finality/errors.hpp"
#include "finality/node.hpp"
#include "finality/pmf.hpp"
#include "finality/report.hpp"

namespace finality {

struct BpzContext {
  std::int64_t window_rounds = 1;
  std::int64_t chain_blocks = 0;
  NetworkParams params;

  void validate() const {
    params.validate();
    if (window_rounds < 1) throw DomainError("BpzContext: window_rounds must be >= 1");
    if (chain_blocks < 0) throw DomainError("BpzContext: chain_blocks must be >= 0");
  }

  double total_rate() const noexcept { return static_cast<double>(window_rounds) * params.blocks_per_round; }
};

/// P(T = t | T >= chain_blocks) on support starting at chain_blocks.
inline Pmf conditional_total_pmf(const BpzContext& ctx, const TruncationConfig& trunc) {
  ctx.validate();
  trunc.validate();
  const double rate = ctx.total_rate();
  const double condition = poisson_tail(ctx.chain_blocks, rate);
  if (condition < trunc.early_stop_floor) {
    throw DegenerateConditionError("trace inconsistent with configured blocks per round: " +
                                   std::to_string(ctx.chain_blocks) + " blocks in " +
                                   std::to_string(ctx.window_rounds) + " rounds");
  }
  std::vector<double> mass;
  for (std::int64_t z = 0; z <= trunc.max_k_lb; ++z) {
    const std::int64_t t = ctx.chain_blocks + z;
    const double p = poisson_pmf(t, rate) / condition;
    if (static_cast<double>(t) > rate && p < trunc.early_stop_floor) break;
    mass.push_back(std::min(p, 1.0));
  }
  return Pmf(ctx.chain_blocks, std::move(mass));
}

/// P(BpZ = k | chain) = sum_z P(T = z + chain | T >= chain) *
///                      P(X_f = k - z | T = z + chain), on [0, max_k_lb].
inline Pmf bpz_pmf(const BpzContext& ctx, const TruncationConfig& trunc) {
  const Pmf total = conditional_total_pmf(ctx, trunc);
  const double f = ctx.params.byzantine_fraction;
  const double floor = trunc.early_stop_floor;
  std::vector<double> mass(static_cast<std::size_t>(trunc.max_k_lb) + 1, 0.0);
  double mean = 0.0;
  for (std::int64_t z = 0; z < static_cast<std::int64_t>(total.size()); ++z) {
    const std::int64_t t = ctx.chain_blocks + z;
    const double pt = total[t];
    mean += pt * (static_cast<double>(z) + f * static_cast<double>(t));
    const std::int64_t b_hi = std::min(t, trunc.max_k_lb - z);
    for (std::int64_t b = 0; b <= b_hi; ++b) {
      const double pb = binomial_pmf(b, t, f);
      if (static_cast<double>(b) > f * static_cast<double>(t) && pb < floor) break;
      mass[static_cast<std::size_t>(z + b)] += pt * pb;
    }
  }
  std::size_t keep = 0;
  while (keep < mass.size() && !(static_cast<double>(keep) > mean && mass[keep] < floor)) ++keep;
  mass.resize(keep);
  for (double& m : mass) m = std::min(m, 1.0);
  return Pmf(0, std::move(mass));
}

/// Thread-safe memo of BpZ pmfs keyed by (window_rounds, chain_blocks) for a
/// fixed parameter set.
class BpzCache {
 public:
  struct Entry {
    Pmf pmf;
    double mean = 0.0;
  };

  BpzCache(NetworkParams params, TruncationConfig trunc) : params_(params), trunc_(trunc) {}

  std::shared_ptr<const Entry> get(std::int64_t window_rounds, std::int64_t chain_blocks) const {
    const Key key{window_rounds, chain_blocks};
    {
      std::lock_guard lock(mutex_);
      if (auto it = entries_.find(key); it != entries_.end()) return it->second;
    }
    auto entry = std::make_shared<Entry>();
    entry->pmf = bpz_pmf(BpzContext{window_rounds, chain_blocks, params_}, trunc_);
    for (std::int64_t k = entry->pmf.first(); k <= entry->pmf.last(); ++k) {
      entry->mean += static_cast<double>(k) * entry->pmf[k];
    }
    std::lock_guard lock(mutex_);
    return entries_.try_emplace(key, std::move(entry)).first->second;
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  using Key = std::pair<std::int64_t, std::int64_t>;
  NetworkParams params_;
  TruncationConfig trunc_;
  mutable std::mutex mutex_;
  mutable std::map<Key, std::shared_ptr<const Entry>> entries_;
};

namespace detail {

/// Envelope over windows [s - i, s], i in [0, depth], of
/// P(BpZ_i = k + chain[s - i, s]). Unnormalized.
inline Pmf actor_lead_envelope(const ChainTrace& trace, Round s, const BpzCache& cache, const NetworkParams& params,
                               const TruncationConfig& trunc) {
  const std::int64_t depth = lead_depth(params, trunc);
  const auto sums = lead_window_sums(trace, s, depth);
  std::vector<std::shared_ptr<const BpzCache::Entry>> windows;
  windows.reserve(sums.size());
  for (std::size_t i = 0; i < sums.size(); ++i) windows.push_back(cache.get(static_cast<std::int64_t>(i) + 1, sums[i]));

  std::vector<double> mass;
  for (std::int64_t k = 0; k <= trunc.max_k_lb; ++k) {
    double best = 0.0;
    bool all_past_mean = true;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      const std::int64_t needed = k + sums[i];
      best = std::max(best, windows[i]->pmf[needed]);
      all_past_mean = all_past_mean && static_cast<double>(needed) > windows[i]->mean;
    }
    if (best < trunc.early_stop_floor && all_past_mean) break;
    mass.push_back(best);
  }
  return Pmf(0, std::move(mass));
}

}  // namespace detail

/// Actor-view calculator. Holds the future distribution and a BpZ cache, so
/// one instance should be reused across the rounds of a trace.
class ActorCalculator {
 public:
  ActorCalculator(NetworkParams params, TruncationConfig trunc)
      : params_(params), trunc_(trunc), future_(future_distribution(params, trunc)), cache_(params, trunc) {}

  const NetworkParams& params() const noexcept { return params_; }
  const TruncationConfig& truncation() const noexcept { return trunc_; }
  const Pmf& future() const noexcept { return future_; }
  const BpzCache& cache() const noexcept { return cache_; }

  Pmf lead_envelope(const ChainTrace& trace, Round s) const {
    return detail::actor_lead_envelope(trace, s, cache_, params_, trunc_);
  }

  Pmf lead(const ChainTrace& trace, Round s) const { return with_residual_at_zero(lead_envelope(trace, s)); }

  /// BpZ over the window (s, c] with the chain blocks observed there.
  Pmf recent(const ChainTrace& trace, Round s, Round c) const {
    const std::int64_t chain = good_advantage(trace, s, c);
    return cache_.get(c - s, chain)->pmf;
  }

  SpanDistributions spans(const ChainTrace& trace, Round s, Round c) const {
    return {lead(trace, s), recent(trace, s, c), future_};
  }

  double error_probability(const ChainTrace& trace, Round s, Round c) const {
    const std::int64_t k = good_advantage(trace, s, c);
    const auto recent_span = cache_.get(c - s, k);
    return reported_probability(combine_error(lead(trace, s), recent_span->pmf, future_, k), trunc_.early_stop_floor);
  }

  FinalityReport report(const ChainTrace& trace, std::int64_t settlement, unsigned workers = 0) const {
    const RoundRange range = report_rounds(trace, settlement, lead_depth(params_, trunc_));
    FinalityReport out;
    out.entries.resize(range.count());
    parallel_for(
        range.count(),
        [&](std::size_t i) {
          const Round c = range.first_current + static_cast<Round>(i);
          const Round s = c - settlement;
          out.entries[i] = {s, c, good_advantage(trace, s, c), error_probability(trace, s, c), View::actor};
        },
        workers);
    return out;
  }

 private:
  NetworkParams params_;
  TruncationConfig trunc_;
  Pmf future_;
  BpzCache cache_;
};

inline Pmf actor_lead_distribution(const ChainTrace& trace, Round s, const NetworkParams& params,
                                   const TruncationConfig& trunc) {
  params.validate();
  trunc.validate();
  const BpzCache cache(params, trunc);
  return with_residual_at_zero(detail::actor_lead_envelope(trace, s, cache, params, trunc));
}

inline Pmf actor_recent_distribution(const ChainTrace& trace, Round s, Round c, const NetworkParams& params,
                                     const TruncationConfig& trunc) {
  if (c <= s) throw RangeError("actor_recent_distribution: current round must be after target round");
  return bpz_pmf(BpzContext{c - s, good_advantage(trace, s, c), params}, trunc);
}

inline double actor_error_probability(const ChainTrace& trace, Round s, Round c, const NetworkParams& params,
                                      const TruncationConfig& trunc) {
  return ActorCalculator(params, trunc).error_probability(trace, s, c);
}

inline FinalityReport actor_report(const ChainTrace& trace, std::int64_t settlement, const NetworkParams& params,
                                   const TruncationConfig& trunc, unsigned workers = 0) {
  return ActorCalculator(params, trunc).report(trace, settlement, workers);
}

}  // namespace finality
