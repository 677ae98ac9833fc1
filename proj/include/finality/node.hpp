#pragma once

// Node-view error bound. A full node sees every chain that ends in an honest
// block, so the adversary's best move is a private extension of the
// empty competitor. The bound splits the attack into three spans around the
// target round s and current round c:
//   lead   L  adversarial lead already built at s
//   recent B  adversarial blocks produced in (s, c]
//   future M  adversarial growth minus slowed honest growth after c
// and combines them against the good advantage k of the observed chain:
//   P(err) = P(L >= k) + sum_{l<k} P(L=l) [P(B >= k-l)
//                        + sum_{b<k-l} P(B=b) P(M >= k-l-b)].

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "finality/chain.hpp"
#include "finality/errors.hpp"
#include "finality/pmf.hpp"
#include "finality/report.hpp"

namespace finality {

struct SpanDistributions {
  Pmf lead;
  Pmf recent;
  Pmf future;
};

/// Tops up an envelope on [0, ...] so that it carries at least unit mass,
/// putting the deficit on zero. A lead is never negative, so the mass the
/// envelope does not assign to a positive lead belongs to "no lead".
inline Pmf with_residual_at_zero(const Pmf& envelope) {
  if (envelope.empty()) return Pmf::point_mass(0);
  if (envelope.first() != 0) throw DomainError("with_residual_at_zero: envelope must start at 0");
  std::vector<double> mass(envelope.mass().begin(), envelope.mass().end());
  const double deficit = 1.0 - envelope.total();
  if (deficit > 0.0) mass[0] = std::min(1.0, mass[0] + deficit);
  return Pmf(0, std::move(mass));
}

namespace detail {

/// Block counts of the lead windows [s - i, s], i = 0 .. depth.
inline std::vector<std::int64_t> lead_window_sums(const ChainTrace& trace, Round s, std::int64_t depth) {
  if (!trace.contains(s) || !trace.contains(s - depth)) {
    throw RangeError("lead window [" + std::to_string(s - depth) + ", " + std::to_string(s) + "] outside trace [" +
                     std::to_string(trace.start_round()) + ", " + std::to_string(trace.end_round()) + "]");
  }
  std::vector<std::int64_t> sums(static_cast<std::size_t>(depth) + 1);
  std::int64_t acc = 0;
  for (std::int64_t i = 0; i <= depth; ++i) {
    acc += trace.at(s - i);
    sums[static_cast<std::size_t>(i)] = acc;
  }
  return sums;
}

/// Suffix sums: tails[q] = P(X >= q) for q in [0, last + 1]; support must
/// start at or above zero.
inline std::vector<double> tail_table(const Pmf& p) {
  const std::int64_t top = std::max<std::int64_t>(p.last() + 1, 0);
  std::vector<double> tails(static_cast<std::size_t>(top) + 1, 0.0);
  for (std::int64_t q = top - 1; q >= 0; --q) tails[static_cast<std::size_t>(q)] = tails[static_cast<std::size_t>(q) + 1] + p[q];
  for (double& t : tails) t = std::min(t, 1.0);
  return tails;
}

inline double tail_lookup(const std::vector<double>& tails, std::int64_t q) {
  if (q <= 0) return tails.front();
  return q < static_cast<std::int64_t>(tails.size()) ? tails[static_cast<std::size_t>(q)] : 0.0;
}

}  // namespace detail

/// Pointwise maximum, over attack windows [s - i, s] with i in [0, depth],
/// of the probability that an adversary producing Poisson((i+1) f e) blocks
/// beats the observed chain over that window by exactly k. The window of
/// round s alone (i = 0) is included. Unnormalized.
inline Pmf lead_envelope(const ChainTrace& trace, Round s, const NetworkParams& params, const TruncationConfig& trunc) {
  params.validate();
  trunc.validate();
  const std::int64_t depth = lead_depth(params, trunc);
  const auto sums = detail::lead_window_sums(trace, s, depth);
  std::vector<double> rates(sums.size());
  for (std::size_t i = 0; i < rates.size(); ++i) rates[i] = static_cast<double>(i + 1) * params.adversary_rate();

  std::vector<double> mass;
  for (std::int64_t k = 0; k <= trunc.max_k_lb; ++k) {
    double best = 0.0;
    bool all_past_mode = true;
    for (std::size_t i = 0; i < sums.size(); ++i) {
      const std::int64_t needed = k + sums[i];
      best = std::max(best, poisson_pmf(needed, rates[i]));
      all_past_mode = all_past_mode && static_cast<double>(needed) >= rates[i];
    }
    if (best < trunc.early_stop_floor && all_past_mode) break;
    mass.push_back(best);
  }
  return Pmf(0, std::move(mass));
}

/// Lead law consumed by the error combination: the envelope with the
/// residual mass placed on a zero lead.
inline Pmf lead_distribution(const ChainTrace& trace, Round s, const NetworkParams& params,
                             const TruncationConfig& trunc) {
  return with_residual_at_zero(lead_envelope(trace, s, params, trunc));
}

/// Poisson((c - s) f e): adversarial blocks produced in (s, c].
inline Pmf recent_distribution(Round s, Round c, const NetworkParams& params, const TruncationConfig& trunc) {
  params.validate();
  trunc.validate();
  if (c <= s) throw RangeError("recent_distribution: current round must be after target round");
  return poisson_distribution(static_cast<double>(c - s) * params.adversary_rate(), trunc.max_k_lb,
                              trunc.early_stop_floor);
}

/// Expected per-round growth of the public chain when the adversary uses
/// its previous-round blocks B to split honest production H into 2^B
/// fragments: Pr(H > 0) * E[(H + B) / 2^B], H ~ Poisson((1-f)e),
/// B ~ Poisson(fe). Accepts f = 1 (no honest growth).
inline double expected_slowed_growth(const NetworkParams& params, double floor = 1e-25) {
  const double e = params.blocks_per_round;
  const double f = params.byzantine_fraction;
  if (!(e > 0.0) || !(f >= 0.0 && f <= 1.0)) throw DomainError("expected_slowed_growth: invalid parameters");
  const double honest = (1.0 - f) * e;
  const double adversary = f * e;
  if (honest == 0.0) return 0.0;
  const Pmf h = poisson_distribution(honest, poisson_support_cap(honest), floor);
  const Pmf b = poisson_distribution(adversary, poisson_support_cap(adversary), floor);
  double expectation = 0.0;
  for (std::int64_t bi = b.last(); bi >= 0; --bi) {
    const double split = std::ldexp(1.0, -static_cast<int>(bi));
    double inner = 0.0;
    for (std::int64_t hi = h.last(); hi >= 0; --hi) inner += h[hi] * static_cast<double>(hi + bi);
    expectation += b[bi] * inner * split;
  }
  return -std::expm1(-honest) * expectation;
}

/// Envelope over horizons n in [1, max_i_m] of Skellam(n f e, n E[Z]) on
/// k in [0, max_k_m]. Negative support is dropped since only tails at
/// k >= 1 are consumed.
inline Pmf future_distribution(const NetworkParams& params, const TruncationConfig& trunc) {
  params.validate();
  trunc.validate();
  const double growth = expected_slowed_growth(params, trunc.early_stop_floor);
  const double adversary = params.adversary_rate();

  std::vector<double> mass(static_cast<std::size_t>(trunc.max_k_m) + 1, 0.0);
  double furthest_mean = 0.0;
  for (std::int64_t n = 1; n <= trunc.max_i_m; ++n) {
    const double nd = static_cast<double>(n);
    const Pmf skellam = skellam_distribution(nd * adversary, nd * growth, trunc.early_stop_floor);
    for (std::int64_t k = 0; k <= trunc.max_k_m; ++k) {
      double& slot = mass[static_cast<std::size_t>(k)];
      slot = std::max(slot, skellam[k]);
    }
    furthest_mean = std::max(furthest_mean, nd * (adversary - growth));
  }
  std::size_t keep = 0;
  while (keep < mass.size() &&
         !(mass[keep] < trunc.early_stop_floor && static_cast<double>(keep) > furthest_mean)) {
    ++keep;
  }
  mass.resize(keep);
  return Pmf(0, std::move(mass));
}

/// Probability of a safety violation against good advantage k, given the
/// three span distributions. Not clamped to the floor; clamped to [0, 1].
inline double combine_error(const Pmf& lead, const Pmf& recent, const Pmf& future, std::int64_t k) {
  if (lead.first() < 0 || recent.first() < 0) throw DomainError("combine_error: lead and recent must be non-negative");
  const auto recent_tails = detail::tail_table(recent);
  const auto future_tails = detail::tail_table(future);
  double error = tail_from(lead, k);
  const std::int64_t l_hi = std::min(k - 1, lead.last());
  for (std::int64_t l = std::max<std::int64_t>(0, lead.first()); l <= l_hi; ++l) {
    const double pl = lead[l];
    if (pl == 0.0) continue;
    const std::int64_t gap = k - l;
    double inner = detail::tail_lookup(recent_tails, gap);
    const std::int64_t b_lo = std::max<std::int64_t>(0, gap - future.last());
    const std::int64_t b_hi = std::min(gap - 1, recent.last());
    for (std::int64_t b = b_lo; b <= b_hi; ++b) inner += recent[b] * detail::tail_lookup(future_tails, gap - b);
    error += pl * inner;
  }
  return std::clamp(error, 0.0, 1.0);
}

/// Node-view calculator with the round-independent future distribution
/// computed once.
class NodeCalculator {
 public:
  NodeCalculator(NetworkParams params, TruncationConfig trunc)
      : params_(params), trunc_(trunc), future_(future_distribution(params, trunc)) {}

  const NetworkParams& params() const noexcept { return params_; }
  const TruncationConfig& truncation() const noexcept { return trunc_; }
  const Pmf& future() const noexcept { return future_; }

  Pmf lead(const ChainTrace& trace, Round s) const { return lead_distribution(trace, s, params_, trunc_); }
  Pmf recent(Round s, Round c) const { return recent_distribution(s, c, params_, trunc_); }

  SpanDistributions spans(const ChainTrace& trace, Round s, Round c) const {
    return {lead(trace, s), recent(s, c), future_};
  }

  /// Reported error bound, in [floor, 1].
  double error_probability(const ChainTrace& trace, Round s, Round c) const {
    const std::int64_t k = good_advantage(trace, s, c);
    if (!trace.contains(s - lead_depth(params_, trunc_))) throw RangeError("insufficient history before target round");
    return reported_probability(combine_error(lead(trace, s), recent(s, c), future_, k), trunc_.early_stop_floor);
  }

  FinalityReport report(const ChainTrace& trace, std::int64_t settlement, unsigned workers = 0) const {
    const RoundRange range = report_rounds(trace, settlement, lead_depth(params_, trunc_));
    const Pmf recent_span = recent_distribution(0, settlement, params_, trunc_);
    FinalityReport out;
    out.entries.resize(range.count());
    parallel_for(
        range.count(),
        [&](std::size_t i) {
          const Round c = range.first_current + static_cast<Round>(i);
          const Round s = c - settlement;
          const std::int64_t k = good_advantage(trace, s, c);
          const double raw = combine_error(lead(trace, s), recent_span, future_, k);
          out.entries[i] = {s, c, k, reported_probability(raw, trunc_.early_stop_floor), View::node};
        },
        workers);
    return out;
  }

 private:
  NetworkParams params_;
  TruncationConfig trunc_;
  Pmf future_;
};

inline double error_probability(const ChainTrace& trace, Round s, Round c, const NetworkParams& params,
                                const TruncationConfig& trunc) {
  return NodeCalculator(params, trunc).error_probability(trace, s, c);
}

inline FinalityReport node_report(const ChainTrace& trace, std::int64_t settlement, const NetworkParams& params,
                                  const TruncationConfig& trunc, unsigned workers = 0) {
  return NodeCalculator(params, trunc).report(trace, settlement, workers);
}

}  // namespace finality
