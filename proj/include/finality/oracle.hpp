#pragma once

// Brute-force and Monte-Carlo references for the analytic calculators. These
// deliberately avoid the pmf builders in pmf.hpp / node.hpp / actor.hpp:
// probabilities come from long-double recurrences and sampling from the
// standard library, so agreement is a real cross-check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "finality/actor.hpp"
#include "finality/chain.hpp"
#include "finality/pmf.hpp"

namespace finality::oracle {

struct TrialStats {
  std::int64_t trials = 0;
  /// tail_counts[k] = number of trials that ended with lead >= k.
  std::vector<std::int64_t> tail_counts;

  double frequency(std::int64_t k) const {
    if (k <= 0) return trials > 0 ? 1.0 : 0.0;
    if (k >= static_cast<std::int64_t>(tail_counts.size())) return 0.0;
    return static_cast<double>(tail_counts[static_cast<std::size_t>(k)]) / static_cast<double>(trials);
  }
};

/// Reflecting adversarial lead walked over rounds [s - history_depth, s]:
/// lead <- max(0, lead + Poisson(f e) - chain[r]).
inline TrialStats simulate_lead_process(const ChainTrace& trace, Round s, const NetworkParams& params,
                                        std::int64_t trials, std::uint64_t seed, std::int64_t history_depth) {
  if (!trace.contains(s) || !trace.contains(s - history_depth)) throw RangeError("lead process window outside trace");
  std::mt19937_64 gen(seed);
  std::poisson_distribution<std::int64_t> adversary(params.adversary_rate() > 0.0 ? params.adversary_rate() : 1.0);
  const bool silent = params.adversary_rate() == 0.0;
  std::vector<std::int64_t> finals(static_cast<std::size_t>(trials));
  for (auto& lead : finals) {
    lead = 0;
    for (Round r = s - history_depth; r <= s; ++r) {
      const std::int64_t produced = silent ? 0 : adversary(gen);
      lead = std::max<std::int64_t>(0, lead + produced - trace.at(r));
    }
  }
  TrialStats stats;
  stats.trials = trials;
  const std::int64_t top = finals.empty() ? 0 : *std::max_element(finals.begin(), finals.end());
  std::vector<std::int64_t> exact(static_cast<std::size_t>(top) + 2, 0);
  for (auto lead : finals) ++exact[static_cast<std::size_t>(lead)];
  stats.tail_counts.assign(exact.size(), 0);
  for (std::size_t k = exact.size() - 1; k-- > 0;) stats.tail_counts[k] = stats.tail_counts[k + 1] + exact[k];
  return stats;
}

/// Exact law of X_f + (T - chain) given T >= chain, by enumerating every
/// (t, b) pair with t in [chain, t_max]. Bins above max_k are dropped.
inline Pmf brute_force_bpz(const BpzContext& ctx, std::int64_t t_max, std::int64_t max_k) {
  const long double rate = static_cast<long double>(ctx.total_rate());
  const long double f = ctx.params.byzantine_fraction;
  std::vector<long double> total(static_cast<std::size_t>(t_max) + 1);
  long double term = std::exp(-rate);
  for (std::int64_t t = 0; t <= t_max; ++t) {
    if (t > 0) term *= rate / static_cast<long double>(t);
    total[static_cast<std::size_t>(t)] = term;
  }
  long double condition = 0.0L;
  for (std::int64_t t = t_max; t >= ctx.chain_blocks; --t) condition += total[static_cast<std::size_t>(t)];

  std::vector<long double> bins(static_cast<std::size_t>(max_k) + 1, 0.0L);
  for (std::int64_t t = ctx.chain_blocks; t <= t_max; ++t) {
    const long double pt = total[static_cast<std::size_t>(t)] / condition;
    long double pb = std::pow(1.0L - f, static_cast<long double>(t));
    for (std::int64_t b = 0; b <= t; ++b) {
      if (b > 0) {
        if (f == 0.0L) break;
        pb *= static_cast<long double>(t - b + 1) / static_cast<long double>(b) * f / (1.0L - f);
      }
      const std::int64_t k = b + (t - ctx.chain_blocks);
      if (k <= max_k) bins[static_cast<std::size_t>(k)] += pt * pb;
    }
  }
  std::vector<double> mass(bins.begin(), bins.end());
  for (double& m : mass) m = std::min(m, 1.0);
  return Pmf(0, std::move(mass));
}

/// Default enumeration bound for brute_force_bpz: omitted Poisson mass is
/// far below 1e-18.
inline std::int64_t default_t_max(const BpzContext& ctx) {
  const double rate = ctx.total_rate();
  return std::max<std::int64_t>(ctx.chain_blocks, 0) +
         static_cast<std::int64_t>(std::ceil(rate + 15.0 * std::sqrt(rate) + 40.0));
}

/// Safety-violation probability for good advantage k by naive triple
/// summation over the three span distributions.
inline double brute_force_error(const Pmf& lead, const Pmf& recent, const Pmf& future, std::int64_t k) {
  auto at_least = [](const Pmf& p, std::int64_t q) {
    double sum = 0.0;
    for (std::int64_t j = p.last(); j >= std::max(q, p.first()); --j) sum += p[j];
    // Envelopes may carry more than unit mass; a tail is still a probability.
    return std::min(sum, 1.0);
  };
  double error = at_least(lead, k);
  for (std::int64_t l = 0; l < k; ++l) {
    double inner = at_least(recent, k - l);
    for (std::int64_t b = 0; b < k - l; ++b) inner += recent[b] * at_least(future, k - l - b);
    error += lead[l] * inner;
  }
  return error;
}

/// Modified Bessel function of the first kind, order zero, by power series.
inline double bessel_i0(double x) {
  const double q = x * x / 4.0;
  double term = 1.0;
  double sum = 1.0;
  for (int m = 1; m < 1000; ++m) {
    term *= q / (static_cast<double>(m) * static_cast<double>(m));
    sum += term;
    if (term < sum * 1e-18) break;
  }
  return sum;
}

/// P(D = 0) for D ~ Skellam(mu1, mu2) via the Bessel series.
inline double skellam_zero_bessel(double mu1, double mu2) {
  return std::exp(-mu1 - mu2) * bessel_i0(2.0 * std::sqrt(mu1 * mu2));
}

}  // namespace finality::oracle
