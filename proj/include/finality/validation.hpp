#pragma once

// Oracle-vs-production checks run by `finality validate` and the acceptance
// suite. Each check reports the worst observed delta against its tolerance.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "finality/actor.hpp"
#include "finality/chain.hpp"
#include "finality/node.hpp"
#include "finality/oracle.hpp"
#include "finality/pmf.hpp"
#include "finality/sim.hpp"

namespace finality::validation {

struct CheckResult {
  std::string name{};
  double worst_delta = 0.0;
  double tolerance = 0.0;
  std::int64_t cases = 0;
  std::string detail{};
  bool passed = true;
};

struct ValidateOptions {
  std::int64_t trials = 100000;
  std::uint64_t seed = 7;
  /// Perturbs one production pmf entry by 1e-6 before comparing, to prove
  /// the checks can fail.
  bool inject_fault = false;
};

namespace detail {

inline Pmf perturbed(const Pmf& p, double delta) {
  std::vector<double> mass(p.mass().begin(), p.mass().end());
  if (mass.empty()) mass.push_back(0.0);
  const std::size_t at = mass.size() / 2;
  mass[at] = std::clamp(mass[at] + delta, 0.0, 1.0);
  if (mass[at] == p[p.first() + static_cast<std::int64_t>(at)]) mass[at] -= delta;
  return Pmf(p.first(), std::move(mass));
}

inline double max_abs_diff(const Pmf& a, const Pmf& b) {
  const std::int64_t lo = std::min(a.first(), b.first());
  const std::int64_t hi = std::max(a.last(), b.last());
  double worst = 0.0;
  for (std::int64_t k = lo; k <= hi; ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
  return worst;
}

}  // namespace detail

/// bpz_pmf against exhaustive (t, b) enumeration on windows of 1..10 rounds
/// with 0..60 chain blocks. Windows whose observed chain is degenerate under
/// the model must be rejected by production.
inline CheckResult check_bpz_oracle(const NetworkParams& params, const TruncationConfig& trunc,
                                    const ValidateOptions& opts = {}) {
  CheckResult result{.name = "bpz_pmf vs brute-force enumeration", .tolerance = 1e-12};
  std::int64_t degenerate = 0;
  for (std::int64_t window = 1; window <= 10; ++window) {
    for (std::int64_t chain = 0; chain <= 60; ++chain) {
      const BpzContext ctx{window, chain, params};
      Pmf production;
      try {
        production = bpz_pmf(ctx, trunc);
      } catch (const DegenerateConditionError&) {
        ++degenerate;
        continue;
      }
      if (opts.inject_fault && window == 5 && chain == 25) production = detail::perturbed(production, 1e-6);
      const Pmf reference = oracle::brute_force_bpz(ctx, oracle::default_t_max(ctx), trunc.max_k_lb);
      const double delta = detail::max_abs_diff(production, reference);
      if (delta > result.worst_delta) {
        result.worst_delta = delta;
        result.detail = "window=" + std::to_string(window) + " chain=" + std::to_string(chain);
      }
      ++result.cases;
    }
  }
  result.detail += " (" + std::to_string(degenerate) + " degenerate windows rejected)";
  result.passed = result.worst_delta <= result.tolerance;
  return result;
}

/// combine_error against the naive triple sum on randomized node-view
/// configurations.
inline CheckResult check_error_oracle(const TruncationConfig& trunc, const ValidateOptions& opts = {},
                                      int configurations = 50) {
  CheckResult result{.name = "error_probability vs naive triple sum", .tolerance = 1e-12};
  std::mt19937_64 gen(opts.seed);
  std::uniform_real_distribution<double> fraction(0.05, 0.4);
  std::uniform_real_distribution<double> fullness(0.3, 1.1);
  std::uniform_int_distribution<int> settlement(1, 40);
  for (int n = 0; n < configurations; ++n) {
    NetworkParams params;
    params.byzantine_fraction = fraction(gen);
    const ChainTrace trace = generate_trace({fullness(gen), 120, gen(), params.blocks_per_round, 0});
    const std::int64_t settle = settlement(gen);
    const Round c = trace.end_round();
    const Round s = c - settle;
    const NodeCalculator calc(params, trunc);
    auto spans = calc.spans(trace, s, c);
    if (opts.inject_fault && n == configurations / 2) spans.lead = detail::perturbed(spans.lead, 1e-6);
    const std::int64_t k = good_advantage(trace, s, c);
    const double production = calc.error_probability(trace, s, c);
    const double reference =
        reported_probability(oracle::brute_force_error(spans.lead, spans.recent, spans.future, k),
                             trunc.early_stop_floor);
    const double delta = std::abs(production - reference);
    if (delta > result.worst_delta) {
      result.worst_delta = delta;
      result.detail = "f=" + std::to_string(params.byzantine_fraction) + " settlement=" + std::to_string(settle) +
                      " k=" + std::to_string(k);
    }
    ++result.cases;
  }
  result.passed = result.worst_delta <= result.tolerance;
  return result;
}

/// Skellam by convolution against the Bessel series at zero.
inline CheckResult check_skellam_bessel(const TruncationConfig& trunc, const ValidateOptions& opts = {}) {
  CheckResult result{.name = "Skellam convolution vs Bessel series", .tolerance = 1e-10};
  const std::vector<std::pair<double, double>> rates{{0.5, 0.5}, {1.5, 1.9469}, {2.0, 3.0}, {3.0, 3.0},
                                                     {4.5, 5.8}, {7.5, 9.7},   {15.0, 19.5}, {0.1, 6.0}};
  for (std::size_t i = 0; i < rates.size(); ++i) {
    const auto [mu1, mu2] = rates[i];
    Pmf sk = skellam_distribution(mu1, mu2, trunc.early_stop_floor);
    if (opts.inject_fault && i == 2) sk = detail::perturbed(Pmf(0, {sk[0]}), 1e-6);
    const double delta = std::abs(sk[0] - oracle::skellam_zero_bessel(mu1, mu2));
    if (delta > result.worst_delta) {
      result.worst_delta = delta;
      result.detail = "mu1=" + std::to_string(mu1) + " mu2=" + std::to_string(mu2);
    }
    ++result.cases;
  }
  result.passed = result.worst_delta <= result.tolerance;
  return result;
}

struct DominationCase {
  std::string trace_name;
  double byzantine_fraction = 0.0;
  Round target = 0;
  std::int64_t k = 0;
  double empirical = 0.0;
  double analytic = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo lead tails against the analytic lead tails. A violation is an
/// empirical frequency >= 1e-3 exceeding the analytic tail by more than three
/// binomial standard errors.
inline CheckResult check_lead_domination(const TruncationConfig& trunc, const ValidateOptions& opts = {},
                                         std::vector<DominationCase>* violations = nullptr, int targets = 8) {
  CheckResult result{.name = "Monte-Carlo lead tails vs analytic lead tails", .tolerance = 3.0};
  const std::int64_t rounds = 400;
  const ChainTrace constant(0, std::vector<std::int64_t>(static_cast<std::size_t>(rounds), 5));
  const ChainTrace sparse = generate_trace({0.8, rounds, opts.seed + 1, 5.0, 0});
  const std::vector<std::pair<std::string, const ChainTrace*>> traces{{"constant-5", &constant}, {"alpha-0.8", &sparse}};
  std::uint64_t stream = opts.seed;
  for (const auto& [name, trace] : traces) {
    for (double f : {0.1, 0.2, 0.3}) {
      NetworkParams params;
      params.byzantine_fraction = f;
      const std::int64_t depth = lead_depth(params, trunc);
      for (int t = 0; t < targets; ++t) {
        const Round s = trace->start_round() + depth + 1 + t * (rounds - depth - 2) / targets;
        Pmf lead = lead_distribution(*trace, s, params, trunc);
        if (opts.inject_fault && t == 0 && f == 0.3) lead = Pmf(0, {0.5});
        const auto stats = oracle::simulate_lead_process(*trace, s, params, opts.trials, ++stream, depth);
        for (std::int64_t k = 0;; ++k) {
          const double p = stats.frequency(k);
          if (p < 1e-3) break;
          const double se = std::sqrt(p * (1.0 - p) / static_cast<double>(stats.trials));
          const double analytic = tail_from(lead, k);
          const double excess = p - analytic;
          // Scores are in standard errors; the small absolute slack absorbs
          // rounding when p == 1 and se == 0.
          const double score = excess <= 1e-12 ? 0.0 : (se > 0.0 ? excess / se : 1e9);
          ++result.cases;
          if (score > result.worst_delta) {
            result.worst_delta = score;
            result.detail = name + " f=" + std::to_string(f) + " s=" + std::to_string(s) + " k=" + std::to_string(k) +
                            " empirical=" + std::to_string(p) + " analytic=" + std::to_string(analytic);
          }
          if (score > 3.0 && violations != nullptr) violations->push_back({name, f, s, k, p, analytic, se});
        }
      }
    }
  }
  result.passed = result.worst_delta <= result.tolerance;
  return result;
}

}  // namespace finality::validation
