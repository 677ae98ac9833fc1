#pragma once

// Discrete probability primitives shared by the node and actor calculators:
// Poisson and binomial point masses, finite pmfs with signed support,
// convolution (Skellam as Poisson minus Poisson), pointwise envelopes and
// tails.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "finality/errors.hpp"

namespace finality {

namespace detail {

inline constexpr std::size_t kLogFactorialTableSize = 8192;

inline const std::array<double, kLogFactorialTableSize>& log_factorial_table() {
  static const auto table = [] {
    std::array<double, kLogFactorialTableSize> t{};
    for (std::size_t n = 0; n < t.size(); ++n) t[n] = std::lgamma(static_cast<double>(n) + 1.0);
    return t;
  }();
  return table;
}

}  // namespace detail

/// ln(n!) for n >= 0.
inline double log_factorial(std::int64_t n) {
  if (n < 0) throw DomainError("log_factorial: negative argument");
  if (static_cast<std::uint64_t>(n) < detail::kLogFactorialTableSize) {
    return detail::log_factorial_table()[static_cast<std::size_t>(n)];
  }
  return std::lgamma(static_cast<double>(n) + 1.0);
}

/// Finite discrete (sub-)distribution over the integers
/// {offset, offset + 1, ..., offset + size - 1}. Mass outside that range is
/// zero. Envelopes built from pointwise maxima are stored in the same type
/// and need not sum to one.
class Pmf {
 public:
  Pmf() = default;

  Pmf(std::int64_t offset, std::vector<double> mass) : offset_(offset), mass_(std::move(mass)) {
    for (double& m : mass_) {
      if (!(m >= 0.0) || !(m <= 1.0 + 1e-12)) {
        throw DomainError("Pmf: mass entry outside [0, 1]: " + std::to_string(m));
      }
      m = std::min(m, 1.0);
    }
  }

  static Pmf point_mass(std::int64_t at) { return Pmf(at, {1.0}); }

  std::int64_t offset() const noexcept { return offset_; }
  /// Smallest integer of the stored support.
  std::int64_t first() const noexcept { return offset_; }
  /// Largest integer of the stored support (first() - 1 when empty).
  std::int64_t last() const noexcept { return offset_ + static_cast<std::int64_t>(mass_.size()) - 1; }
  std::size_t size() const noexcept { return mass_.size(); }
  bool empty() const noexcept { return mass_.empty(); }

  double operator[](std::int64_t k) const noexcept {
    if (k < offset_ || k > last()) return 0.0;
    return mass_[static_cast<std::size_t>(k - offset_)];
  }

  std::span<const double> mass() const noexcept { return mass_; }

  /// Sum of all stored mass, accumulated from the far tail inwards.
  double total() const noexcept { return std::accumulate(mass_.rbegin(), mass_.rend(), 0.0); }

  friend bool operator==(const Pmf&, const Pmf&) = default;

 private:
  std::int64_t offset_ = 0;
  std::vector<double> mass_;
};

/// P(X = k) for X ~ Poisson(rate), evaluated in log space.
inline double poisson_pmf(std::int64_t k, double rate) {
  if (k < 0) throw DomainError("poisson_pmf: negative k");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("poisson_pmf: rate must be finite and >= 0");
  if (rate == 0.0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(rate) - rate - log_factorial(k));
}

/// P(X >= k) for X ~ Poisson(rate).
inline double poisson_tail(std::int64_t k, double rate) {
  if (k < 0) throw DomainError("poisson_tail: negative k");
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw DomainError("poisson_tail: rate must be finite and >= 0");
  if (k == 0) return 1.0;
  if (rate == 0.0) return 0.0;

  if (static_cast<double>(k) > rate) {
    // Upper sum; terms decrease monotonically from k onwards.
    double term = poisson_pmf(k, rate);
    double sum = 0.0;
    for (std::int64_t j = k; term > 0.0; ++j) {
      sum += term;
      if (term < sum * 1e-18) break;
      term *= rate / static_cast<double>(j + 1);
    }
    return std::min(sum, 1.0);
  }

  // Lower sum 1 - P(X < k), walking down from the largest term.
  double term = poisson_pmf(k - 1, rate);
  double below = 0.0;
  for (std::int64_t j = k - 1; j >= 0 && term > 0.0; --j) {
    below += term;
    if (term < below * 1e-18) break;
    term *= static_cast<double>(j) / rate;
  }
  return std::clamp(1.0 - below, 0.0, 1.0);
}

/// C(n, k) p^k (1 - p)^(n - k).
inline double binomial_pmf(std::int64_t k, std::int64_t n, double p) {
  if (n < 0 || k < 0 || k > n) throw DomainError("binomial_pmf: require 0 <= k <= n");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("binomial_pmf: p outside [0, 1]");
  if (p == 0.0) return k == 0 ? 1.0 : 0.0;
  if (p == 1.0) return k == n ? 1.0 : 0.0;
  const double log_value = log_factorial(n) - log_factorial(k) - log_factorial(n - k) +
                           static_cast<double>(k) * std::log(p) +
                           static_cast<double>(n - k) * std::log1p(-p);
  return std::exp(log_value);
}

/// Poisson(rate) as a Pmf on [0, max_k]. Iteration stops at the first k past
/// the mean whose mass falls below `floor`; that entry and everything after
/// it are dropped.
inline Pmf poisson_distribution(double rate, std::int64_t max_k, double floor) {
  if (max_k < 0) throw DomainError("poisson_distribution: negative max_k");
  std::vector<double> mass;
  for (std::int64_t k = 0; k <= max_k; ++k) {
    const double p = poisson_pmf(k, rate);
    if (static_cast<double>(k) > rate && p < floor) break;
    mass.push_back(p);
  }
  return Pmf(0, std::move(mass));
}

/// Generous support cap for a Poisson(rate) when no external bound applies.
inline std::int64_t poisson_support_cap(double rate) {
  return static_cast<std::int64_t>(std::ceil(rate + 40.0 * std::sqrt(rate) + 100.0));
}

enum class Combine { sum, difference };

/// Distribution of A + B, or of A - B for Combine::difference.
inline Pmf pmf_convolve(const Pmf& a, const Pmf& b, Combine op = Combine::sum) {
  if (a.empty() || b.empty()) return {};
  const auto ma = a.mass();
  const auto mb = b.mass();
  const std::size_t nb = mb.size();
  std::vector<double> out(ma.size() + nb - 1, 0.0);
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double ai = ma[i];
    if (ai == 0.0) continue;
    for (std::size_t j = 0; j < nb; ++j) {
      const std::size_t slot = op == Combine::sum ? i + j : i + (nb - 1 - j);
      out[slot] += ai * mb[j];
    }
  }
  for (double& v : out) v = std::min(v, 1.0);
  const std::int64_t offset = op == Combine::sum ? a.first() + b.first() : a.first() - b.last();
  return Pmf(offset, std::move(out));
}

/// Drops leading and trailing entries below `floor`.
inline Pmf trim(const Pmf& p, double floor) {
  const auto m = p.mass();
  std::size_t lo = 0;
  std::size_t hi = m.size();
  while (lo < hi && m[lo] < floor) ++lo;
  while (hi > lo && m[hi - 1] < floor) --hi;
  return Pmf(p.first() + static_cast<std::int64_t>(lo), std::vector<double>(m.begin() + lo, m.begin() + hi));
}

/// Skellam(mu1, mu2): Poisson(mu1) minus an independent Poisson(mu2), built
/// by convolving the two truncated Poisson pmfs. Omitted mass per side is
/// below `floor`.
inline Pmf skellam_distribution(double mu1, double mu2, double floor) {
  const Pmf left = poisson_distribution(mu1, poisson_support_cap(mu1), floor);
  const Pmf right = poisson_distribution(mu2, poisson_support_cap(mu2), floor);
  return pmf_convolve(left, right, Combine::difference);
}

/// Entry-wise maximum over the union of the input supports. The result is an
/// upper-bound envelope and is not renormalized.
inline Pmf pointwise_max_envelope(std::span<const Pmf> pmfs) {
  if (pmfs.empty()) throw DomainError("pointwise_max_envelope: empty input");
  std::int64_t lo = 0;
  std::int64_t hi = -1;
  bool any = false;
  for (const Pmf& p : pmfs) {
    if (p.empty()) continue;
    lo = any ? std::min(lo, p.first()) : p.first();
    hi = any ? std::max(hi, p.last()) : p.last();
    any = true;
  }
  if (!any) return {};
  std::vector<double> out(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (const Pmf& p : pmfs) {
    const auto m = p.mass();
    for (std::size_t i = 0; i < m.size(); ++i) {
      double& slot = out[static_cast<std::size_t>(p.first() - lo) + i];
      slot = std::max(slot, m[i]);
    }
  }
  return Pmf(lo, std::move(out));
}

/// Mass at support points >= k, clamped to [0, 1].
inline double tail_from(const Pmf& p, std::int64_t k) {
  if (p.empty() || k > p.last()) return 0.0;
  const auto m = p.mass();
  const std::size_t start = k <= p.first() ? 0 : static_cast<std::size_t>(k - p.first());
  double sum = 0.0;
  for (std::size_t i = m.size(); i-- > start;) sum += m[i];
  return std::clamp(sum, 0.0, 1.0);
}

}  // namespace finality
