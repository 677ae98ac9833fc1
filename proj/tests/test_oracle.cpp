#include "catch_amalgamated.hpp"

#include "finality/node.hpp"
#include "finality/oracle.hpp"
#include "finality/validation.hpp"
#include "test_support.hpp"

using namespace finality;
using Catch::Matchers::WithinAbs;
using finality::testing::constant_counts;
using finality::testing::direct_poisson;

namespace {

NetworkParams params_with(double f) {
  NetworkParams p;
  p.byzantine_fraction = f;
  return p;
}

}  // namespace

TEST_CASE("lead process without an adversary stays at zero", "[oracle][mc]") {
  const ChainTrace trace(0, constant_counts(50, 5));
  const auto stats = oracle::simulate_lead_process(trace, 40, params_with(0.0), 2000, 1, 25);
  CHECK(stats.trials == 2000);
  CHECK(stats.frequency(0) == 1.0);
  CHECK(stats.frequency(1) == 0.0);
}

TEST_CASE("lead process on an empty chain sums the adversary's draws", "[oracle][mc]") {
  // With no honest blocks the walk never reflects, so the lead after 26
  // rounds is Poisson(26 * 1.5).
  const ChainTrace trace(0, constant_counts(50, 0));
  const std::int64_t trials = 40000;
  const auto stats = oracle::simulate_lead_process(trace, 40, params_with(0.3), trials, 2, 25);
  for (std::int64_t k : {30, 39, 45, 50}) {
    double tail = 0.0;
    for (std::int64_t j = k; j < 200; ++j) tail += direct_poisson(j, 39.0);
    const double se = std::sqrt(tail * (1.0 - tail) / static_cast<double>(trials));
    CHECK(std::abs(stats.frequency(k) - tail) <= 5.0 * se);
  }
}

TEST_CASE("lead process counts are consistent", "[oracle][mc]") {
  const ChainTrace trace(0, constant_counts(50, 5));
  const auto stats = oracle::simulate_lead_process(trace, 40, params_with(0.3), 5000, 3, 25);
  for (std::size_t k = 1; k < stats.tail_counts.size(); ++k) {
    CHECK(stats.tail_counts[k] <= stats.tail_counts[k - 1]);
    CHECK(stats.tail_counts[k] <= stats.trials);
  }
  CHECK(stats.tail_counts[0] == stats.trials);
  const auto again = oracle::simulate_lead_process(trace, 40, params_with(0.3), 5000, 3, 25);
  CHECK(again.tail_counts == stats.tail_counts);
  CHECK_THROWS_AS(oracle::simulate_lead_process(trace, 10, params_with(0.3), 10, 3, 25), RangeError);
}

TEST_CASE("brute-force bpz reductions", "[oracle][bpz]") {
  const BpzContext ctx{4, 0, params_with(0.0)};
  const Pmf p = oracle::brute_force_bpz(ctx, oracle::default_t_max(ctx), 400);
  for (std::int64_t k = 0; k <= 60; ++k) CHECK_THAT(p[k], WithinAbs(direct_poisson(k, 20.0), 1e-14));
  for (std::int64_t chain : {0, 10, 30}) {
    const BpzContext c{6, chain, params_with(0.3)};
    CHECK_THAT(oracle::brute_force_bpz(c, oracle::default_t_max(c), 400).total(), WithinAbs(1.0, 1e-9));
  }
}

TEST_CASE("brute-force error reductions", "[oracle][error]") {
  const Pmf lead(0, {0.6, 0.3, 0.1});
  const Pmf recent(0, {0.5, 0.5});
  const Pmf future(0, {0.7, 0.2, 0.05});
  const double expected = 0.4 + 0.6 * (0.5 + 0.5 * 0.25);
  CHECK_THAT(oracle::brute_force_error(lead, recent, future, 1), WithinAbs(expected, 1e-15));
  const Pmf zero = Pmf::point_mass(0);
  CHECK(oracle::brute_force_error(zero, zero, Pmf(0, {1.0}), 3) == 0.0);
  CHECK_THAT(combine_error(lead, recent, future, 1), WithinAbs(expected, 1e-15));
}

TEST_CASE("bessel series", "[oracle]") {
  CHECK(oracle::bessel_i0(0.0) == 1.0);
  CHECK_THAT(oracle::bessel_i0(1.0), WithinAbs(1.2660658777520082, 1e-15));
  CHECK_THAT(oracle::skellam_zero_bessel(1.0, 1.0), WithinAbs(std::exp(-2.0) * 2.2795853023360673, 1e-15));
}

TEST_CASE("validation checks pass and detect injected faults", "[oracle][validate]") {
  const TruncationConfig trunc;
  const NetworkParams params;
  validation::ValidateOptions opts;
  CHECK(validation::check_bpz_oracle(params, trunc, opts).passed);
  CHECK(validation::check_error_oracle(trunc, opts).passed);
  CHECK(validation::check_skellam_bessel(trunc, opts).passed);

  opts.inject_fault = true;
  CHECK_FALSE(validation::check_bpz_oracle(params, trunc, opts).passed);
  CHECK_FALSE(validation::check_error_oracle(trunc, opts).passed);
  CHECK_FALSE(validation::check_skellam_bessel(trunc, opts).passed);
}

TEST_CASE("validation verdicts are reproducible", "[oracle][validate]") {
  const TruncationConfig trunc;
  validation::ValidateOptions opts;
  const auto a = validation::check_error_oracle(trunc, opts, 10);
  const auto b = validation::check_error_oracle(trunc, opts, 10);
  CHECK(a.worst_delta == b.worst_delta);
  CHECK(a.detail == b.detail);
}
