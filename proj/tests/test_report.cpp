#include "catch_amalgamated.hpp"

#include <atomic>
#include <random>
#include <sstream>
#include <stdexcept>

#include "finality/report.hpp"

using namespace finality;

TEST_CASE("result CSV round-trips exactly", "[report][property]") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> exponent(-25.0, 0.0);
  FinalityReport report;
  for (int i = 0; i < 200; ++i) {
    const Round s = 1000 + i;
    report.entries.push_back({s, s + 1 + i % 40, i * 3, std::pow(10.0, exponent(gen)), i % 2 ? View::actor : View::node});
  }
  report.entries.push_back({5, 35, 150, 1e-25, View::node});
  report.entries.push_back({6, 36, 0, 1.0, View::actor});
  std::stringstream buf;
  write_report_header(buf);
  write_report_rows(buf, report);
  const FinalityReport parsed = read_report(buf);
  REQUIRE(parsed.entries.size() == report.entries.size());
  for (std::size_t i = 0; i < parsed.entries.size(); ++i) {
    const auto& a = report.entries[i];
    const auto& b = parsed.entries[i];
    CHECK(a.error_probability == b.error_probability);
    CHECK(a.target_round == b.target_round);
    CHECK(a.current_round == b.current_round);
    CHECK(a.good_advantage == b.good_advantage);
    CHECK(a.view == b.view);
  }
}

TEST_CASE("read_report rejects malformed input", "[report]") {
  std::istringstream none("");
  CHECK_THROWS_AS(read_report(none), FormatError);
  std::istringstream bad_view("round,settlement,view,error_probability,good_advantage\n1,2,miner,0.5,3\n");
  CHECK_THROWS_AS(read_report(bad_view), FormatError);
  std::istringstream short_row("round,settlement,view,error_probability,good_advantage\n1,2,node\n");
  CHECK_THROWS_AS(read_report(short_row), FormatError);
}

TEST_CASE("format_probability keeps 17 significant digits", "[report]") {
  CHECK(format_probability(0.1) == "0.10000000000000001");
  CHECK(format_probability(1e-25) == "1e-25");
  CHECK(format_probability(1.0 / 3.0) == "0.33333333333333331");
  CHECK(format_probability(1.0) == "1");
}

TEST_CASE("reported probabilities are clamped", "[report]") {
  CHECK(reported_probability(0.0, 1e-25) == 1e-25);
  CHECK(reported_probability(-1e-18, 1e-25) == 1e-25);
  CHECK(reported_probability(1.0000001, 1e-25) == 1.0);
  CHECK(reported_probability(0.25, 1e-25) == 0.25);
}

TEST_CASE("median_error", "[report]") {
  FinalityReport r;
  CHECK_THROWS_AS(median_error(r), RangeError);
  for (double p : {1e-3, 1e-9, 1e-5}) r.entries.push_back({0, 1, 0, p, View::node});
  CHECK(median_error(r) == 1e-5);
  r.entries.push_back({0, 1, 0, 1e-7, View::node});
  CHECK_THAT(median_error(r), Catch::Matchers::WithinRel(1e-6, 1e-12));
}

TEST_CASE("report_rounds", "[report]") {
  const ChainTrace trace(100, std::vector<std::int64_t>(60, 5));
  const RoundRange r = report_rounds(trace, 30, 25);
  CHECK(r.first_current == 155);
  CHECK(r.last_current == 159);
  CHECK(r.count() == 5);
  CHECK_THROWS_AS(report_rounds(trace, 35, 25), RangeError);
  CHECK_THROWS_AS(report_rounds(trace, 0, 25), DomainError);
}

TEST_CASE("parallel_for visits every index once and propagates errors", "[report]") {
  for (unsigned workers : {1u, 2u, 4u}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; }, workers);
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(
                        100, [](std::size_t i) { if (i == 37) throw std::runtime_error("boom"); }, workers),
                    std::runtime_error);
  }
  parallel_for(0, [](std::size_t) { FAIL("no work expected"); }, 2);
}
