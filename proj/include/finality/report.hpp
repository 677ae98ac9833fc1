#pragma once

// Shared machinery for per-round reports: the valid round range, a small
// parallel loop, reporting clamps and CSV output.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "finality/chain.hpp"
#include "finality/errors.hpp"

namespace finality {

/// Number of rounds before the target that a lead window may reach back.
inline std::int64_t lead_depth(const NetworkParams& params, const TruncationConfig& trunc) {
  return std::min(trunc.max_i_l, params.history_window - 1);
}

/// Error probabilities are reported in [floor, 1]; anything the truncated
/// computation cannot resolve is shown as the floor, never as zero.
inline double reported_probability(double raw, double floor) { return std::clamp(raw, floor, 1.0); }

struct RoundRange {
  Round first_current = 0;
  Round last_current = -1;
  std::size_t count() const noexcept {
    return last_current < first_current ? 0 : static_cast<std::size_t>(last_current - first_current + 1);
  }
};

/// Current rounds c for which c - settlement still has `depth` rounds of
/// history in the trace.
inline RoundRange report_rounds(const ChainTrace& trace, std::int64_t settlement, std::int64_t depth) {
  if (settlement < 1) throw DomainError("settlement must be >= 1");
  RoundRange range{trace.start_round() + depth + settlement, trace.end_round()};
  if (range.count() == 0) {
    throw RangeError("trace of " + std::to_string(trace.size()) + " rounds is too short for settlement " +
                     std::to_string(settlement) + " plus a lead window of " + std::to_string(depth) + " rounds");
  }
  return range;
}

/// Runs body(i) for i in [0, n) on up to `workers` threads (0 = hardware
/// concurrency). The first exception thrown by any worker is rethrown.
inline void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned workers = 0) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            body(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
            next = n;
          }
        }
      });
    }
  }
  if (failure) std::rethrow_exception(failure);
}

/// Formats a probability with 17 significant digits so it round-trips.
inline std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", p);
  return buf;
}

/// Result CSV: `round,settlement,view,error_probability,good_advantage`,
/// where `round` is the target round.
inline void write_report_header(std::ostream& out) { out << "round,settlement,view,error_probability,good_advantage\n"; }

inline void write_report_rows(std::ostream& out, const FinalityReport& report) {
  for (const auto& e : report.entries) {
    out << e.target_round << ',' << (e.current_round - e.target_round) << ',' << to_string(e.view) << ','
        << format_probability(e.error_probability) << ',' << e.good_advantage << '\n';
  }
}

/// Reads rows written by write_report_header / write_report_rows.
inline FinalityReport read_report(std::istream& in) {
  FinalityReport report;
  std::string line;
  if (!std::getline(in, line) || line.rfind("round,settlement,view,error_probability,good_advantage", 0) != 0) {
    throw FormatError("missing result header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string round, settlement, view, error, advantage;
    if (!std::getline(row, round, ',') || !std::getline(row, settlement, ',') || !std::getline(row, view, ',') ||
        !std::getline(row, error, ',') || !std::getline(row, advantage)) {
      throw FormatError("line " + std::to_string(line_no) + ": expected five fields");
    }
    if (view != "node" && view != "actor") throw FormatError("line " + std::to_string(line_no) + ": unknown view");
    try {
      FinalityEntry e;
      e.target_round = std::stoll(round);
      e.current_round = e.target_round + std::stoll(settlement);
      e.view = view == "node" ? View::node : View::actor;
      e.error_probability = std::stod(error);
      e.good_advantage = std::stoll(advantage);
      report.entries.push_back(e);
    } catch (const std::logic_error&) {
      throw FormatError("line " + std::to_string(line_no) + ": malformed number");
    }
  }
  return report;
}

/// Median error probability. With an even count the two middle values are
/// combined by geometric mean, which suits log-scale data.
inline double median_error(const FinalityReport& report) {
  if (report.entries.empty()) throw RangeError("median of empty report");
  std::vector<double> v;
  v.reserve(report.entries.size());
  for (const auto& e : report.entries) v.push_back(e.error_probability);
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  if (v.size() % 2 == 1) return v[mid];
  return std::sqrt(v[mid - 1] * v[mid]);
}

}  // namespace finality
