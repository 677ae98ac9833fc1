#pragma once

// Chain traces (per-round block counts of the observed heaviest chain) and
// the configuration shared by every calculator.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "finality/errors.hpp"

namespace finality {

using Round = std::int64_t;

/// Network model. `blocks_per_round` is the expected tipset size, and
/// `byzantine_fraction` the share of block production the adversary holds.
struct NetworkParams {
  double blocks_per_round = 5.0;
  double byzantine_fraction = 0.3;
  /// Ceiling on how many rounds before the target a lead may start building.
  std::int64_t history_window = 900;

  void validate() const {
    if (!(blocks_per_round > 0.0) || !std::isfinite(blocks_per_round)) {
      throw DomainError("blocks_per_round must be positive");
    }
    if (!(byzantine_fraction >= 0.0 && byzantine_fraction < 1.0)) {
      throw DomainError("byzantine_fraction must lie in [0, 1)");
    }
    if (history_window < 1) throw DomainError("history_window must be >= 1");
  }

  double adversary_rate() const noexcept { return byzantine_fraction * blocks_per_round; }
  double honest_rate() const noexcept { return (1.0 - byzantine_fraction) * blocks_per_round; }
};

/// Truncation bounds for the unbounded sums, plus the probability below
/// which iteration stops.
struct TruncationConfig {
  std::int64_t max_k_lb = 400;  // support bound for the lead and recent-past pmfs
  std::int64_t max_k_m = 100;   // support bound for the future pmf
  std::int64_t max_i_l = 25;    // deepest lead window, in rounds before the target
  std::int64_t max_i_m = 100;   // longest future horizon, in rounds
  double early_stop_floor = 1e-25;

  void validate() const {
    if (max_k_lb < 1 || max_k_m < 1 || max_i_l < 1 || max_i_m < 1) {
      throw DomainError("truncation bounds must all be >= 1");
    }
    if (!(early_stop_floor > 0.0 && early_stop_floor < 1.0)) {
      throw DomainError("early_stop_floor must lie in (0, 1)");
    }
  }
};

/// Block counts for consecutive rounds [start_round, start_round + size).
/// A count of zero is a null tipset.
class ChainTrace {
 public:
  ChainTrace() = default;

  ChainTrace(Round start_round, std::vector<std::int64_t> counts)
      : start_(start_round), counts_(std::move(counts)), prefix_(counts_.size() + 1, 0) {
    for (std::size_t i = 0; i < counts_.size(); ++i) {
      if (counts_[i] < 0) throw FormatError("negative block count at round " + std::to_string(start_ + static_cast<Round>(i)));
      prefix_[i + 1] = prefix_[i] + counts_[i];
    }
  }

  Round start_round() const noexcept { return start_; }
  /// Last round covered (start_round() - 1 when empty).
  Round end_round() const noexcept { return start_ + static_cast<Round>(counts_.size()) - 1; }
  std::size_t size() const noexcept { return counts_.size(); }
  bool empty() const noexcept { return counts_.empty(); }
  bool contains(Round r) const noexcept { return r >= start_ && r <= end_round(); }

  const std::vector<std::int64_t>& counts() const noexcept { return counts_; }

  std::int64_t at(Round r) const {
    if (!contains(r)) throw RangeError("round " + std::to_string(r) + " outside trace");
    return counts_[static_cast<std::size_t>(r - start_)];
  }

  /// Sum of counts over rounds [first, last], both inclusive.
  std::int64_t window_sum(Round first, Round last) const {
    if (first > last || !contains(first) || !contains(last)) {
      throw RangeError("window [" + std::to_string(first) + ", " + std::to_string(last) + "] outside trace [" +
                       std::to_string(start_) + ", " + std::to_string(end_round()) + "]");
    }
    return prefix_[static_cast<std::size_t>(last - start_ + 1)] - prefix_[static_cast<std::size_t>(first - start_)];
  }

  friend bool operator==(const ChainTrace& a, const ChainTrace& b) {
    return a.start_ == b.start_ && a.counts_ == b.counts_;
  }

 private:
  Round start_ = 0;
  std::vector<std::int64_t> counts_;
  std::vector<std::int64_t> prefix_{0};
};

/// Good advantage of the observed chain for target round s at current round
/// c: the blocks of rounds s+1 .. c. Round s itself is excluded, since the
/// lead windows already end at s.
inline std::int64_t good_advantage(const ChainTrace& trace, Round s, Round c) {
  if (c <= s) throw RangeError("current round must be after target round");
  return trace.window_sum(s + 1, c);
}

enum class TraceFormat { csv, json };

namespace detail {

inline std::int64_t parse_int_field(std::string_view field, std::size_t line_no) {
  while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
  while (!field.empty() && (field.back() == ' ' || field.back() == '\t')) field.remove_suffix(1);
  std::int64_t value = 0;
  const auto* end = field.data() + field.size();
  const auto [ptr, ec] = std::from_chars(field.data(), end, value);
  if (field.empty() || ec != std::errc{} || ptr != end) {
    throw FormatError("line " + std::to_string(line_no) + ": expected an integer, got '" + std::string(field) + "'");
  }
  return value;
}

inline ChainTrace parse_trace_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  Round start = 0;
  Round expected = 0;
  std::vector<std::int64_t> counts;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      if (line_no == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
      if (line != "round,blocks") throw FormatError("line 1: expected header 'round,blocks'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos) {
      throw FormatError("line " + std::to_string(line_no) + ": expected '<round>,<blocks>'");
    }
    const std::string_view view(line);
    const Round round = parse_int_field(view.substr(0, comma), line_no);
    const std::int64_t blocks = parse_int_field(view.substr(comma + 1), line_no);
    if (blocks < 0) {
      throw FormatError("line " + std::to_string(line_no) + ": negative block count for round " + std::to_string(round));
    }
    if (counts.empty()) {
      start = round;
    } else if (round != expected) {
      if (round > expected) throw GapError(expected);
      throw FormatError("line " + std::to_string(line_no) + ": rounds must be strictly ascending");
    }
    counts.push_back(blocks);
    expected = round + 1;
  }
  if (!header_seen) throw FormatError("empty trace input");
  if (counts.empty()) throw FormatError("trace has no rows");
  return ChainTrace(start, std::move(counts));
}

inline ChainTrace parse_trace_json(std::istream& in) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("invalid JSON trace: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("start_round") || !doc.contains("counts")) {
    throw FormatError("JSON trace must be an object with 'start_round' and 'counts'");
  }
  const auto& start = doc["start_round"];
  const auto& counts = doc["counts"];
  if (!start.is_number_integer()) throw FormatError("'start_round' must be an integer");
  if (!counts.is_array() || counts.empty()) throw FormatError("'counts' must be a non-empty array");
  std::vector<std::int64_t> values;
  values.reserve(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (!counts[i].is_number_integer()) throw FormatError("counts[" + std::to_string(i) + "] is not an integer");
    const auto v = counts[i].get<std::int64_t>();
    if (v < 0) throw FormatError("counts[" + std::to_string(i) + "] is negative");
    values.push_back(v);
  }
  return ChainTrace(start.get<Round>(), std::move(values));
}

}  // namespace detail

inline ChainTrace parse_trace(std::istream& in, TraceFormat format) {
  return format == TraceFormat::csv ? detail::parse_trace_csv(in) : detail::parse_trace_json(in);
}

inline void write_trace(std::ostream& out, const ChainTrace& trace, TraceFormat format) {
  if (format == TraceFormat::json) {
    nlohmann::json doc;
    doc["start_round"] = trace.start_round();
    doc["counts"] = trace.counts();
    out << doc.dump() << '\n';
    return;
  }
  out << "round,blocks\n";
  Round r = trace.start_round();
  for (const auto c : trace.counts()) out << r++ << ',' << c << '\n';
}

enum class View { node, actor };

inline std::string_view to_string(View v) { return v == View::node ? "node" : "actor"; }

/// Error bound for one (target, current) pair of rounds.
struct FinalityEntry {
  Round target_round = 0;
  Round current_round = 0;
  std::int64_t good_advantage = 0;
  double error_probability = 1.0;
  View view = View::node;
};

struct FinalityReport {
  std::vector<FinalityEntry> entries;
};

}  // namespace finality
