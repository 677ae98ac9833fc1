// finality: simulate chain traces, compute per-round finality error bounds,
// sweep chain fullness, and run the oracle cross-checks.
//
// Exit codes: 0 success, 2 input error, 3 numerical degeneracy,
// 4 validation failure.

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "finality/finality.hpp"

namespace fs = std::filesystem;
using namespace finality;

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitValidation = 4;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Manifest {
  NetworkParams params;
  TruncationConfig trunc;
  std::string trace_path;
  std::string out_path;
  std::string format = "csv";
  std::string view = "node";
  std::vector<std::int64_t> settlements{30};
  std::vector<double> fullness{0.96};
  std::int64_t rounds = 40000;
  std::int64_t runs = 7;
  std::uint64_t seed = 0;
  unsigned workers = 0;
  std::int64_t trials = 100000;
  bool inject_fault = false;
  std::vector<std::string> checks{"bpz", "error", "skellam", "lead"};
};

void add_network_flags(CLI::App* cmd, Manifest& m) {
  cmd->add_option("--byzantine-fraction", m.params.byzantine_fraction, "Byzantine power fraction f")
      ->capture_default_str();
  cmd->add_option("--blocks-per-round", m.params.blocks_per_round, "Expected blocks per round e")
      ->capture_default_str();
  cmd->add_option("--history-window", m.params.history_window, "Rounds of history available to the lead")
      ->capture_default_str();
}

void add_truncation_flags(CLI::App* cmd, Manifest& m) {
  cmd->add_option("--max-k-lb", m.trunc.max_k_lb, "Support bound for lead and recent spans")->capture_default_str();
  cmd->add_option("--max-k-m", m.trunc.max_k_m, "Support bound for the future span")->capture_default_str();
  cmd->add_option("--max-i-l", m.trunc.max_i_l, "Deepest lead window, in rounds before the target")
      ->capture_default_str();
  cmd->add_option("--max-i-m", m.trunc.max_i_m, "Longest future horizon, in rounds")->capture_default_str();
  cmd->add_option("--floor", m.trunc.early_stop_floor, "Early-stop and reporting floor")->capture_default_str();
}

void add_view_flags(CLI::App* cmd, Manifest& m) {
  cmd->add_option("--view", m.view, "Calculator view")
      ->check(CLI::IsMember({"node", "actor", "both"}))
      ->capture_default_str();
  cmd->add_option("--settlement", m.settlements, "Settlement times in rounds")
      ->delimiter(',')
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--workers", m.workers, "Worker threads (0 = all cores)")->capture_default_str();
}

TraceFormat trace_format(const std::string& name) { return name == "json" ? TraceFormat::json : TraceFormat::csv; }

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

std::string fullness_tag(double fullness) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.2f", fullness);
  return buf;
}

/// Seed for run `run` of a batch; runs never share a generator stream.
std::uint64_t run_seed(std::uint64_t seed, double fullness, std::int64_t run) {
  const auto tag = static_cast<std::uint64_t>(fullness * 10000.0 + 0.5);
  return seed * 0x9E3779B97F4A7C15ull + tag * 1000003ull + static_cast<std::uint64_t>(run);
}

std::vector<View> requested_views(const std::string& view) {
  if (view == "both") return {View::node, View::actor};
  return {view == "actor" ? View::actor : View::node};
}

/// Reports for every (settlement, view), merged and sorted by
/// (round, settlement, view).
FinalityReport compute_reports(const ChainTrace& trace, const Manifest& m) {
  FinalityReport merged;
  const NodeCalculator node(m.params, m.trunc);
  std::optional<ActorCalculator> actor;
  for (View v : requested_views(m.view)) {
    if (v == View::actor && !actor) actor.emplace(m.params, m.trunc);
    for (std::int64_t settlement : m.settlements) {
      const FinalityReport r =
          v == View::node ? node.report(trace, settlement, m.workers) : actor->report(trace, settlement, m.workers);
      merged.entries.insert(merged.entries.end(), r.entries.begin(), r.entries.end());
    }
  }
  std::sort(merged.entries.begin(), merged.entries.end(), [](const FinalityEntry& a, const FinalityEntry& b) {
    return std::tuple(a.target_round, a.current_round - a.target_round, a.view) <
           std::tuple(b.target_round, b.current_round - b.target_round, b.view);
  });
  return merged;
}

int cmd_simulate(const Manifest& m) {
  if (m.out_path.empty()) throw IoError("--out is required");
  const fs::path dir(m.out_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  const double fullness = m.fullness.front();
  const std::string ext = m.format == "json" ? ".json" : ".csv";
  double grand_total = 0.0;
  for (std::int64_t run = 0; run < m.runs; ++run) {
    SimConfig config;
    config.fullness = fullness;
    config.rounds = m.rounds;
    config.seed = run_seed(m.seed, fullness, run);
    config.blocks_per_round = m.params.blocks_per_round;
    const ChainTrace trace = generate_trace(config);
    const fs::path path = dir / ("trace_alpha" + fullness_tag(fullness) + "_run" + std::to_string(run) + ext);
    auto out = open_output(path);
    write_trace(out, trace, trace_format(m.format));
    const double mean = static_cast<double>(trace.window_sum(trace.start_round(), trace.end_round())) /
                        static_cast<double>(trace.size());
    grand_total += mean;
    std::cout << path.string() << " mean_tipset_size=" << mean << '\n';
  }
  std::cout << "runs=" << m.runs << " mean_tipset_size=" << grand_total / static_cast<double>(m.runs) << '\n';
  return 0;
}

int cmd_compute(const Manifest& m) {
  std::ifstream in(m.trace_path, std::ios::binary);
  if (!in) throw IoError("cannot read " + m.trace_path);
  const ChainTrace trace = parse_trace(in, trace_format(m.format));
  const FinalityReport report = compute_reports(trace, m);
  if (m.out_path.empty() || m.out_path == "-") {
    write_report_header(std::cout);
    write_report_rows(std::cout, report);
  } else {
    auto out = open_output(m.out_path);
    write_report_header(out);
    write_report_rows(out, report);
  }
  return 0;
}

int cmd_sweep(const Manifest& m) {
  if (m.out_path.empty()) throw IoError("--out is required");
  const fs::path dir(m.out_path);
  std::error_code ec;
  fs::create_directories(dir, ec);
  auto rows = open_output(dir / "sweep.csv");
  rows << "fullness,run,round,settlement,view,error_probability,good_advantage\n";
  std::map<std::tuple<double, std::int64_t, View>, FinalityReport> pooled;
  for (double fullness : m.fullness) {
    for (std::int64_t run = 0; run < m.runs; ++run) {
      SimConfig config;
      config.fullness = fullness;
      config.rounds = m.rounds;
      config.seed = run_seed(m.seed, fullness, run);
      config.blocks_per_round = m.params.blocks_per_round;
      const FinalityReport report = compute_reports(generate_trace(config), m);
      for (const auto& e : report.entries) {
        const std::int64_t settlement = e.current_round - e.target_round;
        rows << fullness_tag(fullness) << ',' << run << ',' << e.target_round << ',' << settlement << ','
             << to_string(e.view) << ',' << format_probability(e.error_probability) << ',' << e.good_advantage
             << '\n';
        pooled[{fullness, settlement, e.view}].entries.push_back(e);
      }
    }
  }
  auto summary = open_output(dir / "summary.csv");
  summary << "fullness,settlement,view,median_error_probability,rows\n";
  for (const auto& [key, report] : pooled) {
    const auto& [fullness, settlement, view] = key;
    summary << fullness_tag(fullness) << ',' << settlement << ',' << to_string(view) << ','
            << format_probability(median_error(report)) << ',' << report.entries.size() << '\n';
    std::cout << "fullness=" << fullness_tag(fullness) << " settlement=" << settlement << " view=" << to_string(view)
              << " median=" << format_probability(median_error(report)) << '\n';
  }
  return 0;
}

int cmd_validate(const Manifest& m) {
  validation::ValidateOptions opts;
  opts.trials = m.trials;
  opts.seed = m.seed;
  opts.inject_fault = m.inject_fault;
  auto wants = [&](const std::string& name) {
    return std::find(m.checks.begin(), m.checks.end(), name) != m.checks.end();
  };
  std::vector<validation::CheckResult> results;
  if (wants("bpz")) results.push_back(validation::check_bpz_oracle(m.params, m.trunc, opts));
  if (wants("error")) results.push_back(validation::check_error_oracle(m.trunc, opts));
  if (wants("skellam")) results.push_back(validation::check_skellam_bessel(m.trunc, opts));
  if (wants("lead")) results.push_back(validation::check_lead_domination(m.trunc, opts));
  bool ok = true;
  for (const auto& r : results) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": worst=" << r.worst_delta
              << " tolerance=" << r.tolerance << " cases=" << r.cases;
    if (!r.detail.empty()) std::cout << " at " << r.detail;
    std::cout << '\n';
    ok = ok && r.passed;
  }
  return ok ? 0 : kExitValidation;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finality error bounds for tipset-based longest-chain protocols"};
  app.require_subcommand(1);
  Manifest m;

  auto* simulate = app.add_subcommand("simulate", "Generate synthetic chain traces");
  add_network_flags(simulate, m);
  simulate->add_option("--fullness", m.fullness, "Chain fullness alpha")
      ->expected(1)
      ->check(CLI::Range(0.0, 1.2))
      ->capture_default_str();
  simulate->add_option("--rounds", m.rounds, "Rounds per trace")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--runs", m.runs, "Number of traces")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--seed", m.seed, "Base seed")->capture_default_str();
  simulate->add_option("--out", m.out_path, "Output directory")->required();
  simulate->add_option("--format", m.format, "Trace format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();

  auto* compute = app.add_subcommand("compute", "Compute error bounds for a trace");
  add_network_flags(compute, m);
  add_truncation_flags(compute, m);
  add_view_flags(compute, m);
  compute->add_option("--trace", m.trace_path, "Trace file")->required();
  compute->add_option("--format", m.format, "Trace format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  compute->add_option("--out", m.out_path, "Result CSV (default stdout)");

  auto* sweep = app.add_subcommand("sweep", "Simulate and compute across chain fullness values");
  add_network_flags(sweep, m);
  add_truncation_flags(sweep, m);
  add_view_flags(sweep, m);
  sweep->add_option("--fullness", m.fullness, "Chain fullness values")
      ->delimiter(',')
      ->check(CLI::Range(0.0, 1.2))
      ->capture_default_str();
  sweep->add_option("--rounds", m.rounds, "Rounds per trace")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--runs", m.runs, "Traces per fullness value")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--seed", m.seed, "Base seed")->capture_default_str();
  sweep->add_option("--out", m.out_path, "Output directory")->required();

  auto* validate = app.add_subcommand("validate", "Cross-check the calculators against independent oracles");
  add_network_flags(validate, m);
  add_truncation_flags(validate, m);
  validate->add_option("--trials", m.trials, "Monte-Carlo trials per target")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  validate->add_option("--seed", m.seed, "Seed")->capture_default_str();
  validate->add_option("--checks", m.checks, "Checks to run")
      ->delimiter(',')
      ->check(CLI::IsMember({"bpz", "error", "skellam", "lead"}))
      ->capture_default_str();
  validate->add_flag("--inject-fault", m.inject_fault, "Perturb one production value by 1e-6");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    m.params.validate();
    m.trunc.validate();
    if (simulate->parsed()) return cmd_simulate(m);
    if (compute->parsed()) return cmd_compute(m);
    if (sweep->parsed()) return cmd_sweep(m);
    return cmd_validate(m);
  } catch (const DegenerateConditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitDegenerate;
  } catch (const GapError& e) {
    std::cerr << "error: gap in trace, missing round " << e.missing_round() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
}
