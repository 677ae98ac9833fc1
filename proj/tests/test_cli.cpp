#include "catch_amalgamated.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "finality/report.hpp"

namespace fs = std::filesystem;
using namespace finality;

namespace {

struct Run {
  int code = -1;
  std::string output;
};

Run run_cli(const std::string& args) {
  const fs::path log = fs::temp_directory_path() / "finality_cli_test.log";
  const std::string command = std::string(FINALITY_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(command.c_str());
  std::ifstream in(log);
  std::stringstream buf;
  buf << in.rdbuf();
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, buf.str()};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("finality_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

}  // namespace

TEST_CASE("simulate writes zero rows for zero fullness", "[cli]") {
  const fs::path dir = scratch("zero");
  const Run r = run_cli("simulate --fullness 0 --rounds 10 --runs 1 --out " + dir.string());
  REQUIRE(r.code == 0);
  const std::string text = slurp(dir / "trace_alpha0.00_run0.csv");
  CHECK(text == "round,blocks\n0,0\n1,0\n2,0\n3,0\n4,0\n5,0\n6,0\n7,0\n8,0\n9,0\n");
}

TEST_CASE("simulate is deterministic and writes seven runs by default", "[cli]") {
  const fs::path a = scratch("sim_a");
  const fs::path b = scratch("sim_b");
  REQUIRE(run_cli("simulate --fullness 0.96 --rounds 500 --seed 42 --out " + a.string()).code == 0);
  REQUIRE(run_cli("simulate --fullness 0.96 --rounds 500 --seed 42 --out " + b.string()).code == 0);
  int files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    CHECK(slurp(entry.path()) == slurp(b / entry.path().filename()));
  }
  CHECK(files == 7);
  CHECK(slurp(a / "trace_alpha0.96_run0.csv") != slurp(a / "trace_alpha0.96_run1.csv"));
}

TEST_CASE("compute writes sorted rows for both views", "[cli]") {
  const fs::path dir = scratch("compute");
  REQUIRE(run_cli("simulate --fullness 0.96 --rounds 200 --runs 1 --seed 3 --out " + dir.string()).code == 0);
  const fs::path out = dir / "result.csv";
  const Run r = run_cli("compute --trace " + (dir / "trace_alpha0.96_run0.csv").string() +
                        " --view both --settlement 10,20 --out " + out.string());
  REQUIRE(r.code == 0);
  std::ifstream in(out);
  const FinalityReport report = read_report(in);
  REQUIRE(report.entries.size() == 2 * ((200 - 25 - 10) + (200 - 25 - 20)));
  for (std::size_t i = 1; i < report.entries.size(); ++i) {
    const auto& p = report.entries[i - 1];
    const auto& q = report.entries[i];
    CHECK(std::tuple(p.target_round, p.current_round - p.target_round, p.view) <
          std::tuple(q.target_round, q.current_round - q.target_round, q.view));
    if (p.target_round == q.target_round && p.current_round == q.current_round) {
      CHECK(p.view == View::node);
      CHECK(q.error_probability >= p.error_probability - 1e-12);
    }
  }
}

TEST_CASE("compute reports input errors", "[cli]") {
  const fs::path dir = scratch("errors");
  write_file(dir / "short.csv", "round,blocks\n0,5\n1,5\n");
  Run r = run_cli("compute --trace " + (dir / "short.csv").string() + " --settlement 5");
  CHECK(r.code == 2);
  CHECK(r.output.find("too short") != std::string::npos);

  write_file(dir / "gap.csv", "round,blocks\n100,5\n102,4\n");
  r = run_cli("compute --trace " + (dir / "gap.csv").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("101") != std::string::npos);

  write_file(dir / "negative.csv", "round,blocks\n100,5\n101,-4\n");
  r = run_cli("compute --trace " + (dir / "negative.csv").string());
  CHECK(r.code == 2);
  CHECK(r.output.find("line 3") != std::string::npos);

  CHECK(run_cli("compute --trace " + (dir / "missing.csv").string()).code == 2);
  CHECK(run_cli("compute --trace " + (dir / "gap.csv").string() + " --settlement 0").code == 2);
  CHECK(run_cli("compute --trace " + (dir / "gap.csv").string() + " --byzantine-fraction 1.5").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
}

TEST_CASE("compute reports numerical degeneracy", "[cli]") {
  const fs::path dir = scratch("degenerate");
  std::string text = "round,blocks\n";
  for (int i = 0; i < 60; ++i) text += std::to_string(i) + "," + (i == 40 ? "80" : "5") + "\n";
  write_file(dir / "burst.csv", text);
  const Run r = run_cli("compute --trace " + (dir / "burst.csv").string() + " --view actor --settlement 5");
  CHECK(r.code == 3);
  CHECK(r.output.find("inconsistent") != std::string::npos);
}

TEST_CASE("sweep writes long rows and a median summary", "[cli]") {
  const fs::path dir = scratch("sweep");
  const Run r =
      run_cli("sweep --fullness 0.8,0.9 --settlement 20,40 --rounds 120 --runs 2 --seed 5 --out " + dir.string());
  REQUIRE(r.code == 0);
  std::istringstream summary(slurp(dir / "summary.csv"));
  std::string line;
  int rows = -1;
  while (std::getline(summary, line)) ++rows;
  CHECK(rows == 4);
  std::istringstream sweep(slurp(dir / "sweep.csv"));
  rows = -1;
  while (std::getline(sweep, line)) ++rows;
  CHECK(rows == 2 * 2 * ((120 - 25 - 20) + (120 - 25 - 40)));
}

TEST_CASE("validate passes and detects injected faults", "[cli]") {
  Run r = run_cli("validate --checks bpz,error,skellam --seed 7");
  CHECK(r.code == 0);
  CHECK(r.output.find("FAIL") == std::string::npos);
  r = run_cli("validate --checks bpz,error,skellam --seed 7 --inject-fault");
  CHECK(r.code == 4);
  CHECK(r.output.find("FAIL") != std::string::npos);
}
