// Serial vs OpenMP timing for the two parallel kernels: dataset extraction
// and cross-product validation. Outputs must match bit-exactly; a mismatch
// fails the run.
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "nmoves/cycles.hpp"
#include "nmoves/extraction.hpp"
#include "nmoves/factors.hpp"
#include "nmoves/oracle.hpp"
#include "nmoves/util.hpp"
#include "nmoves/validation.hpp"

namespace fs = std::filesystem;
using namespace nmoves;

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

std::string dir_digest(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir)) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  uint64_t h = 1469598103934665603ull;
  for (const auto& f : files) {
    h = mix_seed(h, fnv1a(fs::path(f).filename().string()));
    h = mix_seed(h, fnv1a(read_file(f)));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void print_row(const char* name, double serial_s, double parallel_s, bool identical) {
  std::printf("%-22s %9.3fs %9.3fs %7.2fx   %s\n", name, serial_s, parallel_s,
              parallel_s > 0 ? serial_s / parallel_s : 0.0, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Serial vs parallel benchmark with output equality checks"};
  int scenarios = 8;
  int val_scenarios = 16;
  int cycles_per_strategy = 4;
  int jobs = 0;
  app.add_option("--extract-scenarios", scenarios, "Scenarios in the extraction sweep");
  app.add_option("--scenarios", val_scenarios, "Scenarios in the validation cross product");
  app.add_option("--cycles-per-strategy", cycles_per_strategy, "Cycles per strategy");
  app.add_option("--jobs", jobs, "Parallel worker threads (0: all cores)");
  CLI11_PARSE(app, argc, argv);

  auto grid = FactorGrid::standard();
  auto table = OpModeTable::standard();
  bool all_identical = true;

  std::printf("%-22s %10s %10s %8s\n", "kernel", "serial", "parallel", "speedup");

  {
    auto base = fs::temp_directory_path() / ("nmoves_bench_" + std::to_string(::getpid()));
    auto serial_dir = (base / "serial").string();
    auto parallel_dir = (base / "parallel").string();
    fs::create_directories(serial_dir);
    fs::create_directories(parallel_dir);
    ExtractOptions opt;
    opt.scenario_begin = 0;
    opt.scenario_end = scenarios;
    opt.jobs = jobs;
    auto t0 = std::chrono::steady_clock::now();
    extract_dataset_serial(grid, table, serial_dir, opt);
    double serial_s = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    extract_dataset(grid, table, parallel_dir, opt);
    double parallel_s = seconds_since(t0);
    bool identical = dir_digest(serial_dir) == dir_digest(parallel_dir);
    all_identical = all_identical && identical;
    print_row("extraction sweep", serial_s, parallel_s, identical);
    fs::remove_all(base);
  }

  {
    std::vector<FactorVector> scen;
    for (int s = 0; s < val_scenarios; ++s) {
      scen.push_back(grid.scenario(s * (grid.scenario_count() / val_scenarios)));
    }
    auto cycles = generate_suite(cycles_per_strategy, 1);
    OracleModel oracle(table);
    EvaluateOptions opts;
    opts.jobs = jobs;
    auto t0 = std::chrono::steady_clock::now();
    auto serial_report = evaluate_serial(oracle, oracle, scen, cycles, opts);
    double serial_s = seconds_since(t0);
    t0 = std::chrono::steady_clock::now();
    auto parallel_report = evaluate(oracle, oracle, scen, cycles, opts);
    double parallel_s = seconds_since(t0);
    bool identical = report_to_json(serial_report) == report_to_json(parallel_report) &&
                     serial_report.rows.size() == parallel_report.rows.size();
    for (size_t i = 0; identical && i < serial_report.rows.size(); ++i) {
      identical = serial_report.rows[i].pct_error == parallel_report.rows[i].pct_error;
    }
    all_identical = all_identical && identical;
    print_row("validation product", serial_s, parallel_s, identical);
  }

  if (!all_identical) {
    std::cerr << "serial and parallel outputs differ\n";
    return 1;
  }
  return 0;
}
