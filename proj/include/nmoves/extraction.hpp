#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmoves/factors.hpp"
#include "nmoves/oracle.hpp"

namespace nmoves {

// Raised when a requested (v, a) transition would need a negative speed.
class InvalidCombinationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Baseline/custom cycle pair whose emission difference isolates one second.
struct CyclePair {
  DrivingCycle baseline;  // n copies of v
  DrivingCycle custom;    // baseline plus v + a*dt appended
  int n;
  double dt;
};

struct EmissionRecord {
  double v = 0;  // m/s at the start of the step
  double a = 0;  // m/s^2 held over the step
  FactorVector x;
  double e = 0;  // grams CO2 over one dt
};

CyclePair build_cycle_pair(double v, double a, int n = 5, double dt = 1.0);

// cycle_emission(custom) - cycle_emission(baseline); the cruise prefix
// cancels, leaving the appended transition's one-second emission.
double instantaneous_emission(double v, double a, const FactorVector& x,
                              const OpModeTable& table, int n = 5, double dt = 1.0);

// All valid dynamics points of one scenario, in grid order.
std::vector<EmissionRecord> extract_scenario(const FactorGrid& grid, const OpModeTable& table,
                                             long long scenario_index, int n = 5, double dt = 1.0);

struct ExtractOptions {
  long long scenario_begin = 0;
  long long scenario_end = 0;  // exclusive
  int n = 5;
  double dt = 1.0;
  bool binary = false;  // write .nmre partitions instead of .csv
  int jobs = 0;         // worker threads; 0 keeps the runtime default
  // Test hook simulating corrupted records: return true to drop the record
  // with this in-scenario index. Default off.
  std::function<bool(long long scenario, long long record)> drop;
};

struct ExtractionReport {
  long long scenario_begin = 0;
  long long scenario_end = 0;
  long long scenarios_written = 0;
  long long scenarios_skipped = 0;  // partition file already present
  long long records_written = 0;
  long long records_dropped = 0;
  std::string out_dir;

  std::string to_json() const;
};

// One partition file per scenario under out_dir, written atomically so an
// interrupted run leaves only complete files; re-running skips scenarios
// whose partition already exists. Parallel over scenarios.
ExtractionReport extract_dataset(const FactorGrid& grid, const OpModeTable& table,
                                 const std::string& out_dir, const ExtractOptions& opt);
// Single-threaded reference producing byte-identical partitions.
ExtractionReport extract_dataset_serial(const FactorGrid& grid, const OpModeTable& table,
                                        const std::string& out_dir, const ExtractOptions& opt);

std::string scenario_file_name(long long scenario_index, bool binary);

}  // namespace nmoves
