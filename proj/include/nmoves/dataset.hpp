#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nmoves/extraction.hpp"

namespace nmoves {

struct Provenance {
  std::string subset;   // human-readable grid subset descriptor
  std::string version;  // extraction version stamp
};

// An immutable bag of extracted records; duplicate (v, a, X) keys are a
// contract violation surfaced at load time.
struct DatasetPartition {
  std::vector<EmissionRecord> records;
  Provenance provenance;
};

inline constexpr const char* kDatasetCsvHeader =
    "speed_mps,accel_mps2,grade_pct,temp_f,humidity_pct,vehicle_type,fuel,age_year,co2_g";

// Format picked by extension: .csv text, .nmre compact binary. Both
// round-trip records exactly (CSV via shortest round-trip decimals).
size_t write_partition(const DatasetPartition& p, const std::string& path);
size_t write_partition_csv(const DatasetPartition& p, const std::string& path);
size_t write_partition_binary(const DatasetPartition& p, const std::string& path);

struct LoadOptions {
  bool tolerate_gaps = false;
  // Declared size of the grid subset the files are expected to cover;
  // -1 disables the completeness check.
  long long expected_records = -1;
};

struct LoadResult {
  DatasetPartition partition;
  long long gap_count = 0;  // expected - present, when an expectation is declared
};

LoadResult load_partitions(const std::vector<std::string>& paths, const LoadOptions& opt);

// Marginal mean-emission curve over one input factor.
struct FactorCurve {
  std::string factor;
  std::vector<std::pair<double, double>> points;  // (factor value, mean e), sorted
  double ratio = 1.0;                             // max mean / min mean
};

struct SummaryStats {
  long long n = 0;
  double e_min = 0, e_max = 0, e_mean = 0;
  std::vector<FactorCurve> curves;

  const FactorCurve& curve(const std::string& factor) const;
  std::string to_json() const;
};

// Permutation-invariant marginals: per-cell sums are accumulated in sorted
// order so record order never changes the result.
SummaryStats summarize(const DatasetPartition& p);

// Deterministic shuffle split; fractions must sum to 1.
std::pair<DatasetPartition, DatasetPartition> split_partition(const DatasetPartition& p,
                                                              double train_fraction,
                                                              double test_fraction, uint64_t seed);

}  // namespace nmoves
