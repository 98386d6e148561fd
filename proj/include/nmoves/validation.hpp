#pragma once

#include <map>
#include <string>
#include <vector>

#include "nmoves/cycles.hpp"
#include "nmoves/emission_model.hpp"
#include "nmoves/factors.hpp"

namespace nmoves {

// The four headline error statistics over signed percentage errors.
struct ErrorStats {
  double mape = 0;   // mean absolute percentage error
  double mpe = 0;    // signed mean
  double mdpe = 0;   // median (even counts average the two central values)
  double stdpe = 0;  // population standard deviation
  long long n = 0;

  bool operator==(const ErrorStats&) const = default;
};

// Computed straight from a signed-percent error list; throws on empty input.
ErrorStats stats_from_errors(const std::vector<double>& errors);

// Total grams over a cycle through the shared model interface: the first
// sample is charged at zero acceleration, every following sample at the
// transition from its predecessor. Matches the oracle's own cycle
// accounting, so wrapping the oracle as the candidate yields exact zeros.
double cycle_total(const EmissionModel& model, const DrivingCycle& cycle, const FactorVector& x);

struct EvalRow {
  int scenario;  // index into the scenario list
  int cycle;     // index into the cycle list
  CycleStrategy strategy;
  double reference;  // grams
  double candidate;  // grams
  double pct_error;  // (candidate - reference) / reference * 100
};

struct HistogramSpec {
  double lo = -30.0;
  double hi = 30.0;
  int bins = 20;  // outliers land in the edge bins, so counts always sum to n
};

struct ValidationReport {
  ErrorStats overall;
  long long skipped = 0;  // evaluations dropped because the reference was <= 0
  std::map<std::string, ErrorStats> by_strategy;  // strategy token -> stats
  std::map<std::string, ErrorStats> by_factor;    // "grade=5" style slice -> stats
  HistogramSpec hist;
  std::vector<long long> histogram;
  std::vector<EvalRow> rows;  // raw evaluations, kept at desk scale
};

struct EvaluateOptions {
  int jobs = 0;  // 0: library default thread count
  HistogramSpec hist;
};

// Cross product of scenarios and cycles; candidate and reference totals both
// go through cycle_total. Throws std::invalid_argument on empty inputs and
// std::runtime_error when every pair was skipped.
ValidationReport evaluate(const EmissionModel& candidate, const EmissionModel& reference,
                          const std::vector<FactorVector>& scenarios,
                          const std::vector<LabeledCycle>& cycles,
                          const EvaluateOptions& opts = {});
// Single-threaded twin kept as the comparison baseline; identical output.
ValidationReport evaluate_serial(const EmissionModel& candidate, const EmissionModel& reference,
                                 const std::vector<FactorVector>& scenarios,
                                 const std::vector<LabeledCycle>& cycles,
                                 const EvaluateOptions& opts = {});

// JSON carries the aggregates (not the raw rows); round-trips exactly.
std::string report_to_json(const ValidationReport& report);
ValidationReport report_from_json(const std::string& text);

// Fixed-width human-readable summary table.
std::string render_table(const ValidationReport& report);

// Raw per-evaluation errors (scenario, cycle, strategy, totals, error).
void write_errors_csv(const ValidationReport& report, const std::string& path);

}  // namespace nmoves
