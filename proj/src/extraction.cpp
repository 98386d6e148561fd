#include "nmoves/extraction.hpp"

#include <omp.h>

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <stdexcept>

#include "json.hpp"
#include "nmoves/dataset.hpp"
#include "nmoves/util.hpp"
#include "nmoves/version.hpp"

namespace nmoves {

namespace {

DatasetPartition scenario_partition(const FactorGrid& grid, const OpModeTable& table,
                                    long long scenario_index, const ExtractOptions& opt,
                                    long long* dropped) {
  DatasetPartition p;
  p.provenance.subset = "scenario=" + std::to_string(scenario_index) +
                        ";n=" + std::to_string(opt.n) + ";dt=" + format_double(opt.dt);
  p.provenance.version = kVersion;
  auto all = extract_scenario(grid, table, scenario_index, opt.n, opt.dt);
  if (!opt.drop) {
    p.records = std::move(all);
    return p;
  }
  p.records.reserve(all.size());
  for (size_t i = 0; i < all.size(); ++i) {
    if (opt.drop(scenario_index, static_cast<long long>(i))) {
      ++*dropped;
    } else {
      p.records.push_back(all[i]);
    }
  }
  return p;
}

ExtractionReport run_extraction(const FactorGrid& grid, const OpModeTable& table,
                                const std::string& out_dir, const ExtractOptions& opt,
                                bool parallel) {
  namespace fs = std::filesystem;
  if (opt.scenario_begin < 0 || opt.scenario_end > grid.scenario_count() ||
      opt.scenario_begin > opt.scenario_end) {
    throw std::invalid_argument("scenario range outside the grid");
  }
  if (opt.n < 1) throw std::invalid_argument("baseline length must be at least 1");
  fs::create_directories(out_dir);

  ExtractionReport rep;
  rep.scenario_begin = opt.scenario_begin;
  rep.scenario_end = opt.scenario_end;
  rep.out_dir = out_dir;

  const long long count = opt.scenario_end - opt.scenario_begin;
  std::atomic<long long> written{0}, skipped{0}, records{0}, dropped{0};
  std::atomic<bool> failed{false};
  std::string first_error;
  #pragma omp parallel for schedule(dynamic) if (parallel) num_threads(opt.jobs > 0 ? opt.jobs : omp_get_max_threads())
  for (long long k = 0; k < count; ++k) {
    if (failed.load()) continue;
    const long long s = opt.scenario_begin + k;
    const fs::path path = fs::path(out_dir) / scenario_file_name(s, opt.binary);
    try {
      if (fs::exists(path)) {
        skipped.fetch_add(1);
        continue;
      }
      long long local_dropped = 0;
      DatasetPartition p = scenario_partition(grid, table, s, opt, &local_dropped);
      write_partition(p, path.string());
      written.fetch_add(1);
      records.fetch_add(static_cast<long long>(p.records.size()));
      dropped.fetch_add(local_dropped);
    } catch (const std::exception& e) {
      #pragma omp critical(nmoves_extract_error)
      {
        if (!failed.exchange(true)) first_error = e.what();
      }
    }
  }
  if (failed.load()) {
    // completed partitions stay on disk as the resume checkpoint
    throw std::runtime_error("extraction aborted: " + first_error);
  }
  rep.scenarios_written = written.load();
  rep.scenarios_skipped = skipped.load();
  rep.records_written = records.load();
  rep.records_dropped = dropped.load();
  return rep;
}

}  // namespace

CyclePair build_cycle_pair(double v, double a, int n, double dt) {
  if (v < 0) throw InvalidCombinationError("baseline speed must be non-negative");
  if (n < 1) throw std::invalid_argument("baseline length must be at least 1");
  if (dt <= 0) throw std::invalid_argument("dt must be positive");
  const double v2 = v + a * dt;
  if (v2 < 0) {
    throw InvalidCombinationError("transition to negative speed: v=" + format_double(v) +
                                  " a=" + format_double(a) + " dt=" + format_double(dt));
  }
  CyclePair pair;
  pair.n = n;
  pair.dt = dt;
  pair.baseline.speeds.assign(static_cast<size_t>(n), v);
  pair.baseline.dt = dt;
  pair.custom.speeds = pair.baseline.speeds;
  pair.custom.speeds.push_back(v2);
  pair.custom.dt = dt;
  return pair;
}

double instantaneous_emission(double v, double a, const FactorVector& x,
                              const OpModeTable& table, int n, double dt) {
  CyclePair pair = build_cycle_pair(v, a, n, dt);
  return table.cycle_emission(pair.custom, x) - table.cycle_emission(pair.baseline, x);
}

std::vector<EmissionRecord> extract_scenario(const FactorGrid& grid, const OpModeTable& table,
                                             long long scenario_index, int n, double dt) {
  const FactorVector x = grid.scenario(scenario_index);
  std::vector<EmissionRecord> out;
  out.reserve(static_cast<size_t>(grid.valid_dynamics_count()));
  for (const auto& d : grid.enumerate_dynamics()) {
    EmissionRecord r;
    r.v = d.v;
    r.a = d.a;
    r.x = x;
    r.e = instantaneous_emission(d.v, d.a, x, table, n, dt);
    out.push_back(r);
  }
  return out;
}

std::string scenario_file_name(long long scenario_index, bool binary) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "scenario_%05lld", scenario_index);
  return std::string(buf) + (binary ? ".nmre" : ".csv");
}

ExtractionReport extract_dataset(const FactorGrid& grid, const OpModeTable& table,
                                 const std::string& out_dir, const ExtractOptions& opt) {
  return run_extraction(grid, table, out_dir, opt, true);
}

ExtractionReport extract_dataset_serial(const FactorGrid& grid, const OpModeTable& table,
                                        const std::string& out_dir, const ExtractOptions& opt) {
  return run_extraction(grid, table, out_dir, opt, false);
}

std::string ExtractionReport::to_json() const {
  nlohmann::json j;
  j["scenario_begin"] = scenario_begin;
  j["scenario_end"] = scenario_end;
  j["scenarios_written"] = scenarios_written;
  j["scenarios_skipped"] = scenarios_skipped;
  j["records_written"] = records_written;
  j["records_dropped"] = records_dropped;
  j["out_dir"] = out_dir;
  j["version"] = kVersion;
  return j.dump(2) + "\n";
}

}  // namespace nmoves
