#include "nmoves/validation.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "json.hpp"
#include "nmoves/util.hpp"

namespace nmoves {

ErrorStats stats_from_errors(const std::vector<double>& errors) {
  if (errors.empty()) throw std::invalid_argument("no errors to aggregate");
  ErrorStats s;
  s.n = static_cast<long long>(errors.size());
  double sum = 0, sum_abs = 0;
  for (double e : errors) {
    sum += e;
    sum_abs += std::abs(e);
  }
  s.mpe = sum / s.n;
  s.mape = sum_abs / s.n;
  double var = 0;
  for (double e : errors) var += (e - s.mpe) * (e - s.mpe);
  s.stdpe = std::sqrt(var / s.n);
  std::vector<double> sorted = errors;
  std::sort(sorted.begin(), sorted.end());
  size_t mid = sorted.size() / 2;
  s.mdpe = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

double cycle_total(const EmissionModel& model, const DrivingCycle& cycle, const FactorVector& x) {
  if (cycle.speeds.empty()) throw std::invalid_argument("empty driving cycle");
  if (cycle.dt <= 0) throw std::invalid_argument("cycle dt must be positive");
  double total = model.emission(cycle.speeds[0], 0.0, x);
  for (size_t t = 1; t < cycle.speeds.size(); ++t) {
    double a = (cycle.speeds[t] - cycle.speeds[t - 1]) / cycle.dt;
    total += model.emission(cycle.speeds[t - 1], a, x);
  }
  return total;
}

namespace {

std::string factor_label(const char* name, const std::string& value) {
  return std::string(name) + "=" + value;
}

ValidationReport run_evaluate(const EmissionModel& candidate, const EmissionModel& reference,
                              const std::vector<FactorVector>& scenarios,
                              const std::vector<LabeledCycle>& cycles,
                              const EvaluateOptions& opts, bool parallel) {
  if (scenarios.empty()) throw std::invalid_argument("no scenarios to evaluate");
  if (cycles.empty()) throw std::invalid_argument("no cycles to evaluate");
  if (opts.hist.bins <= 0 || !(opts.hist.lo < opts.hist.hi)) {
    throw std::invalid_argument("bad histogram spec");
  }

  const long long total = static_cast<long long>(scenarios.size()) *
                          static_cast<long long>(cycles.size());
  std::vector<EvalRow> rows(static_cast<size_t>(total));
  std::vector<char> keep(static_cast<size_t>(total), 0);
  std::string first_error;

  #pragma omp parallel for schedule(static) if (parallel) num_threads(opts.jobs > 0 ? opts.jobs : omp_get_max_threads())
  for (long long k = 0; k < total; ++k) {
    try {
      int si = static_cast<int>(k / static_cast<long long>(cycles.size()));
      int ci = static_cast<int>(k % static_cast<long long>(cycles.size()));
      const auto& x = scenarios[si];
      const auto& lc = cycles[ci];
      double ref = cycle_total(reference, lc.cycle, x);
      if (ref <= 0) continue;  // counted as skipped below
      double cand = cycle_total(candidate, lc.cycle, x);
      rows[k] = EvalRow{si, ci, lc.strategy, ref, cand, (cand - ref) / ref * 100.0};
      keep[k] = 1;
    } catch (const std::exception& e) {
      #pragma omp critical(nmoves_validate_error)
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) throw std::runtime_error("evaluation failed: " + first_error);

  ValidationReport report;
  report.hist = opts.hist;
  report.histogram.assign(static_cast<size_t>(opts.hist.bins), 0);
  report.rows.reserve(static_cast<size_t>(total));
  std::vector<double> errors;
  std::map<std::string, std::vector<double>> strategy_errors;
  std::map<std::string, std::vector<double>> factor_errors;
  const double width = (opts.hist.hi - opts.hist.lo) / opts.hist.bins;
  for (long long k = 0; k < total; ++k) {
    if (!keep[k]) {
      ++report.skipped;
      continue;
    }
    const EvalRow& row = rows[static_cast<size_t>(k)];
    report.rows.push_back(row);
    errors.push_back(row.pct_error);
    strategy_errors[to_token(row.strategy)].push_back(row.pct_error);
    const auto& x = scenarios[row.scenario];
    factor_errors[factor_label("vtype", to_token(x.vtype))].push_back(row.pct_error);
    factor_errors[factor_label("fuel", to_token(x.fuel))].push_back(row.pct_error);
    factor_errors[factor_label("grade", format_double(x.grade))].push_back(row.pct_error);
    factor_errors[factor_label("temp_f", format_double(x.temp_f))].push_back(row.pct_error);
    factor_errors[factor_label("age_year", format_double(x.age_year))].push_back(row.pct_error);
    int bin = static_cast<int>(std::floor((row.pct_error - opts.hist.lo) / width));
    bin = std::clamp(bin, 0, opts.hist.bins - 1);
    ++report.histogram[static_cast<size_t>(bin)];
  }
  if (errors.empty()) {
    throw std::runtime_error("every evaluation was skipped (non-positive reference totals)");
  }
  report.overall = stats_from_errors(errors);
  for (const auto& [token, errs] : strategy_errors) {
    report.by_strategy[token] = stats_from_errors(errs);
  }
  for (const auto& [label, errs] : factor_errors) {
    report.by_factor[label] = stats_from_errors(errs);
  }
  return report;
}

nlohmann::json stats_to_json(const ErrorStats& s) {
  return {{"mape", s.mape}, {"mpe", s.mpe}, {"mdpe", s.mdpe}, {"stdpe", s.stdpe}, {"n", s.n}};
}

ErrorStats stats_from_json(const nlohmann::json& j) {
  ErrorStats s;
  s.mape = j.at("mape").get<double>();
  s.mpe = j.at("mpe").get<double>();
  s.mdpe = j.at("mdpe").get<double>();
  s.stdpe = j.at("stdpe").get<double>();
  s.n = j.at("n").get<long long>();
  return s;
}

}  // namespace

ValidationReport evaluate(const EmissionModel& candidate, const EmissionModel& reference,
                          const std::vector<FactorVector>& scenarios,
                          const std::vector<LabeledCycle>& cycles, const EvaluateOptions& opts) {
  return run_evaluate(candidate, reference, scenarios, cycles, opts, true);
}

ValidationReport evaluate_serial(const EmissionModel& candidate, const EmissionModel& reference,
                                 const std::vector<FactorVector>& scenarios,
                                 const std::vector<LabeledCycle>& cycles,
                                 const EvaluateOptions& opts) {
  return run_evaluate(candidate, reference, scenarios, cycles, opts, false);
}

std::string report_to_json(const ValidationReport& report) {
  nlohmann::json j;
  j["overall"] = stats_to_json(report.overall);
  j["skipped"] = report.skipped;
  nlohmann::json strat = nlohmann::json::object();
  for (const auto& [token, s] : report.by_strategy) strat[token] = stats_to_json(s);
  j["by_strategy"] = strat;
  nlohmann::json fact = nlohmann::json::object();
  for (const auto& [label, s] : report.by_factor) fact[label] = stats_to_json(s);
  j["by_factor"] = fact;
  j["histogram"] = {{"lo", report.hist.lo},
                    {"hi", report.hist.hi},
                    {"bins", report.hist.bins},
                    {"counts", report.histogram}};
  return j.dump(2) + "\n";
}

ValidationReport report_from_json(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  ValidationReport report;
  report.overall = stats_from_json(j.at("overall"));
  report.skipped = j.at("skipped").get<long long>();
  for (const auto& [token, s] : j.at("by_strategy").items()) {
    report.by_strategy[token] = stats_from_json(s);
  }
  for (const auto& [label, s] : j.at("by_factor").items()) {
    report.by_factor[label] = stats_from_json(s);
  }
  const auto& h = j.at("histogram");
  report.hist.lo = h.at("lo").get<double>();
  report.hist.hi = h.at("hi").get<double>();
  report.hist.bins = h.at("bins").get<int>();
  report.histogram = h.at("counts").get<std::vector<long long>>();
  return report;
}

std::string render_table(const ValidationReport& report) {
  std::string out;
  char line[160];
  auto add = [&](const std::string& group, const ErrorStats& s) {
    std::snprintf(line, sizeof line, "%-28s %8lld %9.3f %9.3f %9.3f %9.3f\n", group.c_str(),
                  s.n, s.mape, s.mpe, s.mdpe, s.stdpe);
    out += line;
  };
  std::snprintf(line, sizeof line, "%-28s %8s %9s %9s %9s %9s\n", "group", "n", "mape",
                "mpe", "mdpe", "stdpe");
  out += line;
  add("overall", report.overall);
  for (const auto& [token, s] : report.by_strategy) add("strategy:" + token, s);
  for (const auto& [label, s] : report.by_factor) add(label, s);
  if (report.skipped > 0) {
    std::snprintf(line, sizeof line, "skipped evaluations: %lld\n", report.skipped);
    out += line;
  }
  return out;
}

void write_errors_csv(const ValidationReport& report, const std::string& path) {
  std::string text = "scenario,cycle,strategy,reference_g,candidate_g,pct_error\n";
  for (const auto& row : report.rows) {
    text += std::to_string(row.scenario);
    text += ',';
    text += std::to_string(row.cycle);
    text += ',';
    text += to_token(row.strategy);
    text += ',';
    text += format_double(row.reference);
    text += ',';
    text += format_double(row.candidate);
    text += ',';
    text += format_double(row.pct_error);
    text += '\n';
  }
  write_file_atomic(path, text);
}

}  // namespace nmoves
