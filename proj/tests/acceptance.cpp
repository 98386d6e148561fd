// Acceptance gate: each check prints one PASS/FAIL line with its headline
// numbers and runtime; the exit code is the number of failures.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "nmoves/cycles.hpp"
#include "nmoves/dataset.hpp"
#include "nmoves/ecodrive.hpp"
#include "nmoves/extraction.hpp"
#include "nmoves/factors.hpp"
#include "nmoves/oracle.hpp"
#include "nmoves/polynomial.hpp"
#include "nmoves/surrogate.hpp"
#include "nmoves/util.hpp"
#include "nmoves/validation.hpp"

namespace fs = std::filesystem;
using namespace nmoves;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

// State shared between checks, filled in run order.
struct Shared {
  FactorGrid grid = FactorGrid::standard();
  OpModeTable table = OpModeTable::standard();

  // trained passenger-car entry and its data
  DatasetPartition train, test;
  std::vector<FactorVector> trained_scenarios;
  SurrogateFamily trained;
  double mlp_mape = 0, mlp_mpe = 0;

  // synthetic family covering all nine entries, floors from the engine
  SurrogateFamily full;
};

Shared S;

long long pc_scenario(int th, int g, int a) {
  return (static_cast<long long>(th * 11 + g) * 11 + a) * 9 + 1;
}

MlpParameters random_params(uint64_t seed, double scale) {
  MlpParameters m;
  m.input_lo = S.grid.input_lo();
  m.input_hi = S.grid.input_hi();
  Rng rng(seed);
  for (double& p : m.theta) p = rng.uniform(-0.5, 0.5);
  m.output_scale = scale;
  return m;
}

FactorVector random_factors(Rng& rng) {
  FactorVector x;
  x.grade = rng.uniform(-25.0, 25.0);
  x.temp_f = rng.uniform(28.0, 90.0);
  x.humidity = rng.uniform(25.0, 90.0);
  x.age_year = 2009 + rng.index(11);
  return x;
}

struct PctStats {
  double mape = 0, mpe = 0;
};

PctStats holdout_error(const SurrogateFamily& fam, const DatasetPartition& part) {
  double abs_sum = 0, signed_sum = 0;
  long long n = 0;
  for (const auto& r : part.records) {
    double pct = (fam.predict(r.v, r.a, r.x) - r.e) / std::max(r.e, kMapeTargetClamp) * 100.0;
    abs_sum += std::abs(pct);
    signed_sum += pct;
    ++n;
  }
  return {abs_sum / n, signed_sum / n};
}

// ---- checks, in run order ----------------------------------------------

Outcome check_grid_cardinalities() {
  long long dynamics = S.grid.valid_dynamics_count();
  long long scenarios = S.grid.scenario_count();
  long long product = dynamics * scenarios;
  bool pass = dynamics == 4791 && scenarios == 22869 && product == 109565379ll &&
              product == 109367240ll + 198139ll;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%lld dynamics, %lld scenarios, %lld product", dynamics,
                scenarios, product);
  return {pass, buf};
}

Outcome check_extraction_equivalence() {
  OracleModel direct(S.table);
  auto dynamics = S.grid.enumerate_dynamics();
  Rng rng(2024);
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    auto d = dynamics[rng.index(dynamics.size())];
    auto x = S.grid.scenario(static_cast<long long>(rng.index(S.grid.scenario_count())));
    double want = direct.emission(d.v, d.a, x);
    for (int n : {5, 10}) {
      double got = instantaneous_emission(d.v, d.a, x, S.table, n);
      worst = std::max(worst, std::abs(got - want) / want);
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "worst relative gap %.3g over 10000 points, n in {5, 10}", worst);
  return {worst <= 1e-9, buf};
}

Outcome check_surrogate_accuracy() {
  DatasetPartition corpus;
  for (int th : {0, 10, 20}) {
    for (int g : {2, 5, 8}) {
      for (int a : {1, 5, 9}) {
        auto recs = extract_scenario(S.grid, S.table, pc_scenario(th, g, a), 5, 1.0);
        corpus.records.insert(corpus.records.end(), recs.begin(), recs.end());
        S.trained_scenarios.push_back(S.grid.scenario(pc_scenario(th, g, a)));
      }
    }
  }
  std::tie(S.train, S.test) = split_partition(corpus, 0.8, 0.2, 9);

  TrainConfig cfg;  // 300 epochs, batch 1024, lr 1e-3, seed 1
  auto [params, log] = train_entry(S.grid, VehicleType::PassengerCar, FuelType::Gasoline,
                                   S.train, cfg);
  S.trained.set_entry(VehicleType::PassengerCar, FuelType::Gasoline, params);
  S.trained.set_floor(VehicleType::PassengerCar, FuelType::Gasoline,
                      build_floor_from_data(S.train, VehicleType::PassengerCar,
                                            FuelType::Gasoline));
  auto err = holdout_error(S.trained, S.test);
  S.mlp_mape = err.mape;
  S.mlp_mpe = err.mpe;
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu train points, holdout MAPE %.2f%% MPE %.2f%%",
                S.train.records.size(), err.mape, err.mpe);
  return {S.train.records.size() >= 100000 && err.mape <= 10.0 && std::abs(err.mpe) <= 5.0, buf};
}

Outcome check_polynomial_ordering() {
  auto poly = PolynomialModel::fit(S.grid, VehicleType::PassengerCar, FuelType::Gasoline,
                                   S.train, 3);
  double abs_sum = 0;
  for (const auto& r : S.test.records) {
    abs_sum += std::abs(poly.predict(r.v, r.a, r.x) - r.e) / std::max(r.e, kMapeTargetClamp);
  }
  double poly_mape = abs_sum / S.test.records.size() * 100.0;
  char buf[96];
  std::snprintf(buf, sizeof buf, "degree-3 MAPE %.2f%% vs network %.2f%%", poly_mape, S.mlp_mape);
  return {poly_mape > S.mlp_mape, buf};
}

Outcome check_gradients() {
  auto m = random_params(17, 2.5);
  Rng rng(18);
  double worst_input = 0;
  for (int i = 0; i < 1000; ++i) {
    DynamicsPoint d{rng.uniform(0.0, 33.0), rng.uniform(-4.5, 3.0)};
    auto x = random_factors(rng);
    auto g = grad_inputs(m, d.v, d.a, x);
    for (int dim = 0; dim < kMlpInputs; ++dim) {
      double h = 1e-5 * (m.input_hi[dim] - m.input_lo[dim]);
      auto bump = [&](double eps) {
        DynamicsPoint db = d;
        FactorVector xb = x;
        double* fields[] = {&db.v, &db.a, &xb.grade, &xb.temp_f, &xb.humidity, &xb.age_year};
        *fields[dim] += eps;
        return forward(m, db.v, db.a, xb);
      };
      double fd = (bump(h) - bump(-h)) / (2 * h);
      worst_input = std::max(worst_input,
                             std::abs(g[dim] - fd) / std::max({std::abs(fd), std::abs(g[dim]), 1e-6}));
    }
  }

  SurrogateFamily smooth;
  smooth.set_entry(VehicleType::PassengerCar, FuelType::Gasoline, random_params(19, 3.0));
  Rng prng(20);
  double worst_rollout = 0;
  for (int trial = 0; trial < 100; ++trial) {
    EcoProblem p;
    p.family = &smooth;
    p.horizon = 5;
    p.q2 = prng.uniform(2.0, 18.0);
    p.q3 = 0.0;
    p.env.grade = prng.uniform(-10.0, 10.0);
    p.w_e = prng.uniform(0.2, 2.0);
    p.w_v = prng.uniform(0.0, 0.5);
    std::vector<double> a(5);
    for (double& at : a) at = prng.uniform(-2.5, 2.5);
    auto grad = objective_gradient(a, p);
    for (int t = 0; t < 5; ++t) {
      const double h = 1e-6;
      auto ap = a, am = a;
      ap[t] += h;
      am[t] -= h;
      double fd = (rollout(ap, p).objective - rollout(am, p).objective) / (2 * h);
      worst_rollout = std::max(worst_rollout, std::abs(grad[t] - fd) /
                                                  std::max({std::abs(fd), std::abs(grad[t]), 1e-6}));
    }
  }
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "input gradients off by %.3g (1000 pts), rollout adjoint by %.3g (100 problems)",
                worst_input, worst_rollout);
  return {worst_input <= 1e-4 && worst_rollout <= 1e-3, buf};
}

Outcome check_idling_floor() {
  int k = 0;
  for (auto [vt, ft] : S.grid.vehicle_fuel_pairs()) {
    S.full.set_entry(vt, ft, random_params(101 + k, 2.0));
    S.full.set_floor(vt, ft, build_floor_from_oracle(S.grid, S.table, vt, ft));
    ++k;
  }
  Rng rng(55);
  long long checked = 0, violations = 0;
  for (long long s = 0; s < S.grid.scenario_count(); ++s) {
    auto x = S.grid.scenario(s);
    double floor = S.full.idling_floor(x);
    for (int i = 0; i < 100; ++i) {
      double v = rng.uniform(0.0, 33.0);
      double a = rng.uniform(-4.5, 3.0);
      if (S.full.predict(v, a, x) < floor) ++violations;
      ++checked;
    }
  }
  char buf[96];
  std::snprintf(buf, sizeof buf, "%lld predictions, %lld below their idling floor", checked,
                violations);
  return {checked == 2286900ll && violations == 0, buf};
}

Outcome check_validation_statistics() {
  auto planted = stats_from_errors({10.0, -10.0, 10.0, -10.0});
  bool planted_ok = planted.mape == 10.0 && planted.mpe == 0.0 && planted.mdpe == 0.0;

  OracleModel oracle(S.table);
  std::vector<FactorVector> self_scen;
  for (int i = 0; i < 10; ++i) {
    self_scen.push_back(S.grid.scenario(i * (S.grid.scenario_count() / 10)));
  }
  auto self_report = evaluate(oracle, oracle, self_scen, generate_suite(2, 3));
  auto zero = [](const ErrorStats& e) {
    return e.mape == 0.0 && e.mpe == 0.0 && e.mdpe == 0.0 && e.stdpe == 0.0;
  };
  bool self_ok = zero(self_report.overall);
  for (const auto& [key, st] : self_report.by_strategy) self_ok = self_ok && zero(st);
  for (const auto& [key, st] : self_report.by_factor) self_ok = self_ok && zero(st);

  std::vector<FactorVector> scen;
  for (int i = 0; i < 100; ++i) {
    scen.push_back(S.grid.scenario(i * (S.grid.scenario_count() / 100)));
  }
  FamilyModel candidate(S.full);
  auto report = evaluate(candidate, oracle, scen, generate_suite(20, 4));
  std::vector<double> errors;
  for (const auto& row : report.rows) errors.push_back(row.pct_error);
  auto brute = stats_from_errors(errors);
  auto close = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1.0});
  };
  bool brute_ok = report.overall.n == 10000 && close(brute.mape, report.overall.mape) &&
                  close(brute.mpe, report.overall.mpe) && close(brute.mdpe, report.overall.mdpe) &&
                  close(brute.stdpe, report.overall.stdpe);

  char buf[128];
  std::snprintf(buf, sizeof buf,
                "planted set %s, self-evaluation %s, brute-force match on %lld rows %s",
                planted_ok ? "exact" : "WRONG", self_ok ? "all zero" : "NONZERO",
                report.overall.n, brute_ok ? "exact" : "WRONG");
  return {planted_ok && self_ok && brute_ok, buf};
}

Outcome check_cross_product() {
  OracleModel oracle(S.table);
  FamilyModel candidate(S.trained);
  auto report = evaluate(candidate, oracle, S.trained_scenarios, generate_suite(5, 2));
  bool strategies_ok = report.by_strategy.size() == 5;
  for (const auto& [key, st] : report.by_strategy) strategies_ok = strategies_ok && st.n > 0;
  char buf[128];
  std::snprintf(buf, sizeof buf, "n=%lld cycle totals, MAPE %.2f%%, %zu strategy slices",
                report.overall.n, report.overall.mape, report.by_strategy.size());
  return {report.overall.n == 27 * 25 && report.overall.mape <= 10.0 && strategies_ok, buf};
}

Outcome check_mpc() {
  EcoProblem bang;
  bang.family = &S.trained;
  bang.horizon = 6;
  bang.q2 = 12.0;
  bang.v_max = 20.0;
  bang.w_e = 0.0;
  bang.w_v = 1.0;
  bang.q3 = 0.0;
  auto bang_res = solve_horizon(bang);
  bool bang_ok = bang_res.trajectory.feasible();
  double v = bang.q2;
  for (int t = 0; t < bang.horizon; ++t) {
    double expect = std::min(bang.a_max, (bang.v_max - v) / bang.dt);
    bang_ok = bang_ok && bang_res.actions[t] == expect;
    v += expect * bang.dt;
  }

  double worst_ratio = 0;
  bool grids_ok = true;
  int problem_id = 0;
  for (auto [q2, q3, q4, q5] : {std::array{10.0, 50.0, 75.0, 5.0},
                                std::array{14.0, 70.0, 90.0, 0.0},
                                std::array{6.0, 30.0, 60.0, 4.0}}) {
    EcoProblem p;
    p.family = &S.trained;
    p.horizon = 6;
    p.q2 = q2;
    p.q3 = q3;
    p.q4 = q4;
    p.q5 = q5;
    p.w_v = 0.05;
    auto reference = grid_search_reference(p, 5);
    auto res = solve_horizon(p);
    grids_ok = grids_ok && reference.trajectory.objective > 0 && res.trajectory.feasible() &&
               res.trajectory.objective <= 1.02 * reference.trajectory.objective;
    worst_ratio = std::max(worst_ratio,
                           res.trajectory.objective / reference.trajectory.objective);
    ++problem_id;
  }
  char buf[128];
  std::snprintf(buf, sizeof buf,
                "degenerate bang %s, solver/grid objective ratio %.4f on %d short problems",
                bang_ok ? "exact" : "WRONG", worst_ratio, problem_id);
  return {bang_ok && grids_ok, buf};
}

Outcome check_environment_response() {
  EcoProblem base;
  base.family = &S.trained;
  base.horizon = 18;
  base.q2 = 12.0;
  base.q3 = 120.0;
  base.q4 = 1e9;
  base.q5 = 5.0;
  auto swept = environment_sweep(base, SweepDimension::Grade, {-5.0, 0.0, 5.0});
  double min_pair = 1e9;
  bool sweep_feasible = true;
  for (size_t i = 0; i < swept.size(); ++i) {
    sweep_feasible = sweep_feasible && swept[i].trajectory.feasible();
    for (size_t j = i + 1; j < swept.size(); ++j) {
      double max_diff = 0;
      for (size_t t = 0; t < swept[i].trajectory.speeds.size(); ++t) {
        max_diff = std::max(max_diff, std::abs(swept[i].trajectory.speeds[t] -
                                               swept[j].trajectory.speeds[t]));
      }
      min_pair = std::min(min_pair, max_diff);
    }
  }

  // Matched signalized approach: the baseline follower reaches the line at
  // red, waits, then accelerates; the planner must achieve at least the same
  // terminal position and speed with emission as its only objective.
  CycleSpec spec;
  spec.strategy = CycleStrategy::IdmApproach;
  spec.duration_s = 40;
  spec.approach_v0 = 12.0;
  auto idm_cycle = generate_cycle(spec);
  const auto& vs = idm_cycle.speeds;
  std::vector<double> idm_actions;
  double x_final = 0;
  for (size_t t = 1; t < vs.size(); ++t) {
    idm_actions.push_back(vs[t] - vs[t - 1]);
    x_final += 0.5 * (vs[t - 1] + vs[t]);
  }
  FactorVector env;  // flat grade, 60 F, 55 %, 2019 passenger car
  double e_idm = 0;
  for (size_t t = 1; t < vs.size(); ++t) {
    e_idm += S.trained.predict(vs[t - 1], vs[t] - vs[t - 1], env);
  }
  EcoProblem match;
  match.family = &S.trained;
  match.horizon = static_cast<int>(idm_actions.size());
  match.q2 = vs.front();
  match.a_min = -4.5;
  match.v_max = 20.0;
  match.q3 = x_final - 1e-6;
  match.q4 = x_final + 5.0;
  match.q5 = vs.back() - 1e-6;
  match.w_v = 0.0;
  auto closed = run_receding_horizon(match, -1, idm_actions);
  bool idm_ok = closed.completed && closed.trajectory.feasible() &&
                closed.trajectory.total_emission <= e_idm;

  char buf[160];
  std::snprintf(buf, sizeof buf,
                "grade profiles differ by >= %.3f m/s, eco %.2f g vs follower %.2f g over %d s",
                min_pair, closed.trajectory.total_emission, e_idm, match.horizon);
  return {min_pair > 0.1 && sweep_feasible && idm_ok, buf};
}

Outcome check_serialization() {
  auto dir = fs::temp_directory_path() / "nmoves_acceptance";
  fs::create_directories(dir);
  DatasetPartition part;
  part.records = extract_scenario(S.grid, S.table, 7, 5, 1.0);
  part.provenance = {"scenario=7;n=5;dt=1", "0.1.0"};

  bool rt_ok = true;
  for (const char* ext : {".csv", ".nmre"}) {
    auto f1 = (dir / (std::string("p1") + ext)).string();
    auto f2 = (dir / (std::string("p2") + ext)).string();
    write_partition(part, f1);
    auto loaded = load_partitions({f1}, LoadOptions{});
    write_partition(loaded.partition, f2);
    rt_ok = rt_ok && read_file(f1) == read_file(f2);
  }

  auto m1 = (dir / "family1.nmnn").string();
  auto m2 = (dir / "family2.nmnn").string();
  S.full.save(m1);
  SurrogateFamily::load(m1).save(m2);
  auto model_size = fs::file_size(m1);
  bool model_ok = read_file(m1) == read_file(m2) && model_size <= 4ull * 1024 * 1024;
  fs::remove_all(dir);

  char buf[128];
  std::snprintf(buf, sizeof buf,
                "partition round-trips %s, nine-entry model %.2f MB round-trips %s",
                rt_ok ? "exact" : "DIFFER", model_size / (1024.0 * 1024.0),
                model_ok ? "exact" : "DIFFER");
  return {rt_ok && model_ok, buf};
}

}  // namespace

int main() {
  struct Check {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Check> checks = {
      {"grid cardinalities", check_grid_cardinalities},
      {"extraction equals the direct rate", check_extraction_equivalence},
      {"surrogate holdout accuracy", check_surrogate_accuracy},
      {"polynomial baseline ordering", check_polynomial_ordering},
      {"gradient correctness", check_gradients},
      {"idling floor lower bound", check_idling_floor},
      {"validation statistics exactness", check_validation_statistics},
      {"cross-product validation accuracy", check_cross_product},
      {"trajectory optimality and feasibility", check_mpc},
      {"environment response and follower comparison", check_environment_response},
      {"serialization round-trips", check_serialization},
  };

  int failures = 0;
  std::printf("acceptance: %zu checks\n", checks.size());
  for (size_t i = 0; i < checks.size(); ++i) {
    auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = checks[i].run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!outcome.pass) ++failures;
    std::printf("[%2zu/%zu] %s  %-45s (%.2f s)  %s\n", i + 1, checks.size(),
                outcome.pass ? "PASS" : "FAIL", checks[i].name, secs, outcome.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/%zu passed\n", checks.size() - failures, checks.size());
  return failures;
}
