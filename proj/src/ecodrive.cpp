#include "nmoves/ecodrive.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "nmoves/util.hpp"

namespace nmoves {

void EcoProblem::validate() const {
  if (family == nullptr) throw std::invalid_argument("problem needs an emission model");
  if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
  if (dt <= 0) throw std::invalid_argument("dt must be positive");
  if (!(q3 <= q4)) throw std::invalid_argument("terminal window is empty (q3 > q4)");
  if (!(v_min < v_max)) throw std::invalid_argument("speed box is empty");
  if (!(q2 >= v_min && q2 <= v_max)) {
    throw std::invalid_argument("initial speed outside the speed box");
  }
  if (!(a_min < 0 && 0 < a_max)) {
    throw std::invalid_argument("acceleration box must straddle zero");
  }
  if (w_e < 0 || w_v < 0) throw std::invalid_argument("weights must be non-negative");
  for (double f : {q1, q2, q3, q5, env.grade, env.temp_f, env.humidity, env.age_year}) {
    if (!std::isfinite(f)) throw std::invalid_argument("non-finite problem field");
  }
}

Trajectory rollout(const std::vector<double>& actions, const EcoProblem& problem) {
  const int n = problem.horizon;
  if (static_cast<int>(actions.size()) != n) {
    throw std::invalid_argument("action sequence length must equal the horizon");
  }
  Trajectory traj;
  traj.accelerations = actions;
  traj.positions.reserve(n + 1);
  traj.speeds.reserve(n + 1);
  traj.positions.push_back(problem.q1);
  traj.speeds.push_back(problem.q2);
  double v = problem.q2, x = problem.q1;
  for (int t = 0; t < n; ++t) {
    double e = problem.family->predict(v, actions[t], problem.env);
    double v_next = v + actions[t] * problem.dt;
    x += 0.5 * (v + v_next) * problem.dt;
    traj.total_emission += e;
    traj.objective += problem.w_e * e - problem.w_v * v_next;
    v = v_next;
    traj.positions.push_back(x);
    traj.speeds.push_back(v);
  }

  std::set<std::string> tags;
  for (double a : actions) {
    if (a < problem.a_min - kConstraintTol || a > problem.a_max + kConstraintTol) {
      tags.insert("accel_bounds");
    }
  }
  for (double s : traj.speeds) {
    if (s < problem.v_min - kConstraintTol || s > problem.v_max + kConstraintTol) {
      tags.insert("speed_bounds");
    }
  }
  for (double p : traj.positions) {
    if (p < problem.q1 - kConstraintTol) tags.insert("position_monotone");
  }
  if (x < problem.q3 - kConstraintTol || x > problem.q4 + kConstraintTol) {
    tags.insert("terminal_window");
  }
  if (v < problem.q5 - kConstraintTol) tags.insert("terminal_speed");
  traj.violations.assign(tags.begin(), tags.end());
  return traj;
}

namespace {

// Forward-sequential projection keeping both boxes satisfied exactly: given
// the speed the prefix produced, each action is clamped so the next speed
// stays inside [v_min, v_max].
std::vector<double> project(const std::vector<double>& raw, const EcoProblem& p) {
  std::vector<double> actions(raw.size());
  double v = p.q2;
  for (size_t t = 0; t < raw.size(); ++t) {
    double lo = std::max(p.a_min, (p.v_min - v) / p.dt);
    double hi = std::min(p.a_max, (p.v_max - v) / p.dt);
    actions[t] = std::clamp(raw[t], lo, hi);
    v += actions[t] * p.dt;
  }
  return actions;
}

struct PenaltyEval {
  double value = 0;        // objective + rho * penalty
  double penalty = 0;      // squared constraint violations
  double objective = 0;    // true objective
};

PenaltyEval penalized_value(const std::vector<double>& actions, const EcoProblem& p,
                            double rho) {
  const int n = p.horizon;
  PenaltyEval out;
  double v = p.q2, x = p.q1;
  for (int t = 0; t < n; ++t) {
    double e = p.family->predict(v, actions[t], p.env);
    double v_next = v + actions[t] * p.dt;
    x += 0.5 * (v + v_next) * p.dt;
    v = v_next;
    out.objective += p.w_e * e - p.w_v * v_next;
    double behind = std::max(0.0, p.q1 - x);
    out.penalty += behind * behind;
  }
  double below = std::max(0.0, p.q3 - x);
  double above = std::max(0.0, x - p.q4);
  double slow = std::max(0.0, p.q5 - v);
  out.penalty += below * below + above * above + slow * slow;
  out.value = out.objective + rho * out.penalty;
  return out;
}

// Reverse accumulation through the trapezoid dynamics and the model.
std::vector<double> penalized_gradient(const std::vector<double>& actions, const EcoProblem& p,
                                       double rho) {
  const int n = p.horizon;
  std::vector<double> speeds(n + 1), positions(n + 1);
  std::vector<double> gv(n), ga(n);  // model input gradients per step
  speeds[0] = p.q2;
  positions[0] = p.q1;
  for (int t = 0; t < n; ++t) {
    auto g = p.family->predict_grad(speeds[t], actions[t], p.env);
    gv[t] = g[0];
    ga[t] = g[1];
    speeds[t + 1] = speeds[t] + actions[t] * p.dt;
    positions[t + 1] = positions[t] + 0.5 * (speeds[t] + speeds[t + 1]) * p.dt;
  }

  std::vector<double> lam_v(n + 1, 0.0), lam_x(n + 1, 0.0);
  for (int t = 1; t <= n; ++t) {
    lam_v[t] = -p.w_v;
    lam_x[t] = -2.0 * rho * std::max(0.0, p.q1 - positions[t]);
  }
  lam_x[n] += 2.0 * rho * (std::max(0.0, positions[n] - p.q4) - std::max(0.0, p.q3 - positions[n]));
  lam_v[n] += -2.0 * rho * std::max(0.0, p.q5 - speeds[n]);

  std::vector<double> grad(n);
  for (int t = n - 1; t >= 0; --t) {
    double lv = lam_v[t + 1] + lam_x[t + 1] * 0.5 * p.dt;  // full dJ/dv(t+1)
    grad[t] = p.w_e * ga[t] + lv * p.dt;
    lam_v[t] += lv + lam_x[t + 1] * 0.5 * p.dt + p.w_e * gv[t];
    lam_x[t] += lam_x[t + 1];
  }
  return grad;
}

// Constant-action seed bisected so the terminal position lands on target.
std::vector<double> cruise_seed(const EcoProblem& p, double target) {
  auto terminal_x = [&](double c) {
    auto acts = project(std::vector<double>(p.horizon, c), p);
    double v = p.q2, x = p.q1;
    for (double a : acts) {
      double v_next = v + a * p.dt;
      x += 0.5 * (v + v_next) * p.dt;
      v = v_next;
    }
    return x;
  };
  double lo = p.a_min, hi = p.a_max;
  for (int i = 0; i < 60; ++i) {
    double mid = 0.5 * (lo + hi);
    (terminal_x(mid) < target ? lo : hi) = mid;
  }
  return project(std::vector<double>(p.horizon, 0.5 * (lo + hi)), p);
}

struct Candidate {
  std::vector<double> actions;
  double objective;
};

}  // namespace

std::vector<double> objective_gradient(const std::vector<double>& actions,
                                       const EcoProblem& problem) {
  if (static_cast<int>(actions.size()) != problem.horizon) {
    throw std::invalid_argument("action sequence length must equal the horizon");
  }
  return penalized_gradient(actions, problem, 0.0);
}

SolveResult solve_horizon(const EcoProblem& problem, const std::vector<double>& init) {
  problem.validate();
  const int n = problem.horizon;
  if (!init.empty() && static_cast<int>(init.size()) != n) {
    throw std::invalid_argument("warm-start length must equal the horizon");
  }

  auto terminal_state = [&](const std::vector<double>& acts) {
    double v = problem.q2, x = problem.q1;
    for (double a : acts) {
      double v_next = v + a * problem.dt;
      x += 0.5 * (v + v_next) * problem.dt;
      v = v_next;
    }
    return std::pair{x, v};
  };
  auto full_accel = project(std::vector<double>(n, problem.a_max), problem);
  auto full_brake = project(std::vector<double>(n, problem.a_min), problem);
  auto [x_hi, v_hi] = terminal_state(full_accel);
  auto [x_lo, v_lo] = terminal_state(full_brake);
  if (x_hi < problem.q3 - kConstraintTol) {
    throw InfeasibleProblem("terminal window beyond reach", {"terminal_window"});
  }
  if (x_lo > problem.q4 + kConstraintTol) {
    throw InfeasibleProblem("terminal window already passed", {"terminal_window"});
  }
  if (v_hi < problem.q5 - kConstraintTol) {
    throw InfeasibleProblem("terminal speed beyond reach", {"terminal_speed"});
  }

  std::vector<std::vector<double>> seeds;
  if (!init.empty()) seeds.push_back(project(init, problem));
  seeds.push_back(project(std::vector<double>(n, 0.0), problem));
  seeds.push_back(full_accel);
  seeds.push_back(full_brake);
  double window_hi = std::min(problem.q4, x_hi);
  seeds.push_back(cruise_seed(problem, 0.5 * (problem.q3 + window_hi)));

  bool have_best = false;
  Candidate best{};
  double least_penalty = std::numeric_limits<double>::infinity();
  std::vector<double> least_penalty_actions;
  auto consider = [&](const std::vector<double>& acts) {
    auto eval = penalized_value(acts, problem, 0.0);
    if (eval.penalty < least_penalty) {
      least_penalty = eval.penalty;
      least_penalty_actions = acts;
    }
    if (eval.penalty > 0) {
      // The boxes hold exactly for projected iterates, so any residual
      // penalty means a terminal or no-reversing violation beyond square
      // roots of kConstraintTol^2 terms; gate on the rolled-out tags.
      auto traj = rollout(acts, problem);
      if (!traj.feasible()) return;
      if (!have_best || traj.objective < best.objective) {
        have_best = true;
        best = {acts, traj.objective};
      }
      return;
    }
    if (!have_best || eval.objective < best.objective) {
      have_best = true;
      best = {acts, eval.objective};
    }
  };

  for (const auto& seed : seeds) {
    consider(seed);
    auto a = seed;
    for (double rho : {1.0, 1e1, 1e2, 1e3, 1e4, 1e5, 1e6}) {
      double step = 1.0;
      int stall = 0;
      for (int iter = 0; iter < 60 && stall < 3; ++iter) {
        auto grad = penalized_gradient(a, problem, rho);
        double norm2 = 0;
        for (double g : grad) norm2 += g * g;
        if (norm2 < 1e-18) break;
        double base = penalized_value(a, problem, rho).value;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
          std::vector<double> trial(a.size());
          for (size_t k = 0; k < a.size(); ++k) trial[k] = a[k] - step * grad[k];
          trial = project(trial, problem);
          double val = penalized_value(trial, problem, rho).value;
          if (val <= base - 1e-4 * step * norm2 || val < base - 1e-12 * std::abs(base)) {
            double moved = 0;
            for (size_t k = 0; k < a.size(); ++k) moved = std::max(moved, std::abs(trial[k] - a[k]));
            a = std::move(trial);
            consider(a);
            accepted = true;
            stall = moved < 1e-10 ? stall + 1 : 0;
            step *= 1.5;
            break;
          }
          step *= 0.5;
          if (step < 1e-14) break;
        }
        if (!accepted) break;
      }
    }
  }

  if (!have_best) {
    auto traj = rollout(least_penalty_actions, problem);
    std::string msg = "no feasible trajectory found; violated:";
    for (const auto& tag : traj.violations) msg += " " + tag;
    throw InfeasibleProblem(msg, traj.violations);
  }
  return {best.actions, rollout(best.actions, problem)};
}

SolveResult grid_search_reference(const EcoProblem& problem, int levels) {
  problem.validate();
  const int n = problem.horizon;
  if (n > 8) throw std::invalid_argument("grid search is limited to horizons of 8 steps");
  if (levels < 2 || std::pow(levels, n) > 2e6) {
    throw std::invalid_argument("bad discretization level count");
  }
  std::vector<int> idx(n, 0);
  std::vector<double> actions(n);
  const double span = (problem.a_max - problem.a_min) / (levels - 1);
  bool have_best = false;
  SolveResult best;
  while (true) {
    for (int t = 0; t < n; ++t) actions[t] = problem.a_min + idx[t] * span;
    auto traj = rollout(actions, problem);
    if (traj.feasible() && (!have_best || traj.objective < best.trajectory.objective)) {
      have_best = true;
      best = {actions, std::move(traj)};
    }
    int t = 0;
    while (t < n && ++idx[t] == levels) idx[t++] = 0;
    if (t == n) break;
  }
  if (!have_best) {
    throw InfeasibleProblem("no feasible grid point", {"terminal_window"});
  }
  return best;
}

RecedingResult run_receding_horizon(const EcoProblem& problem, int total_steps,
                                    const std::vector<double>& init) {
  problem.validate();
  const int total = total_steps < 0 ? problem.horizon : total_steps;
  if (total < 1) throw std::invalid_argument("total steps must be at least 1");

  RecedingResult result;
  std::vector<double> applied;
  std::vector<double> warm = init;
  double x = problem.q1, v = problem.q2;
  for (int k = 0; k < total; ++k) {
    EcoProblem sub = problem;
    sub.horizon = total - k;
    sub.q1 = x;
    sub.q2 = v;
    try {
      auto res = solve_horizon(sub, warm);
      double a0 = res.actions.front();
      applied.push_back(a0);
      double v_next = v + a0 * problem.dt;
      x += 0.5 * (v + v_next) * problem.dt;
      v = v_next;
      warm.assign(res.actions.begin() + 1, res.actions.end());
    } catch (const InfeasibleProblem& e) {
      result.report = e.what();
      break;
    }
  }
  result.steps_completed = static_cast<int>(applied.size());
  result.completed = result.steps_completed == total;
  if (!applied.empty()) {
    EcoProblem closed = problem;
    closed.horizon = result.steps_completed;
    result.trajectory = rollout(applied, closed);
  }
  return result;
}

const char* to_token(SweepDimension d) {
  switch (d) {
    case SweepDimension::Grade: return "grade";
    case SweepDimension::Temperature: return "temp_f";
    case SweepDimension::Humidity: return "humidity";
  }
  throw std::invalid_argument("unknown sweep dimension");
}

SweepDimension sweep_dimension_from_token(const std::string& token) {
  if (token == "grade") return SweepDimension::Grade;
  if (token == "temp_f") return SweepDimension::Temperature;
  if (token == "humidity") return SweepDimension::Humidity;
  throw std::invalid_argument("unknown sweep dimension token: " + token);
}

std::vector<SolveResult> environment_sweep(const EcoProblem& base, SweepDimension dim,
                                           const std::vector<double>& values) {
  base.validate();
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");

  const auto& entry = base.family->entry(base.env.vtype, base.env.fuel);
  auto in_range = [&](int input, double value) {
    return value >= entry.input_lo[input] && value <= entry.input_hi[input];
  };
  std::vector<EcoProblem> variants(values.size(), base);
  for (size_t i = 0; i < values.size(); ++i) {
    auto& p = variants[i];
    // Pin the non-swept dimensions at the reference point.
    p.env.grade = 0.0;
    p.env.temp_f = 60.0;
    p.env.humidity = 55.0;
    int input = dim == SweepDimension::Grade ? 2 : dim == SweepDimension::Temperature ? 3 : 4;
    if (!in_range(input, values[i])) {
      throw std::invalid_argument("sweep value outside the model's input range");
    }
    if (dim == SweepDimension::Grade) p.env.grade = values[i];
    if (dim == SweepDimension::Temperature) p.env.temp_f = values[i];
    if (dim == SweepDimension::Humidity) p.env.humidity = values[i];
  }

  std::vector<SolveResult> results(values.size());
  std::string first_error;
  #pragma omp parallel for schedule(dynamic)
  for (long long i = 0; i < static_cast<long long>(variants.size()); ++i) {
    try {
      results[i] = solve_horizon(variants[i]);
    } catch (const std::exception& e) {
      #pragma omp critical(nmoves_sweep_error)
      if (first_error.empty()) first_error = e.what();
    }
  }
  if (!first_error.empty()) throw std::runtime_error("sweep failed: " + first_error);
  return results;
}

void save_trajectory_csv(const Trajectory& traj, const EcoProblem& problem,
                         const std::string& path) {
  std::string text = "t_s,x_m,v_mps,a_mps2,e_g\n";
  const size_t n = traj.accelerations.size();
  for (size_t t = 0; t <= n; ++t) {
    text += format_double(static_cast<double>(t) * problem.dt);
    text += ',';
    text += format_double(traj.positions[t]);
    text += ',';
    text += format_double(traj.speeds[t]);
    text += ',';
    if (t < n) {
      text += format_double(traj.accelerations[t]);
      text += ',';
      text += format_double(problem.family->predict(traj.speeds[t], traj.accelerations[t],
                                                    problem.env));
    } else {
      text += ',';  // terminal state row has no action
    }
    text += '\n';
  }
  write_file_atomic(path, text);
}

EcoProblem problem_from_config(const KeyValueConfig& cfg, const SurrogateFamily& family) {
  EcoProblem p;
  p.family = &family;
  p.horizon = cfg.get_int("horizon", p.horizon);
  p.dt = cfg.get_double("dt", p.dt);
  p.w_e = cfg.get_double("w_e", p.w_e);
  p.w_v = cfg.get_double("w_v", p.w_v);
  p.v_min = cfg.get_double("v_min", p.v_min);
  p.v_max = cfg.get_double("v_max", p.v_max);
  p.a_min = cfg.get_double("a_min", p.a_min);
  p.a_max = cfg.get_double("a_max", p.a_max);
  p.q1 = cfg.get_double("q1", p.q1);
  p.q2 = cfg.get_double("q2", p.q2);
  p.q3 = cfg.get_double("q3", p.q3);
  p.q4 = cfg.get_double("q4", p.q4);
  p.q5 = cfg.get_double("q5", p.q5);
  p.env.grade = cfg.get_double("grade", p.env.grade);
  p.env.temp_f = cfg.get_double("temp_f", p.env.temp_f);
  p.env.humidity = cfg.get_double("humidity", p.env.humidity);
  p.env.age_year = cfg.get_double("age_year", p.env.age_year);
  p.env.vtype = vehicle_type_from_token(cfg.get("vtype", to_token(p.env.vtype)));
  p.env.fuel = fuel_type_from_token(cfg.get("fuel", to_token(p.env.fuel)));
  p.validate();
  return p;
}

}  // namespace nmoves
