#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "nmoves/config.hpp"
#include "nmoves/factors.hpp"
#include "nmoves/surrogate.hpp"

namespace nmoves {

// Balances the speed reward against gram-scale emission terms at cruise.
inline constexpr double kDefaultSpeedWeight = 0.25;

// Finite-horizon eco-driving problem: choose accelerations minimizing
//   sum_t [ w_e * M(a(t), v(t)) - w_v * v(t+1) ]
// subject to trapezoidal position dynamics, speed/acceleration boxes, a
// no-reversing condition, a terminal position window and a minimum terminal
// speed. The window encodes arriving at the stop line during the green.
struct EcoProblem {
  int horizon = 30;  // steps
  double dt = 1.0;
  double w_e = 1.0;
  double w_v = kDefaultSpeedWeight;
  double v_min = 0.0, v_max = 20.0;
  double a_min = -3.0, a_max = 3.0;
  double q1 = 0.0;    // initial position, m
  double q2 = 12.0;   // initial speed, m/s
  double q3 = 250.0;  // terminal position window low edge, m
  double q4 = 1e9;    // terminal position window high edge, m
  double q5 = 0.0;    // minimum terminal speed, m/s
  FactorVector env;   // defaults: grade 0 %, 60 F, 55 % humidity
  const SurrogateFamily* family = nullptr;

  void validate() const;  // throws std::invalid_argument
};

inline constexpr double kConstraintTol = 1e-6;

struct Trajectory {
  std::vector<double> positions;      // horizon + 1
  std::vector<double> speeds;         // horizon + 1
  std::vector<double> accelerations;  // horizon
  double total_emission = 0;  // grams over the horizon
  double objective = 0;
  // Violated-constraint tags ("speed_bounds", "terminal_window", ...);
  // empty means feasible within kConstraintTol.
  std::vector<std::string> violations;

  bool feasible() const { return violations.empty(); }
};

class InfeasibleProblem : public std::runtime_error {
 public:
  InfeasibleProblem(const std::string& msg, std::vector<std::string> violated)
      : std::runtime_error(msg), violations(std::move(violated)) {}
  std::vector<std::string> violations;
};

// Integrates the dynamics from (q1, q2) and scores the objective; constraint
// violations are recorded on the trajectory, never raised.
Trajectory rollout(const std::vector<double>& actions, const EcoProblem& problem);

// Gradient of the rollout objective with respect to the actions, by adjoint
// accumulation through the dynamics and the surrogate's input gradients.
std::vector<double> objective_gradient(const std::vector<double>& actions,
                                       const EcoProblem& problem);

struct SolveResult {
  std::vector<double> actions;
  Trajectory trajectory;
};

// Projected-gradient descent with escalating quadratic penalties for the
// terminal and no-reversing constraints; speed and acceleration boxes are
// enforced exactly by a forward-sequential projection. Multi-start over
// deterministic seeds plus `init` when given; returns the best feasible
// iterate. Throws InfeasibleProblem when no feasible iterate is found.
SolveResult solve_horizon(const EcoProblem& problem, const std::vector<double>& init = {});

// Exhaustive search over `levels` evenly spaced accelerations per step.
// Only valid for horizons up to 8 steps; the independent optimality check.
SolveResult grid_search_reference(const EcoProblem& problem, int levels = 5);

struct RecedingResult {
  Trajectory trajectory;  // closed-loop, length steps_completed
  int steps_completed = 0;
  bool completed = false;
  std::string report;  // non-empty when a mid-run solve failed
};

// Applies the first action of each shrinking-horizon solve, warm-starting
// from the previous solution shifted by one step. `init` seeds the first
// solve and must be empty or total_steps long.
RecedingResult run_receding_horizon(const EcoProblem& problem, int total_steps = -1,
                                    const std::vector<double>& init = {});

enum class SweepDimension { Grade, Temperature, Humidity };

const char* to_token(SweepDimension d);
SweepDimension sweep_dimension_from_token(const std::string& token);

// Solves one variant per value with the other two dimensions pinned at
// grade 0 %, 60 F, 55 % humidity. Variants run in parallel.
std::vector<SolveResult> environment_sweep(const EcoProblem& base, SweepDimension dim,
                                           const std::vector<double>& values);

// CSV export: t,x,v,a,e_step (final row carries the terminal state only).
void save_trajectory_csv(const Trajectory& traj, const EcoProblem& problem,
                         const std::string& path);

// Builds a problem from key-value configuration, starting from defaults.
EcoProblem problem_from_config(const KeyValueConfig& cfg, const SurrogateFamily& family);

}  // namespace nmoves
