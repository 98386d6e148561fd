#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nmoves/oracle.hpp"

namespace nmoves {

enum class CycleStrategy : int {
  RandomWalk = 0,
  Sinusoidal = 1,
  Piecewise = 2,
  IdmApproach = 3,
  EcoGlide = 4,
};
inline constexpr int kCycleStrategyCount = 5;

const char* to_token(CycleStrategy s);
CycleStrategy cycle_strategy_from_token(const std::string& token);

// Acceleration limits every generator respects (the surrogate's input box).
inline constexpr double kCycleAccelMin = -4.5;
inline constexpr double kCycleAccelMax = 3.0;

struct IdmParams {
  double v0 = 15.0;     // desired speed, m/s
  double headway = 1.5;  // time headway T, s
  double a_max = 1.5;   // max acceleration, m/s^2
  double b = 2.0;       // comfortable deceleration, m/s^2
  double delta = 4.0;   // free-road exponent
  double s0 = 2.0;      // standstill gap, m
};

// One red-to-green event at a stop line.
struct SignalTiming {
  double stop_line_m = 250.0;  // distance from the start position
  double green_start_s = 25.0;
  double green_end_s = 1e9;
};

struct CycleSpec {
  CycleStrategy strategy = CycleStrategy::RandomWalk;
  double duration_s = 120.0;
  double dt = 1.0;
  uint64_t seed = 0;

  // random walk
  double walk_v0 = 10.0;
  double walk_accel_lo = -1.5;
  double walk_accel_hi = 3.0;

  // sinusoidal
  double sin_mean = 12.0;
  double sin_amplitude = 8.0;
  double sin_period_s = 40.0;
  double sin_noise = 0.3;

  // piecewise plateaus and ramps
  double pw_speed_lo = 0.0;
  double pw_speed_hi = 25.0;
  double pw_plateau_lo_s = 4.0;
  double pw_plateau_hi_s = 15.0;
  double pw_ramp_lo_s = 2.0;
  double pw_ramp_hi_s = 8.0;

  // signalized approach (IDM and glide)
  IdmParams idm;
  SignalTiming signal;
  double approach_v0 = 12.0;   // speed entering the corridor
  double glide_decel = 0.8;    // gentle deceleration used to time the green
};

// IDM acceleration on a free road.
double idm_acceleration(double v, const IdmParams& p);
// IDM acceleration behind a leader `gap` meters ahead moving at leader_v.
double idm_acceleration(double v, double gap, double leader_v, const IdmParams& p);

DrivingCycle random_walk(const CycleSpec& spec);
DrivingCycle sinusoidal(const CycleSpec& spec);
DrivingCycle piecewise(const CycleSpec& spec);
// Approach a signal, decelerating behind a virtual stopped leader at the
// stop line until the green, then continue free.
DrivingCycle idm_approach(const CycleSpec& spec);
// Decelerate early to a computed coast speed so the stop line is reached as
// the light turns green; falls back to the IDM approach when the timing
// window is infeasible (fell_back reports which path was taken).
DrivingCycle eco_glide(const CycleSpec& spec, bool* fell_back = nullptr);

DrivingCycle generate_cycle(const CycleSpec& spec);

struct LabeledCycle {
  DrivingCycle cycle;
  CycleStrategy strategy;
};

// n cycles per strategy with per-cycle parameter variation, deterministic
// under `seed`.
std::vector<LabeledCycle> generate_suite(int n_per_strategy, uint64_t seed,
                                         double duration_s = 120.0, double dt = 1.0);

// Seconds spent below `threshold` m/s.
double idle_seconds(const DrivingCycle& cycle, double threshold = 0.1);

// Two-column CSV (t_s, v_mps).
void save_cycle_csv(const DrivingCycle& cycle, const std::string& path);
DrivingCycle load_cycle_csv(const std::string& path);

}  // namespace nmoves
