#include "nmoves/cycles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "nmoves/util.hpp"

namespace nmoves {

namespace {

constexpr const char* kStrategyTokens[kCycleStrategyCount] = {
    "random_walk", "sinusoidal", "piecewise", "idm_approach", "eco_glide",
};

int sample_count(const CycleSpec& spec) {
  if (spec.duration_s <= 0 || spec.dt <= 0) {
    throw std::invalid_argument("cycle spec needs positive duration and dt");
  }
  return static_cast<int>(std::llround(spec.duration_s / spec.dt)) + 1;
}

// Clamp the next speed so the implied acceleration stays inside the box.
double limit_step(double v_prev, double v_next, double dt) {
  double lo = v_prev + kCycleAccelMin * dt;
  double hi = v_prev + kCycleAccelMax * dt;
  return std::max(0.0, std::clamp(v_next, lo, hi));
}

}  // namespace

const char* to_token(CycleStrategy s) {
  int i = static_cast<int>(s);
  if (i < 0 || i >= kCycleStrategyCount) {
    throw std::invalid_argument("unknown cycle strategy");
  }
  return kStrategyTokens[i];
}

CycleStrategy cycle_strategy_from_token(const std::string& token) {
  for (int i = 0; i < kCycleStrategyCount; ++i) {
    if (token == kStrategyTokens[i]) return static_cast<CycleStrategy>(i);
  }
  throw std::invalid_argument("unknown cycle strategy token: " + token);
}

double idm_acceleration(double v, const IdmParams& p) {
  return p.a_max * (1.0 - std::pow(v / p.v0, p.delta));
}

double idm_acceleration(double v, double gap, double leader_v, const IdmParams& p) {
  gap = std::max(gap, 0.01);
  double approach = v * (v - leader_v) / (2.0 * std::sqrt(p.a_max * p.b));
  double s_star = p.s0 + std::max(0.0, v * p.headway + approach);
  double ratio = s_star / gap;
  return p.a_max * (1.0 - std::pow(v / p.v0, p.delta) - ratio * ratio);
}

DrivingCycle random_walk(const CycleSpec& spec) {
  int n = sample_count(spec);
  Rng rng(spec.seed);
  DrivingCycle cycle;
  cycle.dt = spec.dt;
  cycle.speeds.reserve(n);
  double v = std::max(0.0, spec.walk_v0);
  cycle.speeds.push_back(v);
  double lo = std::max(spec.walk_accel_lo, kCycleAccelMin);
  double hi = std::min(spec.walk_accel_hi, kCycleAccelMax);
  for (int t = 1; t < n; ++t) {
    double a = rng.uniform(lo, hi);
    // Cap at the model's speed range so long drifts stay in-distribution.
    v = std::min(std::max(0.0, v + a * spec.dt), 33.0);
    cycle.speeds.push_back(v);
  }
  return cycle;
}

DrivingCycle sinusoidal(const CycleSpec& spec) {
  if (spec.sin_period_s <= 0) throw std::invalid_argument("sinusoidal period must be positive");
  int n = sample_count(spec);
  Rng rng(spec.seed);
  DrivingCycle cycle;
  cycle.dt = spec.dt;
  cycle.speeds.reserve(n);
  double v = std::max(0.0, spec.sin_mean);
  cycle.speeds.push_back(v);
  for (int t = 1; t < n; ++t) {
    double phase = 2.0 * std::numbers::pi * (t * spec.dt) / spec.sin_period_s;
    double target = spec.sin_mean + spec.sin_amplitude * std::sin(phase);
    if (spec.sin_noise > 0) target += rng.normal(0.0, spec.sin_noise);
    v = limit_step(v, target, spec.dt);
    cycle.speeds.push_back(v);
  }
  return cycle;
}

DrivingCycle piecewise(const CycleSpec& spec) {
  int n = sample_count(spec);
  Rng rng(spec.seed);
  DrivingCycle cycle;
  cycle.dt = spec.dt;
  cycle.speeds.reserve(n);
  double v = rng.uniform(spec.pw_speed_lo, spec.pw_speed_hi);
  cycle.speeds.push_back(v);
  while (static_cast<int>(cycle.speeds.size()) < n) {
    int hold = static_cast<int>(
        std::ceil(rng.uniform(spec.pw_plateau_lo_s, spec.pw_plateau_hi_s) / spec.dt));
    for (int k = 0; k < hold && static_cast<int>(cycle.speeds.size()) < n; ++k) {
      cycle.speeds.push_back(v);
    }
    if (static_cast<int>(cycle.speeds.size()) >= n) break;
    double target = rng.uniform(spec.pw_speed_lo, spec.pw_speed_hi);
    int ramp = static_cast<int>(
        std::ceil(rng.uniform(spec.pw_ramp_lo_s, spec.pw_ramp_hi_s) / spec.dt));
    // Stretch ramps whose slope would fall outside the acceleration box.
    double dv = target - v;
    double limit = dv >= 0 ? kCycleAccelMax : -kCycleAccelMin;
    int needed = static_cast<int>(std::ceil(std::abs(dv) / (limit * spec.dt)));
    ramp = std::max(ramp, std::max(needed, 1));
    double step = dv / ramp;
    for (int k = 1; k <= ramp && static_cast<int>(cycle.speeds.size()) < n; ++k) {
      cycle.speeds.push_back(v + step * k);
    }
    v = cycle.speeds.back();  // a truncated ramp must not jump on resume
  }
  return cycle;
}

namespace {

// Shared signal-corridor simulation. glide_target < 0 disables the glide
// phase (plain IDM approach behind the virtual stopped leader).
DrivingCycle simulate_corridor(const CycleSpec& spec, double glide_target) {
  int n = sample_count(spec);
  DrivingCycle cycle;
  cycle.dt = spec.dt;
  cycle.speeds.reserve(n);
  double v = std::max(0.0, spec.approach_v0);
  double x = 0.0;
  cycle.speeds.push_back(v);
  for (int t = 1; t < n; ++t) {
    double now = t * spec.dt;
    bool red = now < spec.signal.green_start_s;
    bool before_line = x < spec.signal.stop_line_m;
    double a;
    if (red && before_line) {
      if (glide_target >= 0) {
        a = v > glide_target ? -spec.glide_decel : 0.0;
      } else {
        a = idm_acceleration(v, spec.signal.stop_line_m - x, 0.0, spec.idm);
      }
    } else {
      a = idm_acceleration(v, spec.idm);
    }
    a = std::clamp(a, kCycleAccelMin, kCycleAccelMax);
    double v_next = std::max(0.0, v + a * spec.dt);
    x += 0.5 * (v + v_next) * spec.dt;
    v = v_next;
    cycle.speeds.push_back(v);
  }
  return cycle;
}

}  // namespace

DrivingCycle idm_approach(const CycleSpec& spec) {
  return simulate_corridor(spec, -1.0);
}

DrivingCycle eco_glide(const CycleSpec& spec, bool* fell_back) {
  double vc = std::max(0.0, spec.approach_v0);
  double tg = spec.signal.green_start_s;
  double dist = spec.signal.stop_line_m;
  if (fell_back) *fell_back = false;
  if (vc > 0 && dist / vc >= tg) {
    // Light is already green on arrival; no shaping needed.
    return simulate_corridor(spec, vc);
  }
  // Coast speed u such that braking at glide_decel and then holding u puts
  // the vehicle at the stop line exactly at the green:
  //   dist = (vc^2 - u^2)/(2 ad) + u * (tg - (vc - u)/ad)
  double ad = spec.glide_decel;
  double half_b = ad * tg - vc;
  double disc = half_b * half_b - vc * vc + 2.0 * ad * dist;
  if (ad > 0 && disc >= 0) {
    double u = -half_b + std::sqrt(disc);
    double brake_time = (vc - u) / ad;
    if (u > 0 && u <= vc && brake_time <= tg) {
      return simulate_corridor(spec, u);
    }
  }
  if (fell_back) *fell_back = true;
  return idm_approach(spec);
}

DrivingCycle generate_cycle(const CycleSpec& spec) {
  switch (spec.strategy) {
    case CycleStrategy::RandomWalk: return random_walk(spec);
    case CycleStrategy::Sinusoidal: return sinusoidal(spec);
    case CycleStrategy::Piecewise: return piecewise(spec);
    case CycleStrategy::IdmApproach: return idm_approach(spec);
    case CycleStrategy::EcoGlide: return eco_glide(spec);
  }
  throw std::invalid_argument("unknown cycle strategy");
}

std::vector<LabeledCycle> generate_suite(int n_per_strategy, uint64_t seed,
                                         double duration_s, double dt) {
  if (n_per_strategy <= 0) throw std::invalid_argument("n_per_strategy must be positive");
  std::vector<LabeledCycle> out;
  out.reserve(static_cast<size_t>(n_per_strategy) * kCycleStrategyCount);
  for (int s = 0; s < kCycleStrategyCount; ++s) {
    for (int k = 0; k < n_per_strategy; ++k) {
      CycleSpec spec;
      spec.strategy = static_cast<CycleStrategy>(s);
      spec.duration_s = duration_s;
      spec.dt = dt;
      spec.seed = mix_seed(seed, static_cast<uint64_t>(s) * 7919 + static_cast<uint64_t>(k));
      Rng rng(mix_seed(spec.seed, 0x9e3779b97f4a7c15ull));
      switch (spec.strategy) {
        case CycleStrategy::RandomWalk:
          spec.walk_v0 = rng.uniform(0.0, 20.0);
          break;
        case CycleStrategy::Sinusoidal:
          spec.sin_mean = rng.uniform(8.0, 16.0);
          spec.sin_amplitude = rng.uniform(2.0, 8.0);
          spec.sin_period_s = rng.uniform(25.0, 60.0);
          spec.sin_noise = rng.uniform(0.0, 0.4);
          break;
        case CycleStrategy::Piecewise:
          spec.pw_speed_hi = rng.uniform(15.0, 28.0);
          break;
        case CycleStrategy::IdmApproach:
        case CycleStrategy::EcoGlide:
          spec.approach_v0 = rng.uniform(8.0, 15.0);
          spec.idm.v0 = rng.uniform(12.0, 18.0);
          spec.signal.stop_line_m = rng.uniform(150.0, 400.0);
          spec.signal.green_start_s = rng.uniform(15.0, 50.0);
          break;
      }
      out.push_back({generate_cycle(spec), spec.strategy});
    }
  }
  return out;
}

double idle_seconds(const DrivingCycle& cycle, double threshold) {
  double total = 0;
  for (double v : cycle.speeds) {
    if (v < threshold) total += cycle.dt;
  }
  return total;
}

void save_cycle_csv(const DrivingCycle& cycle, const std::string& path) {
  std::string text = "t_s,v_mps\n";
  for (size_t i = 0; i < cycle.speeds.size(); ++i) {
    text += format_double(static_cast<double>(i) * cycle.dt);
    text += ',';
    text += format_double(cycle.speeds[i]);
    text += '\n';
  }
  write_file_atomic(path, text);
}

DrivingCycle load_cycle_csv(const std::string& path) {
  std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || trim(line) != "t_s,v_mps") {
    throw std::runtime_error(path + ": expected cycle header t_s,v_mps");
  }
  DrivingCycle cycle;
  std::vector<double> times;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    auto fields = split(line, ',');
    if (fields.size() != 2) {
      throw std::runtime_error(path + ":" + std::to_string(line_no) + ": expected 2 fields");
    }
    times.push_back(parse_double(fields[0]));
    cycle.speeds.push_back(parse_double(fields[1]));
  }
  if (cycle.speeds.empty()) throw std::runtime_error(path + ": empty cycle");
  if (times.size() >= 2) {
    cycle.dt = times[1] - times[0];
    if (cycle.dt <= 0) throw std::runtime_error(path + ": non-increasing time column");
  }
  return cycle;
}

}  // namespace nmoves
