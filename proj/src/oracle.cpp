#include "nmoves/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include "nmoves/util.hpp"

namespace nmoves {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

constexpr const char* kClassTokens[5] = {"brake", "idle", "low", "mid", "high"};

// Appends one class worth of VSP brackets: an open low bin, uniform interior
// bins between the edges, and an open high bin. Rates follow a linear ramp
// in the bracket midpoint; the open ends use a midpoint half a step beyond
// the boundary edge.
void append_class(std::vector<OpModeBin>& bins, SpeedClass cls, int first_id,
                  double edge_lo, double edge_hi, double step, double rate_base,
                  double rate_slope) {
  int id = first_id;
  bins.push_back({id++, cls, -kInf, edge_lo, rate_base + rate_slope * (edge_lo - step / 2)});
  for (double e = edge_lo; e < edge_hi - 1e-9; e += step) {
    bins.push_back({id++, cls, e, e + step, rate_base + rate_slope * (e + step / 2)});
  }
  bins.push_back({id++, cls, edge_hi, kInf, rate_base + rate_slope * (edge_hi + step / 2)});
}

}  // namespace

double vsp(double v, double a, double grade_pct) {
  return v * (a * kVspMassFactor + kVspGravity * (grade_pct / 100.0) +
              kVspGravity * kVspRollingCoeff) +
         kVspDragCoeff * v * v * v;
}

const char* to_token(SpeedClass c) { return kClassTokens[static_cast<int>(c)]; }

SpeedClass speed_class_from_token(const std::string& token) {
  for (int i = 0; i < 5; ++i) {
    if (token == kClassTokens[i]) return static_cast<SpeedClass>(i);
  }
  throw std::invalid_argument("unknown speed class: '" + token + "'");
}

OpModeTable OpModeTable::standard() {
  OpModeTable t;
  t.bins_.push_back({0, SpeedClass::Brake, -kInf, kInf, 1.05});
  t.bins_.push_back({1, SpeedClass::Idle, -kInf, kInf, 0.90});
  append_class(t.bins_, SpeedClass::Low, 10, 0.0, 12.0, 1.0, 1.55, 0.33);
  append_class(t.bins_, SpeedClass::Mid, 30, 0.0, 30.0, 2.0, 1.85, 0.31);
  append_class(t.bins_, SpeedClass::High, 50, 0.0, 36.0, 3.0, 2.35, 0.33);
  t.mods_.vtype_mult = {0.55, 1.0, 1.22, 1.32, 2.6};
  t.mods_.fuel_mult = {1.0, 0.85};
  t.mods_.age_ref_year = 2019;
  t.mods_.age_per_year = 0.028;
  t.mods_.th_u2 = 0.04;
  t.mods_.th_u1 = -0.02;
  t.mods_.th_w1 = 0.015;
  t.mods_.temp_center = 59.0;
  t.mods_.temp_scale = 31.0;
  t.mods_.humid_center = 57.5;
  t.mods_.humid_scale = 32.5;
  t.index_bins();
  t.validate();
  return t;
}

void OpModeTable::index_bins() {
  for (auto& v : by_class_) v.clear();
  id_index_.clear();
  for (size_t i = 0; i < bins_.size(); ++i) {
    by_class_[static_cast<int>(bins_[i].speed_class)].push_back(static_cast<int>(i));
    id_index_.emplace(bins_[i].id, static_cast<int>(i));
  }
  for (auto& idx : by_class_) {
    std::sort(idx.begin(), idx.end(),
              [&](int a, int b) { return bins_[a].vsp_lo < bins_[b].vsp_lo; });
  }
  if (by_class_[0].size() == 1) brake_bin_id_ = bins_[by_class_[0][0]].id;
  if (by_class_[1].size() == 1) idle_bin_id_ = bins_[by_class_[1][0]].id;
}

int OpModeTable::op_mode_of(double v, double a, double grade_pct) const {
  if (a <= brake_accel_) return brake_bin_id_;
  if (v < idle_speed_) return idle_bin_id_;
  SpeedClass cls = v < mid_speed_    ? SpeedClass::Low
                   : v < high_speed_ ? SpeedClass::Mid
                                     : SpeedClass::High;
  const double p = vsp(v, a, grade_pct);
  const auto& idx = by_class_[static_cast<int>(cls)];
  for (int i : idx) {
    if (p >= bins_[static_cast<size_t>(i)].vsp_lo && p < bins_[static_cast<size_t>(i)].vsp_hi) {
      return bins_[static_cast<size_t>(i)].id;
    }
  }
  // unreachable for a validated table (brackets cover the real line)
  throw std::logic_error("op-mode brackets do not cover VSP value");
}

double OpModeTable::base_rate(int bin_id) const {
  auto it = id_index_.find(bin_id);
  if (it == id_index_.end()) throw std::out_of_range("unknown bin id");
  return bins_[static_cast<size_t>(it->second)].base_rate;
}

double OpModeTable::modifier(const FactorVector& x) const {
  const double u = (x.temp_f - mods_.temp_center) / mods_.temp_scale;
  const double w = (x.humidity - mods_.humid_center) / mods_.humid_scale;
  const double th = 1.0 + mods_.th_u2 * u * u + mods_.th_u1 * u + mods_.th_w1 * w;
  const double age = 1.0 + mods_.age_per_year * (mods_.age_ref_year - x.age_year);
  return mods_.vtype_mult[static_cast<size_t>(x.vtype)] *
         mods_.fuel_mult[static_cast<size_t>(x.fuel)] * age * th;
}

double OpModeTable::rate(int bin_id, const FactorVector& x) const {
  return base_rate(bin_id) * modifier(x);
}

double OpModeTable::idling_rate(const FactorVector& x) const {
  return rate(idle_bin_id_, x);
}

double OpModeTable::cycle_emission(const DrivingCycle& tau, const FactorVector& x) const {
  if (tau.speeds.empty()) throw std::invalid_argument("empty driving cycle");
  if (tau.dt <= 0) throw std::invalid_argument("cycle dt must be positive");
  for (double s : tau.speeds) {
    if (!(s >= 0)) throw std::invalid_argument("cycle speeds must be non-negative");
  }
  // counts keyed by bin id; ids are small by construction
  std::map<int, long long> counts;
  counts[op_mode_of(tau.speeds[0], 0.0, x.grade)] += 1;
  for (size_t t = 1; t < tau.speeds.size(); ++t) {
    const double a = (tau.speeds[t] - tau.speeds[t - 1]) / tau.dt;
    counts[op_mode_of(tau.speeds[t - 1], a, x.grade)] += 1;
  }
  const double n = static_cast<double>(tau.speeds.size());
  double hourly = 0.0;
  for (const auto& [bin_id, c] : counts) {
    hourly += (static_cast<double>(c) / n) * rate(bin_id, x);
  }
  hourly *= 3600.0;
  return hourly * tau.duration() / 3600.0;
}

void OpModeTable::validate() const {
  std::map<int, int> seen;
  for (const auto& b : bins_) {
    if (seen.count(b.id)) throw std::runtime_error("duplicate bin id " + std::to_string(b.id));
    seen[b.id] = 1;
    if (!(b.base_rate > 0)) {
      throw std::runtime_error("non-positive base rate in bin " + std::to_string(b.id));
    }
  }
  if (by_class_[0].size() != 1 || by_class_[1].size() != 1) {
    throw std::runtime_error("table needs exactly one braking and one idle bin");
  }
  const double idle = base_rate(idle_bin_id_);
  for (const auto& b : bins_) {
    if (b.id != idle_bin_id_ && b.base_rate <= idle) {
      throw std::runtime_error("idle bin must carry the minimum rate");
    }
  }
  for (int c = 2; c <= 4; ++c) {
    const auto& idx = by_class_[static_cast<size_t>(c)];
    if (idx.empty()) throw std::runtime_error("missing speed class brackets");
    if (bins_[static_cast<size_t>(idx.front())].vsp_lo != -kInf ||
        bins_[static_cast<size_t>(idx.back())].vsp_hi != kInf) {
      throw std::runtime_error("VSP brackets must be open-ended");
    }
    for (size_t k = 0; k + 1 < idx.size(); ++k) {
      const auto& cur = bins_[static_cast<size_t>(idx[k])];
      const auto& nxt = bins_[static_cast<size_t>(idx[k + 1])];
      if (cur.vsp_hi != nxt.vsp_lo) {
        throw std::runtime_error("VSP brackets must be contiguous");
      }
    }
  }
  if (!(idle_speed_ > 0) || !(brake_accel_ < 0) || !(mid_speed_ > idle_speed_) ||
      !(high_speed_ > mid_speed_)) {
    throw std::runtime_error("speed class thresholds out of order");
  }
  for (double m : mods_.vtype_mult) {
    if (!(m > 0)) throw std::runtime_error("vehicle type multipliers must be positive");
  }
  for (double m : mods_.fuel_mult) {
    if (!(m > 0)) throw std::runtime_error("fuel multipliers must be positive");
  }
}

void OpModeTable::save_csv(const std::string& bins_path,
                           const std::string& modifiers_path) const {
  std::string b = "bin_id,speed_class,vsp_lo,vsp_hi,base_rate_gps\n";
  for (const auto& bin : bins_) {
    b += std::to_string(bin.id);
    b += ',';
    b += to_token(bin.speed_class);
    b += ',';
    b += format_double(bin.vsp_lo);
    b += ',';
    b += format_double(bin.vsp_hi);
    b += ',';
    b += format_double(bin.base_rate);
    b += '\n';
  }
  write_file_atomic(bins_path, b);

  std::string m = "kind,key,value\n";
  auto row = [&m](const char* kind, const std::string& key, double v) {
    m += kind;
    m += ',';
    m += key;
    m += ',';
    m += format_double(v);
    m += '\n';
  };
  for (int i = 0; i < kVehicleTypeCount; ++i) {
    row("vtype", to_token(static_cast<VehicleType>(i)), mods_.vtype_mult[static_cast<size_t>(i)]);
  }
  for (int i = 0; i < kFuelTypeCount; ++i) {
    row("fuel", to_token(static_cast<FuelType>(i)), mods_.fuel_mult[static_cast<size_t>(i)]);
  }
  row("age", "ref_year", mods_.age_ref_year);
  row("age", "per_year", mods_.age_per_year);
  row("temp_humid", "u2", mods_.th_u2);
  row("temp_humid", "u1", mods_.th_u1);
  row("temp_humid", "w1", mods_.th_w1);
  row("temp_humid", "temp_center", mods_.temp_center);
  row("temp_humid", "temp_scale", mods_.temp_scale);
  row("temp_humid", "humid_center", mods_.humid_center);
  row("temp_humid", "humid_scale", mods_.humid_scale);
  row("threshold", "brake_accel", brake_accel_);
  row("threshold", "idle_speed", idle_speed_);
  row("threshold", "mid_class_speed", mid_speed_);
  row("threshold", "high_class_speed", high_speed_);
  write_file_atomic(modifiers_path, m);
}

OpModeTable OpModeTable::load_csv(const std::string& bins_path,
                                  const std::string& modifiers_path) {
  OpModeTable t = standard();
  if (!bins_path.empty()) {
    const std::string text = read_file(bins_path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (trim(line) != "bin_id,speed_class,vsp_lo,vsp_hi,base_rate_gps") {
      throw std::runtime_error(bins_path + ": unexpected bins header");
    }
    t.bins_.clear();
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto f = split(line, ',');
      if (f.size() != 5) {
        throw std::runtime_error(bins_path + ":" + std::to_string(lineno) + ": expected 5 fields");
      }
      OpModeBin bin;
      bin.id = static_cast<int>(std::stol(f[0]));
      bin.speed_class = speed_class_from_token(trim(f[1]));
      bin.vsp_lo = parse_double(trim(f[2]));
      bin.vsp_hi = parse_double(trim(f[3]));
      bin.base_rate = parse_double(trim(f[4]));
      t.bins_.push_back(bin);
    }
  }
  if (!modifiers_path.empty()) {
    const std::string text = read_file(modifiers_path);
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    if (trim(line) != "kind,key,value") {
      throw std::runtime_error(modifiers_path + ": unexpected modifiers header");
    }
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      auto f = split(line, ',');
      if (f.size() != 3) {
        throw std::runtime_error(modifiers_path + ":" + std::to_string(lineno) +
                                 ": expected 3 fields");
      }
      const std::string kind = trim(f[0]);
      const std::string key = trim(f[1]);
      const double v = parse_double(trim(f[2]));
      if (kind == "vtype") {
        t.mods_.vtype_mult[static_cast<size_t>(vehicle_type_from_token(key))] = v;
      } else if (kind == "fuel") {
        t.mods_.fuel_mult[static_cast<size_t>(fuel_type_from_token(key))] = v;
      } else if (kind == "age") {
        if (key == "ref_year") t.mods_.age_ref_year = v;
        else if (key == "per_year") t.mods_.age_per_year = v;
        else throw std::runtime_error("unknown age key: " + key);
      } else if (kind == "temp_humid") {
        if (key == "u2") t.mods_.th_u2 = v;
        else if (key == "u1") t.mods_.th_u1 = v;
        else if (key == "w1") t.mods_.th_w1 = v;
        else if (key == "temp_center") t.mods_.temp_center = v;
        else if (key == "temp_scale") t.mods_.temp_scale = v;
        else if (key == "humid_center") t.mods_.humid_center = v;
        else if (key == "humid_scale") t.mods_.humid_scale = v;
        else throw std::runtime_error("unknown temp_humid key: " + key);
      } else if (kind == "threshold") {
        if (key == "brake_accel") t.brake_accel_ = v;
        else if (key == "idle_speed") t.idle_speed_ = v;
        else if (key == "mid_class_speed") t.mid_speed_ = v;
        else if (key == "high_class_speed") t.high_speed_ = v;
        else throw std::runtime_error("unknown threshold key: " + key);
      } else {
        throw std::runtime_error("unknown modifier kind: " + kind);
      }
    }
  }
  t.index_bins();
  t.validate();
  return t;
}

double OracleModel::emission(double v, double a, const FactorVector& x) const {
  return dt_ * table_->rate(table_->op_mode_of(v, a, x.grade), x);
}

}  // namespace nmoves
