#include "nmoves/factors.hpp"

#include <cmath>
#include <stdexcept>

namespace nmoves {

namespace {

constexpr const char* kVehicleTokens[kVehicleTypeCount] = {
    "motorcycle", "passenger_car", "passenger_truck", "light_commercial_truck",
    "transit_bus"};
constexpr const char* kFuelTokens[kFuelTypeCount] = {"gasoline", "diesel"};

// The 21 standard temperature-humidity pairs.
constexpr TempHumidity kStandardTempHumidity[21] = {
    {28.1996, 80.2873}, {30, 56},           {33, 32},
    {37, 89},           {37.6286, 67.6447}, {43, 47},
    {46.1619, 80.2282}, {53.6926, 58.5524}, {55, 33},
    {55.6191, 75.1602}, {60, 68},           {65.0137, 62.8505},
    {69.9007, 82.7532}, {70, 25},           {71.4719, 46.6703},
    {72, 54},           {79.0944, 62.6927}, {82, 49},
    {82.8811, 26.8811}, {87, 80},           {89, 38},
};

}  // namespace

const char* to_token(VehicleType v) { return kVehicleTokens[static_cast<int>(v)]; }
const char* to_token(FuelType f) { return kFuelTokens[static_cast<int>(f)]; }

VehicleType vehicle_type_from_token(const std::string& token) {
  for (int i = 0; i < kVehicleTypeCount; ++i) {
    if (token == kVehicleTokens[i]) return static_cast<VehicleType>(i);
  }
  throw std::invalid_argument("unknown vehicle type: '" + token + "'");
}

FuelType fuel_type_from_token(const std::string& token) {
  for (int i = 0; i < kFuelTypeCount; ++i) {
    if (token == kFuelTokens[i]) return static_cast<FuelType>(i);
  }
  throw std::invalid_argument("unknown fuel type: '" + token + "'");
}

bool vehicle_fuel_valid(VehicleType v, FuelType f) {
  return !(v == VehicleType::Motorcycle && f == FuelType::Diesel);
}

FactorGrid FactorGrid::standard() {
  FactorGrid g;
  g.speed_count_ = 66;       // 0 .. 32.5 m/s
  g.speed_step_tenths_ = 5;  // 0.5 m/s
  g.accel_count_ = 76;       // -4.5 .. 3.0 m/s^2
  g.accel_min_tenths_ = -45;
  g.speed_max_ = 33.0;
  g.temp_min_ = 28.0;
  g.temp_max_ = 90.0;
  g.humid_min_ = 25.0;
  g.humid_max_ = 90.0;
  for (int p = -25; p <= 25; p += 5) g.grades_.push_back(p);
  g.th_pairs_.assign(std::begin(kStandardTempHumidity), std::end(kStandardTempHumidity));
  for (int y = 2009; y <= 2019; ++y) g.ages_.push_back(y);
  for (int v = 0; v < kVehicleTypeCount; ++v) {
    for (int f = 0; f < kFuelTypeCount; ++f) {
      auto vt = static_cast<VehicleType>(v);
      auto ft = static_cast<FuelType>(f);
      if (vehicle_fuel_valid(vt, ft)) g.vf_pairs_.push_back({vt, ft});
    }
  }
  return g;
}

FactorGrid FactorGrid::from_config(const KeyValueConfig& cfg) {
  FactorGrid g = standard();
  g.speed_count_ = static_cast<int>(cfg.get_int("speed_count", g.speed_count_));
  g.accel_count_ = static_cast<int>(cfg.get_int("accel_count", g.accel_count_));
  if (g.speed_count_ < 2 || g.accel_count_ < 2) {
    throw std::invalid_argument("factor grid needs at least 2 points per dynamics axis");
  }
  if (cfg.has("age_first") || cfg.has("age_last")) {
    int first = static_cast<int>(cfg.get_int("age_first", g.ages_.front()));
    int last = static_cast<int>(cfg.get_int("age_last", g.ages_.back()));
    if (last < first) throw std::invalid_argument("age_last < age_first");
    g.ages_.clear();
    for (int y = first; y <= last; ++y) g.ages_.push_back(y);
  }
  return g;
}

double FactorGrid::speed_value(int i) const {
  return static_cast<double>(i) * speed_step_tenths_ / 10.0;
}

double FactorGrid::accel_value(int j) const {
  return static_cast<double>(accel_min_tenths_ + j) / 10.0;
}

bool FactorGrid::dynamics_valid(int i, int j) const {
  // v + a*dt >= 0 with dt = 1 s, evaluated in integer tenths of m/s.
  return i * speed_step_tenths_ + (accel_min_tenths_ + j) >= 0;
}

long long FactorGrid::valid_dynamics_count() const {
  long long n = 0;
  for (int i = 0; i < speed_count_; ++i) {
    for (int j = 0; j < accel_count_; ++j) {
      if (dynamics_valid(i, j)) ++n;
    }
  }
  return n;
}

std::vector<DynamicsPoint> FactorGrid::enumerate_dynamics() const {
  std::vector<DynamicsPoint> out;
  out.reserve(static_cast<size_t>(valid_dynamics_count()));
  for (int i = 0; i < speed_count_; ++i) {
    for (int j = 0; j < accel_count_; ++j) {
      if (dynamics_valid(i, j)) out.push_back({speed_value(i), accel_value(j)});
    }
  }
  return out;
}

long long FactorGrid::scenario_count() const {
  return static_cast<long long>(th_pairs_.size()) * grades_.size() * ages_.size() *
         vf_pairs_.size();
}

FactorVector FactorGrid::scenario(long long index) const {
  if (index < 0 || index >= scenario_count()) {
    throw std::out_of_range("scenario index out of range");
  }
  long long rest = index;
  const long long nv = static_cast<long long>(vf_pairs_.size());
  const long long na = static_cast<long long>(ages_.size());
  const long long ng = static_cast<long long>(grades_.size());
  const long long vf = rest % nv;
  rest /= nv;
  const long long age = rest % na;
  rest /= na;
  const long long gr = rest % ng;
  rest /= ng;
  const long long th = rest;
  FactorVector x;
  x.grade = grades_[static_cast<size_t>(gr)];
  x.temp_f = th_pairs_[static_cast<size_t>(th)].temp_f;
  x.humidity = th_pairs_[static_cast<size_t>(th)].humidity;
  x.vtype = vf_pairs_[static_cast<size_t>(vf)].vtype;
  x.fuel = vf_pairs_[static_cast<size_t>(vf)].fuel;
  x.age_year = ages_[static_cast<size_t>(age)];
  return x;
}

std::vector<FactorVector> FactorGrid::enumerate_scenarios() const {
  std::vector<FactorVector> out;
  out.reserve(static_cast<size_t>(scenario_count()));
  for (long long i = 0; i < scenario_count(); ++i) out.push_back(scenario(i));
  return out;
}

std::array<double, 6> FactorGrid::input_lo() const {
  return {speed_min(), accel_min(), grade_min(), temp_min_, humid_min_, age_min()};
}

std::array<double, 6> FactorGrid::input_hi() const {
  return {speed_max_, accel_max(), grade_max(), temp_max_, humid_max_, age_max()};
}

void FactorGrid::validate(const FactorVector& x) const {
  if (!(x.grade >= grade_min() && x.grade <= grade_max())) {
    throw std::out_of_range("grade out of range");
  }
  if (!(x.temp_f >= temp_min_ && x.temp_f <= temp_max_)) {
    throw std::out_of_range("temperature out of range");
  }
  if (!(x.humidity >= humid_min_ && x.humidity <= humid_max_)) {
    throw std::out_of_range("humidity out of range");
  }
  if (!(x.age_year >= age_min() && x.age_year <= age_max())) {
    throw std::out_of_range("age year out of range");
  }
  if (!vehicle_fuel_valid(x.vtype, x.fuel)) {
    throw std::invalid_argument("no diesel motorcycles in the fleet");
  }
}

void FactorGrid::validate(const DynamicsPoint& d) const {
  if (!(d.v >= speed_min() && d.v <= speed_max_)) {
    throw std::out_of_range("speed out of range");
  }
  if (!(d.a >= accel_min() && d.a <= accel_max())) {
    throw std::out_of_range("acceleration out of range");
  }
}

std::array<double, 6> FactorGrid::normalize(const FactorVector& x, const DynamicsPoint& d) const {
  validate(x);
  validate(d);
  const std::array<double, 6> raw = {d.v, d.a, x.grade, x.temp_f, x.humidity, x.age_year};
  const auto lo = input_lo();
  const auto hi = input_hi();
  std::array<double, 6> out;
  for (int k = 0; k < 6; ++k) out[k] = 2.0 * (raw[k] - lo[k]) / (hi[k] - lo[k]) - 1.0;
  return out;
}

void FactorGrid::denormalize(const std::array<double, 6>& n, FactorVector& x,
                             DynamicsPoint& d) const {
  const auto lo = input_lo();
  const auto hi = input_hi();
  std::array<double, 6> raw;
  for (int k = 0; k < 6; ++k) raw[k] = lo[k] + (n[k] + 1.0) * 0.5 * (hi[k] - lo[k]);
  d.v = raw[0];
  d.a = raw[1];
  x.grade = raw[2];
  x.temp_f = raw[3];
  x.humidity = raw[4];
  x.age_year = raw[5];
}

}  // namespace nmoves
