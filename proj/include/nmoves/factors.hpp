#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "nmoves/config.hpp"

namespace nmoves {

enum class VehicleType : uint8_t {
  Motorcycle = 0,
  PassengerCar = 1,
  PassengerTruck = 2,
  LightCommercialTruck = 3,
  TransitBus = 4,
};
inline constexpr int kVehicleTypeCount = 5;

enum class FuelType : uint8_t {
  Gasoline = 0,
  Diesel = 1,
};
inline constexpr int kFuelTypeCount = 2;

const char* to_token(VehicleType v);
const char* to_token(FuelType f);
VehicleType vehicle_type_from_token(const std::string& token);
FuelType fuel_type_from_token(const std::string& token);

// Motorcycles are gasoline-only; every other (type, fuel) pair is valid.
bool vehicle_fuel_valid(VehicleType v, FuelType f);

// The non-dynamics emission inputs.
struct FactorVector {
  double grade = 0.0;      // percent slope
  double temp_f = 60.0;    // degrees Fahrenheit
  double humidity = 55.0;  // relative percent
  VehicleType vtype = VehicleType::PassengerCar;
  FuelType fuel = FuelType::Gasoline;
  double age_year = 2019;  // model year

  bool operator==(const FactorVector&) const = default;
};

struct DynamicsPoint {
  double v = 0.0;  // m/s
  double a = 0.0;  // m/s^2
};

struct TempHumidity {
  double temp_f;
  double humidity;
};

struct VehicleFuel {
  VehicleType vtype;
  FuelType fuel;
};

// Validity of a one-second speed transition.
inline constexpr double kCanonicalDt = 1.0;

// Discretization grid over the eight input factors plus the continuous
// bounds used for normalization.
//
// The dynamics axes are stored as integer indices so that the grid validity
// rule v + a*dt >= 0 is evaluated exactly: speeds are multiples of 0.5 m/s
// and accelerations multiples of 0.1 m/s^2, i.e. both are whole numbers of
// tenths.
class FactorGrid {
 public:
  static FactorGrid standard();
  // Overrides the embedded defaults with values from a key-value config;
  // unrecognized keys are ignored.
  static FactorGrid from_config(const KeyValueConfig& cfg);

  // -- dynamics axes --
  int speed_count() const { return speed_count_; }
  int accel_count() const { return accel_count_; }
  double speed_value(int i) const;
  double accel_value(int j) const;
  bool dynamics_valid(int i, int j) const;
  long long dynamics_grid_size() const {
    return static_cast<long long>(speed_count_) * accel_count_;
  }
  long long valid_dynamics_count() const;
  // Valid (v, a) pairs, speed-major with acceleration ascending.
  std::vector<DynamicsPoint> enumerate_dynamics() const;

  // -- scenario axes --
  const std::vector<double>& grades() const { return grades_; }
  const std::vector<TempHumidity>& temp_humidity_pairs() const { return th_pairs_; }
  const std::vector<int>& ages() const { return ages_; }
  const std::vector<VehicleFuel>& vehicle_fuel_pairs() const { return vf_pairs_; }
  long long scenario_count() const;
  // Deterministic order: temp-humid pair major, then grade, age, (type, fuel).
  FactorVector scenario(long long index) const;
  std::vector<FactorVector> enumerate_scenarios() const;

  // -- continuous bounds (used for normalization and surrogate inputs) --
  double speed_min() const { return 0.0; }
  double speed_max() const { return speed_max_; }
  double accel_min() const { return accel_value(0); }
  double accel_max() const { return accel_value(accel_count_ - 1); }
  double grade_min() const { return grades_.front(); }
  double grade_max() const { return grades_.back(); }
  double temp_min() const { return temp_min_; }
  double temp_max() const { return temp_max_; }
  double humidity_min() const { return humid_min_; }
  double humidity_max() const { return humid_max_; }
  double age_min() const { return ages_.front(); }
  double age_max() const { return ages_.back(); }

  std::array<double, 6> input_lo() const;
  std::array<double, 6> input_hi() const;

  // Throws std::out_of_range when a field breaches the continuous bounds and
  // std::invalid_argument for a forbidden (type, fuel) pair.
  void validate(const FactorVector& x) const;
  void validate(const DynamicsPoint& d) const;

  // Affine map of (v, a, grade, temp, humidity, age) onto [-1, 1]^6.
  std::array<double, 6> normalize(const FactorVector& x, const DynamicsPoint& d) const;
  void denormalize(const std::array<double, 6>& n, FactorVector& x, DynamicsPoint& d) const;

 private:
  FactorGrid() = default;

  int speed_count_ = 0;
  int speed_step_tenths_ = 0;  // speed i = i * step tenths / 10
  int accel_count_ = 0;
  int accel_min_tenths_ = 0;  // accel j = (min tenths + j) / 10
  double speed_max_ = 0.0;    // continuous upper bound (>= last grid speed)
  double temp_min_ = 0, temp_max_ = 0, humid_min_ = 0, humid_max_ = 0;
  std::vector<double> grades_;
  std::vector<TempHumidity> th_pairs_;
  std::vector<int> ages_;
  std::vector<VehicleFuel> vf_pairs_;
};

}  // namespace nmoves
