#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "nmoves/emission_model.hpp"
#include "nmoves/factors.hpp"

namespace nmoves {

// Fixed-step speed trace, the most granular input the engine accepts.
struct DrivingCycle {
  std::vector<double> speeds;  // m/s
  double dt = 1.0;             // seconds per step

  double duration() const { return static_cast<double>(speeds.size()) * dt; }
};

// Vehicle specific power coefficients (output in kW/tonne for v in m/s,
// a in m/s^2, grade in percent).
inline constexpr double kVspMassFactor = 1.1;
inline constexpr double kVspGravity = 9.81;
inline constexpr double kVspRollingCoeff = 0.0135;
inline constexpr double kVspDragCoeff = 0.000302;

double vsp(double v, double a, double grade_pct);

enum class SpeedClass : int { Brake = 0, Idle = 1, Low = 2, Mid = 3, High = 4 };

const char* to_token(SpeedClass c);
SpeedClass speed_class_from_token(const std::string& token);

struct OpModeBin {
  int id;
  SpeedClass speed_class;
  double vsp_lo;  // -inf on the open low side
  double vsp_hi;  // +inf on the open high side
  double base_rate;  // grams CO2 per second before modifiers
};

// Multiplicative response curves applied on top of the per-bin base rates.
struct ModifierCurves {
  std::array<double, kVehicleTypeCount> vtype_mult;
  std::array<double, kFuelTypeCount> fuel_mult;
  double age_ref_year;   // rates grow moving back from this model year
  double age_per_year;   // fractional increase per year of age
  double th_u2, th_u1, th_w1;  // quadratic temp + linear humidity response
  double temp_center, temp_scale;
  double humid_center, humid_scale;
};

// Operating-mode binned emission engine. Every (v, a, grade) maps to exactly
// one bin: braking when a <= brake_accel, idle when v < idle_speed, otherwise
// a (speed class, VSP bracket) cell. Immutable after construction; all
// queries are read-only and safe to share across threads.
class OpModeTable {
 public:
  static OpModeTable standard();

  // CSV import; either path may be empty to keep the embedded defaults.
  static OpModeTable load_csv(const std::string& bins_path,
                              const std::string& modifiers_path);
  void save_csv(const std::string& bins_path, const std::string& modifiers_path) const;

  const std::vector<OpModeBin>& bins() const { return bins_; }
  const ModifierCurves& modifiers() const { return mods_; }
  double brake_accel() const { return brake_accel_; }
  double idle_speed() const { return idle_speed_; }
  double mid_class_speed() const { return mid_speed_; }
  double high_class_speed() const { return high_speed_; }

  int idle_bin_id() const { return idle_bin_id_; }
  int brake_bin_id() const { return brake_bin_id_; }

  int op_mode_of(double v, double a, double grade_pct) const;
  double base_rate(int bin_id) const;

  // Product of the four factor responses; grade is absent by design, it
  // acts through VSP instead.
  double modifier(const FactorVector& x) const;
  double rate(int bin_id, const FactorVector& x) const;  // grams/second
  double idling_rate(const FactorVector& x) const;

  // Op-mode distribution accounting: second 0 carries (s_0, a=0); second
  // t >= 1 carries (s_{t-1}, (s_t - s_{t-1})/dt). E_1hour = 3600 * sum
  // p_j * r_j, scaled by duration/3600.
  double cycle_emission(const DrivingCycle& tau, const FactorVector& x) const;

  // Enforces the structural invariants (unique ids, positive rates, idle bin
  // is the minimum, contiguous brackets per class). Throws std::runtime_error.
  void validate() const;

 private:
  OpModeTable() = default;
  void index_bins();

  std::vector<OpModeBin> bins_;
  ModifierCurves mods_{};
  double brake_accel_ = -2.0;  // a <= this is braking
  double idle_speed_ = 0.5;    // v < this (and not braking) is idle
  double mid_speed_ = 11.176;  // class boundaries, m/s
  double high_speed_ = 22.352;
  int brake_bin_id_ = 0;
  int idle_bin_id_ = 1;
  // per speed class, indices into bins_ ordered by bracket
  std::array<std::vector<int>, 5> by_class_;
  std::map<int, int> id_index_;
};

// The engine exposed through the common per-second interface: emission over
// one dt at speed v applying acceleration a.
class OracleModel : public EmissionModel {
 public:
  OracleModel(const OpModeTable& table, double dt = 1.0) : table_(&table), dt_(dt) {}

  double emission(double v, double a, const FactorVector& x) const override;
  std::string name() const override { return "oracle"; }

  const OpModeTable& table() const { return *table_; }
  double dt() const { return dt_; }

 private:
  const OpModeTable* table_;
  double dt_;
};

}  // namespace nmoves
