#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "nmoves/dataset.hpp"
#include "nmoves/emission_model.hpp"
#include "nmoves/factors.hpp"

namespace nmoves {

// 6 -> 5 -> 5 -> 1 network with tanh hidden layers. Parameters live in one
// flat array so the optimizer can treat them uniformly.
inline constexpr int kMlpInputs = 6;
inline constexpr int kMlpHidden = 5;
inline constexpr int kMlpParamCount =
    kMlpHidden * kMlpInputs + kMlpHidden +        // layer 1
    kMlpHidden * kMlpHidden + kMlpHidden +        // layer 2
    kMlpHidden + 1;                               // output
static_assert(kMlpParamCount == 71);

struct MlpParameters {
  // layout: W1 (5x6 row-major), b1, W2 (5x5), b2, w3, b3
  std::array<double, kMlpParamCount> theta{};
  // per-input affine normalization onto [-1, 1]
  std::array<double, kMlpInputs> input_lo{};
  std::array<double, kMlpInputs> input_hi{};
  // network learns e / output_scale; fixed at training time
  double output_scale = 1.0;
};

// Raw network output in grams; may undershoot the idling floor, see predict.
double forward(const MlpParameters& m, double v, double a, const FactorVector& x);

// Analytic d(forward)/d(v, a, grade, temp, humidity, age).
std::array<double, kMlpInputs> grad_inputs(const MlpParameters& m, double v, double a,
                                           const FactorVector& x);

// (1/N) sum |target - pred| / max(target, 1e-6) * 100.
double mape_loss(const std::vector<double>& predictions, const std::vector<double>& targets);

inline constexpr double kMapeTargetClamp = 1e-6;

struct TrainConfig {
  int epochs = 300;
  int batch_size = 1024;
  double learning_rate = 1e-3;
  double init_scale = 0.97;  // multiplies the symmetric-uniform initial weights
  uint64_t seed = 1;
};

struct TrainLog {
  std::vector<double> epoch_mape;  // train MAPE per epoch, before that epoch's updates
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const std::string& msg, MlpParameters checkpoint, TrainLog log)
      : std::runtime_error(msg), checkpoint(std::move(checkpoint)), log(std::move(log)) {}
  MlpParameters checkpoint;  // last finite epoch's parameters
  TrainLog log;
};

// Minibatch MAPE training with adaptive per-parameter steps (Adam-style
// moments). Filters `data` to the entry's (vtype, fuel); throws
// std::invalid_argument when nothing is left. Deterministic under cfg.seed.
std::pair<MlpParameters, TrainLog> train_entry(const FactorGrid& grid, VehicleType vt,
                                               FuelType ft, const DatasetPartition& data,
                                               const TrainConfig& cfg);

// Idling emission per scenario, keyed by the non-vehicle factor values.
struct FloorKey {
  double grade, temp_f, humidity, age_year;
  auto operator<=>(const FloorKey&) const = default;
};
using FloorTable = std::map<FloorKey, double>;

// The model family: one network per valid (vtype, fuel) pair plus tabulated
// idling floors. Immutable in use; predict/grad are safe to call
// concurrently.
class SurrogateFamily {
 public:
  bool has_entry(VehicleType vt, FuelType ft) const;
  void set_entry(VehicleType vt, FuelType ft, const MlpParameters& m);
  const MlpParameters& entry(VehicleType vt, FuelType ft) const;
  size_t entry_count() const { return entries_.size(); }

  void set_floor(VehicleType vt, FuelType ft, FloorTable table);
  // Exact-match scenario lookup; unseen conditions fall back to the entry's
  // minimum tabulated floor (conservative, keeps the invariant self-consistent).
  double idling_floor(const FactorVector& x) const;

  // max(forward, idling floor); never below the floor
  double predict(double v, double a, const FactorVector& x) const;
  // zero in every coordinate when the network output sits strictly below
  // the floor (flat side of the max)
  std::array<double, kMlpInputs> predict_grad(double v, double a, const FactorVector& x) const;

  void save(const std::string& path) const;
  static SurrogateFamily load(const std::string& path);

 private:
  const MlpParameters* find(VehicleType vt, FuelType ft) const;
  std::map<std::pair<int, int>, MlpParameters> entries_;
  std::map<std::pair<int, int>, FloorTable> floors_;
  std::map<std::pair<int, int>, double> floor_min_;
};

// Floors from the training data's (v=0, a=0) records.
FloorTable build_floor_from_data(const DatasetPartition& data, VehicleType vt, FuelType ft);
// Floors for every scenario of the grid with this (vtype, fuel), straight
// from the engine's idle rate.
FloorTable build_floor_from_oracle(const FactorGrid& grid, const OpModeTable& table,
                                   VehicleType vt, FuelType ft);

// Family entries routed by (x.vtype, x.fuel) through the common interface.
class FamilyModel : public EmissionModel {
 public:
  explicit FamilyModel(const SurrogateFamily& family) : family_(&family) {}
  double emission(double v, double a, const FactorVector& x) const override {
    return family_->predict(v, a, x);
  }
  std::string name() const override { return "surrogate"; }
  const SurrogateFamily& family() const { return *family_; }

 private:
  const SurrogateFamily* family_;
};

}  // namespace nmoves
