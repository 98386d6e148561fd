#include "nmoves/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nmoves/util.hpp"
#include "nmoves/version.hpp"

namespace nmoves {

namespace {

// flat layout offsets
constexpr int kW1 = 0;                                    // 5x6
constexpr int kB1 = kW1 + kMlpHidden * kMlpInputs;        // 5
constexpr int kW2 = kB1 + kMlpHidden;                     // 5x5
constexpr int kB2 = kW2 + kMlpHidden * kMlpHidden;        // 5
constexpr int kW3 = kB2 + kMlpHidden;                     // 5
constexpr int kB3 = kW3 + kMlpHidden;                     // 1
static_assert(kB3 + 1 == kMlpParamCount);

struct ForwardTrace {
  std::array<double, kMlpHidden> h1;
  std::array<double, kMlpHidden> h2;
  double y;  // pre-scale output
};

inline ForwardTrace forward_normalized(const double* theta, const double* z) {
  ForwardTrace t;
  for (int i = 0; i < kMlpHidden; ++i) {
    double s = theta[kB1 + i];
    const double* row = theta + kW1 + i * kMlpInputs;
    for (int k = 0; k < kMlpInputs; ++k) s += row[k] * z[k];
    t.h1[i] = std::tanh(s);
  }
  for (int i = 0; i < kMlpHidden; ++i) {
    double s = theta[kB2 + i];
    const double* row = theta + kW2 + i * kMlpHidden;
    for (int k = 0; k < kMlpHidden; ++k) s += row[k] * t.h1[k];
    t.h2[i] = std::tanh(s);
  }
  double y = theta[kB3];
  for (int i = 0; i < kMlpHidden; ++i) y += theta[kW3 + i] * t.h2[i];
  t.y = y;
  return t;
}

// Accumulates d(y_prescale)/d(theta) scaled by `gout` into grad, and
// optionally d(y_prescale)/d(z) into gz.
inline void backward_normalized(const double* theta, const double* z, const ForwardTrace& t,
                                double gout, double* grad, double* gz) {
  std::array<double, kMlpHidden> d2;
  for (int i = 0; i < kMlpHidden; ++i) {
    d2[i] = gout * theta[kW3 + i] * (1.0 - t.h2[i] * t.h2[i]);
  }
  std::array<double, kMlpHidden> d1{};
  for (int i = 0; i < kMlpHidden; ++i) {
    const double* row = theta + kW2 + i * kMlpHidden;
    for (int k = 0; k < kMlpHidden; ++k) d1[k] += d2[i] * row[k];
  }
  for (int k = 0; k < kMlpHidden; ++k) d1[k] *= 1.0 - t.h1[k] * t.h1[k];

  if (grad) {
    grad[kB3] += gout;
    for (int i = 0; i < kMlpHidden; ++i) grad[kW3 + i] += gout * t.h2[i];
    for (int i = 0; i < kMlpHidden; ++i) {
      grad[kB2 + i] += d2[i];
      double* row = grad + kW2 + i * kMlpHidden;
      for (int k = 0; k < kMlpHidden; ++k) row[k] += d2[i] * t.h1[k];
    }
    for (int i = 0; i < kMlpHidden; ++i) {
      grad[kB1 + i] += d1[i];
      double* row = grad + kW1 + i * kMlpInputs;
      for (int k = 0; k < kMlpInputs; ++k) row[k] += d1[i] * z[k];
    }
  }
  if (gz) {
    for (int k = 0; k < kMlpInputs; ++k) {
      double s = 0;
      for (int i = 0; i < kMlpHidden; ++i) s += d1[i] * theta[kW1 + i * kMlpInputs + k];
      gz[k] = s;
    }
  }
}

void normalize_inputs(const MlpParameters& m, double v, double a, const FactorVector& x,
                      double* z) {
  const double raw[kMlpInputs] = {v, a, x.grade, x.temp_f, x.humidity, x.age_year};
  for (int k = 0; k < kMlpInputs; ++k) {
    if (!std::isfinite(raw[k])) throw std::invalid_argument("non-finite model input");
    z[k] = 2.0 * (raw[k] - m.input_lo[k]) / (m.input_hi[k] - m.input_lo[k]) - 1.0;
  }
}

MlpParameters init_parameters(const std::array<double, 6>& lo, const std::array<double, 6>& hi,
                              double init_scale, Rng& rng) {
  MlpParameters m;
  m.input_lo = lo;
  m.input_hi = hi;
  auto layer = [&](int offset, int fan_in, int fan_out) {
    const double s = std::sqrt(6.0 / (fan_in + fan_out)) * init_scale;
    for (int i = 0; i < fan_in * fan_out; ++i) m.theta[static_cast<size_t>(offset + i)] = rng.uniform(-s, s);
  };
  layer(kW1, kMlpInputs, kMlpHidden);
  layer(kW2, kMlpHidden, kMlpHidden);
  layer(kW3, kMlpHidden, 1);
  // biases start at zero
  return m;
}

std::pair<int, int> entry_key(VehicleType vt, FuelType ft) {
  return {static_cast<int>(vt), static_cast<int>(ft)};
}

}  // namespace

double forward(const MlpParameters& m, double v, double a, const FactorVector& x) {
  double z[kMlpInputs];
  normalize_inputs(m, v, a, x, z);
  return forward_normalized(m.theta.data(), z).y * m.output_scale;
}

std::array<double, kMlpInputs> grad_inputs(const MlpParameters& m, double v, double a,
                                           const FactorVector& x) {
  double z[kMlpInputs];
  normalize_inputs(m, v, a, x, z);
  ForwardTrace t = forward_normalized(m.theta.data(), z);
  std::array<double, kMlpInputs> gz{};
  backward_normalized(m.theta.data(), z, t, 1.0, nullptr, gz.data());
  std::array<double, kMlpInputs> graw{};
  for (int k = 0; k < kMlpInputs; ++k) {
    // chain through the affine normalization
    graw[k] = gz[k] * m.output_scale * 2.0 / (m.input_hi[k] - m.input_lo[k]);
  }
  return graw;
}

double mape_loss(const std::vector<double>& predictions, const std::vector<double>& targets) {
  if (predictions.empty() || predictions.size() != targets.size()) {
    throw std::invalid_argument("mape_loss needs equal-sized, non-empty vectors");
  }
  double sum = 0;
  for (size_t i = 0; i < predictions.size(); ++i) {
    sum += std::abs(targets[i] - predictions[i]) / std::max(targets[i], kMapeTargetClamp);
  }
  return sum / static_cast<double>(predictions.size()) * 100.0;
}

std::pair<MlpParameters, TrainLog> train_entry(const FactorGrid& grid, VehicleType vt,
                                               FuelType ft, const DatasetPartition& data,
                                               const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw std::invalid_argument("epochs must be at least 1");
  if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be at least 1");
  if (!(cfg.learning_rate > 0)) throw std::invalid_argument("learning rate must be positive");

  // filter to the entry
  std::vector<const EmissionRecord*> recs;
  for (const auto& r : data.records) {
    if (r.x.vtype == vt && r.x.fuel == ft) recs.push_back(&r);
  }
  if (recs.empty()) {
    throw std::invalid_argument(std::string("no training records for ") + to_token(vt) + "/" +
                                to_token(ft));
  }
  const size_t n = recs.size();

  // pre-normalized design matrix and clamped targets
  MlpParameters m;
  {
    Rng init_rng(mix_seed(cfg.seed, fnv1a("init")));
    m = init_parameters(grid.input_lo(), grid.input_hi(), cfg.init_scale, init_rng);
  }
  std::vector<double> zs(n * kMlpInputs);
  std::vector<double> ys(n);
  double target_sum = 0;
  for (size_t i = 0; i < n; ++i) {
    const auto& r = *recs[i];
    const double raw[kMlpInputs] = {r.v, r.a, r.x.grade, r.x.temp_f, r.x.humidity, r.x.age_year};
    for (int k = 0; k < kMlpInputs; ++k) {
      zs[i * kMlpInputs + k] =
          2.0 * (raw[k] - m.input_lo[k]) / (m.input_hi[k] - m.input_lo[k]) - 1.0;
    }
    ys[i] = std::max(r.e, kMapeTargetClamp);
    target_sum += ys[i];
  }
  m.output_scale = target_sum / static_cast<double>(n);

  // Adam moments
  std::array<double, kMlpParamCount> mom1{}, mom2{};
  const double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long long step = 0;

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  Rng shuffle_rng(mix_seed(cfg.seed, fnv1a("shuffle")));

  TrainLog log;
  MlpParameters last_finite = m;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_abs_pct = 0;
    std::array<double, kMlpParamCount> grad{};
    for (size_t start = 0; start < n; start += static_cast<size_t>(cfg.batch_size)) {
      const size_t stop = std::min(n, start + static_cast<size_t>(cfg.batch_size));
      const double batch_n = static_cast<double>(stop - start);
      grad.fill(0.0);
      for (size_t bi = start; bi < stop; ++bi) {
        const double* z = zs.data() + order[bi] * kMlpInputs;
        const double target = ys[order[bi]];
        ForwardTrace t = forward_normalized(m.theta.data(), z);
        const double pred = t.y * m.output_scale;
        const double err = pred - target;
        epoch_abs_pct += std::abs(err) / target;
        // d(MAPE)/d(pred) for this sample, through the fixed output scale
        const double g = (err > 0 ? 1.0 : err < 0 ? -1.0 : 0.0) / target * (100.0 / batch_n) *
                         m.output_scale;
        backward_normalized(m.theta.data(), z, t, g, grad.data(), nullptr);
      }
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (int p = 0; p < kMlpParamCount; ++p) {
        mom1[p] = beta1 * mom1[p] + (1 - beta1) * grad[p];
        mom2[p] = beta2 * mom2[p] + (1 - beta2) * grad[p] * grad[p];
        m.theta[p] -= cfg.learning_rate * (mom1[p] / c1) / (std::sqrt(mom2[p] / c2) + eps);
      }
    }
    const double epoch_mape = epoch_abs_pct / static_cast<double>(n) * 100.0;
    if (!std::isfinite(epoch_mape)) {
      throw TrainingDiverged("training loss became non-finite at epoch " +
                                 std::to_string(epoch),
                             last_finite, log);
    }
    log.epoch_mape.push_back(epoch_mape);
    bool finite = true;
    for (double p : m.theta) finite = finite && std::isfinite(p);
    if (!finite) {
      throw TrainingDiverged("parameters became non-finite at epoch " + std::to_string(epoch),
                             last_finite, log);
    }
    last_finite = m;
  }
  return {m, log};
}

bool SurrogateFamily::has_entry(VehicleType vt, FuelType ft) const {
  return entries_.count(entry_key(vt, ft)) != 0;
}

void SurrogateFamily::set_entry(VehicleType vt, FuelType ft, const MlpParameters& m) {
  if (!vehicle_fuel_valid(vt, ft)) {
    throw std::invalid_argument("no such family entry: invalid (vehicle, fuel) pair");
  }
  entries_[entry_key(vt, ft)] = m;
}

const MlpParameters* SurrogateFamily::find(VehicleType vt, FuelType ft) const {
  auto it = entries_.find(entry_key(vt, ft));
  return it == entries_.end() ? nullptr : &it->second;
}

const MlpParameters& SurrogateFamily::entry(VehicleType vt, FuelType ft) const {
  const MlpParameters* m = find(vt, ft);
  if (!m) {
    throw std::out_of_range(std::string("no trained entry for ") + to_token(vt) + "/" +
                            to_token(ft));
  }
  return *m;
}

void SurrogateFamily::set_floor(VehicleType vt, FuelType ft, FloorTable table) {
  const auto key = entry_key(vt, ft);
  double lo = 0;
  if (!table.empty()) {
    lo = table.begin()->second;
    for (const auto& [k, val] : table) lo = std::min(lo, val);
  }
  floor_min_[key] = lo;
  floors_[key] = std::move(table);
}

double SurrogateFamily::idling_floor(const FactorVector& x) const {
  const auto key = entry_key(x.vtype, x.fuel);
  auto it = floors_.find(key);
  if (it == floors_.end() || it->second.empty()) return 0.0;
  auto hit = it->second.find(FloorKey{x.grade, x.temp_f, x.humidity, x.age_year});
  if (hit != it->second.end()) return hit->second;
  return floor_min_.at(key);
}

double SurrogateFamily::predict(double v, double a, const FactorVector& x) const {
  const MlpParameters* m = find(x.vtype, x.fuel);
  if (!m) {
    throw std::out_of_range(std::string("no trained entry for ") + to_token(x.vtype) + "/" +
                            to_token(x.fuel));
  }
  return std::max(forward(*m, v, a, x), idling_floor(x));
}

std::array<double, kMlpInputs> SurrogateFamily::predict_grad(double v, double a,
                                                             const FactorVector& x) const {
  const MlpParameters& m = entry(x.vtype, x.fuel);
  if (forward(m, v, a, x) < idling_floor(x)) return {};  // flat side of the max
  return grad_inputs(m, v, a, x);
}

void SurrogateFamily::save(const std::string& path) const {
  std::string out;
  out.append(kModelMagic, 4);
  put_u8(out, kModelFormatVersion);
  put_u8(out, static_cast<uint8_t>(entries_.size()));
  for (const auto& [key, m] : entries_) {
    put_u8(out, static_cast<uint8_t>(key.first));
    put_u8(out, static_cast<uint8_t>(key.second));
    for (double p : m.theta) put_f64(out, p);
    for (double p : m.input_lo) put_f64(out, p);
    for (double p : m.input_hi) put_f64(out, p);
    put_f64(out, m.output_scale);
    auto fit = floors_.find(key);
    const FloorTable empty;
    const FloorTable& table = fit == floors_.end() ? empty : fit->second;
    put_u32(out, static_cast<uint32_t>(table.size()));
    for (const auto& [fk, val] : table) {
      put_f64(out, fk.grade);
      put_f64(out, fk.temp_f);
      put_f64(out, fk.humidity);
      put_f64(out, fk.age_year);
      put_f64(out, val);
    }
  }
  write_file_atomic(path, out);
}

SurrogateFamily SurrogateFamily::load(const std::string& path) {
  const std::string blob = read_file(path);
  ByteReader r(blob);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != std::string_view(kModelMagic, 4)) {
    throw std::runtime_error(path + ": not a model file (bad magic)");
  }
  const uint8_t version = r.u8();
  if (version != kModelFormatVersion) {
    throw std::runtime_error(path + ": unsupported model format version " +
                             std::to_string(version));
  }
  SurrogateFamily f;
  const uint8_t count = r.u8();
  for (int e = 0; e < count; ++e) {
    const uint8_t vt = r.u8();
    const uint8_t ft = r.u8();
    if (vt >= kVehicleTypeCount || ft >= kFuelTypeCount) {
      throw std::runtime_error(path + ": invalid entry key");
    }
    MlpParameters m;
    for (double& p : m.theta) p = r.f64();
    for (double& p : m.input_lo) p = r.f64();
    for (double& p : m.input_hi) p = r.f64();
    m.output_scale = r.f64();
    FloorTable table;
    const uint32_t rows = r.u32();
    for (uint32_t i = 0; i < rows; ++i) {
      FloorKey k{};
      k.grade = r.f64();
      k.temp_f = r.f64();
      k.humidity = r.f64();
      k.age_year = r.f64();
      table[k] = r.f64();
    }
    f.set_entry(static_cast<VehicleType>(vt), static_cast<FuelType>(ft), m);
    f.set_floor(static_cast<VehicleType>(vt), static_cast<FuelType>(ft), std::move(table));
  }
  if (!r.done()) throw std::runtime_error(path + ": trailing bytes");
  return f;
}

FloorTable build_floor_from_data(const DatasetPartition& data, VehicleType vt, FuelType ft) {
  FloorTable t;
  for (const auto& r : data.records) {
    if (r.x.vtype == vt && r.x.fuel == ft && r.v == 0.0 && r.a == 0.0) {
      t[FloorKey{r.x.grade, r.x.temp_f, r.x.humidity, r.x.age_year}] = r.e;
    }
  }
  return t;
}

FloorTable build_floor_from_oracle(const FactorGrid& grid, const OpModeTable& table,
                                   VehicleType vt, FuelType ft) {
  FloorTable t;
  for (long long i = 0; i < grid.scenario_count(); ++i) {
    const FactorVector x = grid.scenario(i);
    if (x.vtype == vt && x.fuel == ft) {
      t[FloorKey{x.grade, x.temp_f, x.humidity, x.age_year}] = table.idling_rate(x);
    }
  }
  return t;
}

}  // namespace nmoves
