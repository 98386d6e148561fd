#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "nmoves/extraction.hpp"
#include "nmoves/oracle.hpp"
#include "nmoves/polynomial.hpp"
#include "nmoves/surrogate.hpp"
#include "nmoves/util.hpp"

using namespace nmoves;

namespace {

std::filesystem::path temp_dir() {
  auto dir = std::filesystem::temp_directory_path() / "nmoves_surrogate_test";
  std::filesystem::create_directories(dir);
  return dir;
}

MlpParameters random_params(uint64_t seed) {
  auto grid = FactorGrid::standard();
  MlpParameters m;
  m.input_lo = grid.input_lo();
  m.input_hi = grid.input_hi();
  Rng rng(seed);
  for (double& p : m.theta) p = rng.uniform(-0.5, 0.5);
  m.output_scale = 2.2;
  return m;
}

FactorVector vec_to_factors(const std::array<double, kMlpInputs>& in) {
  FactorVector x;
  x.grade = in[2];
  x.temp_f = in[3];
  x.humidity = in[4];
  x.age_year = in[5];
  return x;
}

// Scenario index for passenger car + gasoline (vehicle-fuel slot 1).
long long pc_scenario(long long th, long long grade, long long age) {
  return ((th * 11 + grade) * 11 + age) * 9 + 1;
}

DatasetPartition small_corpus() {
  auto grid = FactorGrid::standard();
  auto table = OpModeTable::standard();
  DatasetPartition part;
  part.provenance.subset = "test";
  const long long picks[4][3] = {{0, 5, 10}, {10, 5, 0}, {5, 0, 5}, {20, 10, 10}};
  for (const auto& p : picks) {
    auto recs = extract_scenario(grid, table, pc_scenario(p[0], p[1], p[2]), 5, 1.0);
    part.records.insert(part.records.end(), recs.begin(), recs.end());
  }
  return part;
}

}  // namespace

TEST_SUITE_BEGIN("surrogate");

TEST_CASE("parameter count matches the 6-5-5-1 layout") {
  CHECK(kMlpParamCount == 71);
  CHECK(kMlpInputs == 6);
  CHECK(kMlpHidden == 5);
}

TEST_CASE("mape loss hand values") {
  CHECK(mape_loss({110.0, 90.0}, {100.0, 100.0}) == doctest::Approx(10.0));
  CHECK(mape_loss({200.0}, {100.0}) == doctest::Approx(100.0));
  CHECK(mape_loss({100.0}, {100.0}) == doctest::Approx(0.0));
  // Zero targets are clamped rather than dividing by zero.
  double huge = mape_loss({1.0}, {0.0});
  CHECK(std::isfinite(huge));
  CHECK(huge == doctest::Approx(100.0 / kMapeTargetClamp));
  CHECK_THROWS_AS(mape_loss({}, {}), std::invalid_argument);
  CHECK_THROWS_AS(mape_loss({1.0}, {1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("zero weights reduce forward to the scaled output bias") {
  auto grid = FactorGrid::standard();
  MlpParameters m;
  m.input_lo = grid.input_lo();
  m.input_hi = grid.input_hi();
  m.output_scale = 3.0;
  CHECK(forward(m, 10.0, 1.0, FactorVector{}) == doctest::Approx(0.0));
  m.theta[70] = 2.5;  // output bias is the last slot
  CHECK(forward(m, 10.0, 1.0, FactorVector{}) == doctest::Approx(7.5));
  CHECK(forward(m, 0.0, -3.0, FactorVector{}) == doctest::Approx(7.5));
}

TEST_CASE("forward rejects non-finite inputs") {
  auto m = random_params(1);
  CHECK_THROWS_AS(forward(m, std::nan(""), 0.0, FactorVector{}), std::invalid_argument);
  FactorVector x;
  x.temp_f = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(forward(m, 5.0, 0.0, x), std::invalid_argument);
}

TEST_CASE("input gradients match central differences") {
  auto grid = FactorGrid::standard();
  auto m = random_params(7);
  auto lo = grid.input_lo();
  auto hi = grid.input_hi();
  Rng rng(99);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::array<double, kMlpInputs> in;
    for (int i = 0; i < kMlpInputs; ++i) {
      in[i] = rng.uniform(lo[i] + 0.05 * (hi[i] - lo[i]), hi[i] - 0.05 * (hi[i] - lo[i]));
    }
    auto x = vec_to_factors(in);
    auto g = grad_inputs(m, in[0], in[1], x);
    for (int i = 0; i < kMlpInputs; ++i) {
      double h = 1e-5 * (hi[i] - lo[i]);
      auto in_p = in, in_m = in;
      in_p[i] += h;
      in_m[i] -= h;
      double fp = forward(m, in_p[0], in_p[1], vec_to_factors(in_p));
      double fm = forward(m, in_m[0], in_m[1], vec_to_factors(in_m));
      double fd = (fp - fm) / (2 * h);
      double denom = std::max({std::abs(fd), std::abs(g[i]), 1e-6});
      REQUIRE(std::abs(g[i] - fd) / denom <= 1e-4);
      ++checked;
    }
  }
  CHECK(checked == 6000);
}

TEST_CASE("training is deterministic and reduces the loss") {
  auto grid = FactorGrid::standard();
  auto data = small_corpus();
  REQUIRE(data.records.size() == 4 * 4791);

  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.batch_size = 512;
  cfg.seed = 3;
  auto [m1, log1] = train_entry(grid, VehicleType::PassengerCar, FuelType::Gasoline, data, cfg);
  auto [m2, log2] = train_entry(grid, VehicleType::PassengerCar, FuelType::Gasoline, data, cfg);
  CHECK(m1.theta == m2.theta);
  CHECK(m1.output_scale == m2.output_scale);
  CHECK(log1.epoch_mape == log2.epoch_mape);
  REQUIRE(log1.epoch_mape.size() == 60);
  CHECK(log1.epoch_mape.back() < log1.epoch_mape.front());
  CHECK(log1.epoch_mape.back() < 40.0);

  cfg.seed = 4;
  auto [m3, log3] = train_entry(grid, VehicleType::PassengerCar, FuelType::Gasoline, data, cfg);
  CHECK(m3.theta != m1.theta);

  // The fit beats a cubic polynomial baseline on its own training data.
  auto poly = PolynomialModel::fit(grid, VehicleType::PassengerCar, FuelType::Gasoline, data);
  std::vector<double> pm, pp, tt;
  for (size_t i = 0; i < data.records.size(); i += 7) {
    const auto& r = data.records[i];
    pm.push_back(forward(m1, r.v, r.a, r.x));
    pp.push_back(poly.predict(r.v, r.a, r.x));
    tt.push_back(r.e);
  }
  CHECK(mape_loss(pm, tt) < mape_loss(pp, tt));
}

TEST_CASE("training filters records to the requested entry") {
  auto grid = FactorGrid::standard();
  auto data = small_corpus();  // passenger car + gasoline only
  TrainConfig cfg;
  cfg.epochs = 1;
  CHECK_THROWS_AS(train_entry(grid, VehicleType::TransitBus, FuelType::Diesel, data, cfg),
                  std::invalid_argument);
}

TEST_CASE("absurd step sizes raise a divergence error with a usable checkpoint") {
  auto grid = FactorGrid::standard();
  auto data = small_corpus();
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.batch_size = 256;
  cfg.learning_rate = 1e308;
  bool threw = false;
  try {
    train_entry(grid, VehicleType::PassengerCar, FuelType::Gasoline, data, cfg);
  } catch (const TrainingDiverged& e) {
    threw = true;
    for (double p : e.checkpoint.theta) CHECK(std::isfinite(p));
    CHECK(e.log.epoch_mape.size() < 5);
    CHECK(std::string(e.what()).find("epoch") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("family prediction clamps at the idling floor") {
  auto m = random_params(5);
  SurrogateFamily fam;
  fam.set_entry(VehicleType::PassengerCar, FuelType::Gasoline, m);

  FactorVector x;
  x.grade = 5.0;
  double raw = forward(m, 3.0, 0.5, x);

  SUBCASE("no floor leaves the raw output") {
    CHECK(fam.predict(3.0, 0.5, x) == doctest::Approx(raw));
  }
  SUBCASE("floor dominates and kills the gradient") {
    FloorTable table;
    table[{5.0, 60.0, 55.0, 2019.0}] = raw + 10.0;
    fam.set_floor(VehicleType::PassengerCar, FuelType::Gasoline, table);
    // Exact key match.
    FactorVector key = x;
    key.temp_f = 60.0;
    key.humidity = 55.0;
    key.age_year = 2019.0;
    CHECK(fam.idling_floor(key) == doctest::Approx(raw + 10.0));
    CHECK(fam.predict(3.0, 0.5, key) == doctest::Approx(raw + 10.0));
    auto g = fam.predict_grad(3.0, 0.5, key);
    for (double gi : g) CHECK(gi == 0.0);
    // Unseen factor values fall back to the entry's smallest floor.
    FactorVector other = key;
    other.temp_f = 72.0;
    CHECK(fam.idling_floor(other) == doctest::Approx(raw + 10.0));
  }
  SUBCASE("floor below the surface changes nothing") {
    FloorTable table;
    table[{5.0, 60.0, 55.0, 2019.0}] = raw - 10.0;
    fam.set_floor(VehicleType::PassengerCar, FuelType::Gasoline, table);
    FactorVector key = x;
    key.temp_f = 60.0;
    key.humidity = 55.0;
    key.age_year = 2019.0;
    CHECK(fam.predict(3.0, 0.5, key) == doctest::Approx(raw));
    auto g = fam.predict_grad(3.0, 0.5, key);
    auto gm = grad_inputs(m, 3.0, 0.5, key);
    for (int i = 0; i < kMlpInputs; ++i) CHECK(g[i] == doctest::Approx(gm[i]));
  }
}

TEST_CASE("oracle-derived floors are positive everywhere") {
  auto grid = FactorGrid::standard();
  auto table = OpModeTable::standard();
  auto floor = build_floor_from_oracle(grid, table, VehicleType::PassengerCar, FuelType::Gasoline);
  CHECK(floor.size() == 21 * 11 * 11);
  for (const auto& [key, value] : floor) CHECK(value > 0.0);
}

TEST_CASE("zero-speed records define the data-driven floor") {
  auto grid = FactorGrid::standard();
  auto table = OpModeTable::standard();
  DatasetPartition part;
  auto recs = extract_scenario(grid, table, pc_scenario(0, 5, 10), 5, 1.0);
  part.records.assign(recs.begin(), recs.end());
  auto floor = build_floor_from_data(part, VehicleType::PassengerCar, FuelType::Gasoline);
  REQUIRE(floor.size() == 1);  // one scenario, one factor combination
  // The tabulated value is the idle transition's emission.
  OracleModel oracle(table);
  const auto& [key, value] = *floor.begin();
  FactorVector x;
  x.grade = key.grade;
  x.temp_f = key.temp_f;
  x.humidity = key.humidity;
  x.age_year = key.age_year;
  CHECK(value == doctest::Approx(oracle.emission(0.0, 0.0, x)).epsilon(1e-12));
}

TEST_CASE("family files round-trip bit-exactly and reject corruption") {
  auto grid = FactorGrid::standard();
  auto table = OpModeTable::standard();
  SurrogateFamily fam;
  for (const auto& vf : grid.vehicle_fuel_pairs()) {
    auto m = random_params(17 + static_cast<uint64_t>(vf.vtype) * 2 + static_cast<uint64_t>(vf.fuel));
    fam.set_entry(vf.vtype, vf.fuel, m);
    fam.set_floor(vf.vtype, vf.fuel, build_floor_from_oracle(grid, table, vf.vtype, vf.fuel));
  }
  REQUIRE(fam.entry_count() == 9);

  auto path = (temp_dir() / "family.bin").string();
  fam.save(path);
  CHECK(std::filesystem::file_size(path) <= 4 * 1024 * 1024);

  auto back = SurrogateFamily::load(path);
  REQUIRE(back.entry_count() == 9);
  for (const auto& vf : grid.vehicle_fuel_pairs()) {
    const auto& a = fam.entry(vf.vtype, vf.fuel);
    const auto& b = back.entry(vf.vtype, vf.fuel);
    CHECK(a.theta == b.theta);
    CHECK(a.input_lo == b.input_lo);
    CHECK(a.input_hi == b.input_hi);
    CHECK(a.output_scale == b.output_scale);
  }
  FactorVector probe;
  probe.vtype = VehicleType::TransitBus;
  probe.fuel = FuelType::Diesel;
  probe.grade = -10.0;
  probe.temp_f = 41.0;
  probe.humidity = 89.0;
  probe.age_year = 2013.0;
  CHECK(back.idling_floor(probe) == doctest::Approx(fam.idling_floor(probe)).epsilon(1e-15));
  CHECK(back.predict(7.0, 0.3, probe) == doctest::Approx(fam.predict(7.0, 0.3, probe)).epsilon(1e-15));

  auto bytes = read_file(path);
  auto corrupt = [&](size_t offset, char value, const std::string& name) {
    auto copy = bytes;
    copy[offset] = value;
    auto bad_path = (temp_dir() / name).string();
    write_file_atomic(bad_path, copy);
    CHECK_THROWS_AS(SurrogateFamily::load(bad_path), std::runtime_error);
    std::filesystem::remove(bad_path);
  };
  corrupt(0, 'X', "bad_magic.bin");   // magic
  corrupt(4, 9, "bad_version.bin");   // format version
  auto truncated = bytes.substr(0, bytes.size() / 2);
  auto trunc_path = (temp_dir() / "truncated.bin").string();
  write_file_atomic(trunc_path, truncated);
  CHECK_THROWS_AS(SurrogateFamily::load(trunc_path), std::runtime_error);
  std::filesystem::remove(trunc_path);
  std::filesystem::remove(path);
}

TEST_CASE("family model routes through the shared interface") {
  auto m = random_params(23);
  SurrogateFamily fam;
  fam.set_entry(VehicleType::PassengerCar, FuelType::Gasoline, m);
  FamilyModel model(fam);
  FactorVector x;
  CHECK(model.emission(12.0, 0.8, x) == doctest::Approx(fam.predict(12.0, 0.8, x)));
  CHECK(std::string(model.name()).size() > 0);
}

TEST_CASE("missing entries are reported") {
  SurrogateFamily fam;
  CHECK_THROWS_AS(fam.entry(VehicleType::PassengerCar, FuelType::Gasoline), std::out_of_range);
  FactorVector x;
  CHECK_THROWS_AS(fam.predict(1.0, 0.0, x), std::out_of_range);
  CHECK_THROWS_AS(fam.set_entry(VehicleType::Motorcycle, FuelType::Diesel, MlpParameters{}),
                  std::invalid_argument);
}

TEST_SUITE_END();
