// Command-line front end: extract, stats, gen-cycles, train, predict,
// validate, ecodrive. Exit codes: 0 success, 1 runtime failure, 2 usage.
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "nmoves/config.hpp"
#include "nmoves/cycles.hpp"
#include "nmoves/dataset.hpp"
#include "nmoves/ecodrive.hpp"
#include "nmoves/extraction.hpp"
#include "nmoves/factors.hpp"
#include "nmoves/oracle.hpp"
#include "nmoves/surrogate.hpp"
#include "nmoves/util.hpp"
#include "nmoves/validation.hpp"
#include "nmoves/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nmoves;

namespace {

// Timestamps appear here and nowhere else, so re-runs with equal settings
// reproduce every other byte of the outputs.
struct RunManifest {
  std::string subcommand;
  std::string config_path;
  uint64_t seed = 0;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  uint64_t config_hash = 0;
  std::string version = kVersion;
  std::string timestamp;

  json to_json() const {
    return json{{"subcommand", subcommand}, {"config_path", config_path},
                {"seed", seed},             {"inputs", inputs},
                {"outputs", outputs},       {"config_hash", config_hash},
                {"version", version},       {"timestamp", timestamp}};
  }
};

std::string utc_now() {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string absolute_path(const std::string& p) {
  return fs::absolute(fs::path(p)).lexically_normal().string();
}

RunManifest make_manifest(const std::string& subcommand, const std::string& config_path,
                          uint64_t seed, const KeyValueConfig& effective,
                          std::vector<std::string> inputs, std::vector<std::string> outputs) {
  RunManifest m;
  m.subcommand = subcommand;
  m.config_path = config_path.empty() ? "" : absolute_path(config_path);
  m.seed = seed;
  for (auto& p : inputs) m.inputs.push_back(absolute_path(p));
  for (auto& p : outputs) m.outputs.push_back(absolute_path(p));
  m.config_hash = effective.hash();
  m.timestamp = utc_now();
  return m;
}

void write_manifest_file(const RunManifest& m, const std::string& path) {
  write_file_atomic(path, m.to_json().dump(2) + "\n");
}

// Directories expand to their contained partitions, sorted for determinism.
std::vector<std::string> expand_data_paths(const std::vector<std::string>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      std::vector<std::string> found;
      for (const auto& entry : fs::directory_iterator(p)) {
        auto ext = entry.path().extension().string();
        if (entry.is_regular_file() && (ext == ".csv" || ext == ".nmre")) {
          found.push_back(entry.path().string());
        }
      }
      std::sort(found.begin(), found.end());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

int fail(const std::string& msg) {
  std::cerr << "error: " << msg << "\n";
  return 1;
}

int usage_error(const std::string& msg) {
  std::cerr << "usage error: " << msg << "\n";
  return 2;
}

// ---- extract ----------------------------------------------------------

struct ExtractArgs {
  std::string scenarios = "0..1";
  std::string out_dir;
  std::string config_path;
  int samples = 5;
  double dt = 1.0;
  bool binary = false;
  int jobs = 0;
};

bool parse_range(const std::string& text, long long& begin, long long& end) {
  auto pos = text.find("..");
  if (pos == std::string::npos) return false;
  try {
    size_t used = 0;
    begin = std::stoll(text.substr(0, pos), &used);
    if (used != pos) return false;
    auto rest = text.substr(pos + 2);
    end = std::stoll(rest, &used);
    if (used != rest.size()) return false;
  } catch (const std::exception&) {
    return false;
  }
  return true;
}

int cmd_extract(const ExtractArgs& args) {
  long long begin = 0, end = 0;
  if (!parse_range(args.scenarios, begin, end) || begin < 0 || end < begin) {
    return usage_error("--scenarios expects a range like 120..150 with begin <= end");
  }
  if (args.samples < 1 || args.dt <= 0) {
    return usage_error("--samples must be >= 1 and --dt positive");
  }
  try {
    KeyValueConfig cfg = args.config_path.empty() ? KeyValueConfig()
                                                  : KeyValueConfig::parse_file(args.config_path);
    auto grid = args.config_path.empty() ? FactorGrid::standard() : FactorGrid::from_config(cfg);
    if (end > grid.scenario_count()) {
      return usage_error("scenario range exceeds the grid's " +
                         std::to_string(grid.scenario_count()) + " scenarios");
    }
    auto table = OpModeTable::standard();
    ExtractOptions opt;
    opt.scenario_begin = begin;
    opt.scenario_end = end;
    opt.n = args.samples;
    opt.dt = args.dt;
    opt.binary = args.binary;
    opt.jobs = args.jobs;
    auto report = extract_dataset(grid, table, args.out_dir, opt);

    KeyValueConfig effective = cfg;
    effective.set("scenarios", args.scenarios);
    effective.set("samples", std::to_string(args.samples));
    effective.set("dt", format_double(args.dt));
    effective.set("binary", args.binary ? "1" : "0");
    auto manifest = make_manifest("extract", args.config_path, 0, effective, {},
                                  {args.out_dir});
    json doc = json::parse(report.to_json());
    doc["manifest"] = manifest.to_json();
    write_file_atomic((fs::path(args.out_dir) / "report.json").string(), doc.dump(2) + "\n");
    write_manifest_file(manifest, (fs::path(args.out_dir) / "manifest.json").string());

    std::cout << "wrote " << report.records_written << " records in "
              << report.scenarios_written << " scenarios";
    if (report.scenarios_skipped > 0) {
      std::cout << ", skipped " << report.scenarios_skipped << " already present";
    }
    std::cout << "\n";
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}

// ---- stats ------------------------------------------------------------

struct StatsArgs {
  std::vector<std::string> data;
  std::string out_path;
  long long expected = -1;
  bool tolerate_gaps = false;
};

int cmd_stats(const StatsArgs& args) {
  try {
    auto paths = expand_data_paths(args.data);
    if (paths.empty()) return fail("no partition files found");
    LoadOptions opt;
    opt.expected_records = args.expected;
    opt.tolerate_gaps = args.tolerate_gaps;
    auto loaded = load_partitions(paths, opt);
    auto stats = summarize(loaded.partition);
    json doc = json::parse(stats.to_json());
    if (loaded.gap_count > 0) doc["gap_count"] = loaded.gap_count;
    std::cout << doc.dump(2) << "\n";
    if (!args.out_path.empty()) {
      KeyValueConfig effective;
      effective.set("expected", std::to_string(args.expected));
      doc["manifest"] =
          make_manifest("stats", "", 0, effective, paths, {args.out_path}).to_json();
      write_file_atomic(args.out_path, doc.dump(2) + "\n");
    }
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}

// ---- gen-cycles -------------------------------------------------------

struct GenCyclesArgs {
  std::string out_dir;
  int per_strategy = 5;
  uint64_t seed = 1;
  double duration = 120.0;
  double dt = 1.0;
};

int cmd_gen_cycles(const GenCyclesArgs& args) {
  if (args.per_strategy < 1) return usage_error("--per-strategy must be >= 1");
  if (args.duration <= 0 || args.dt <= 0) return usage_error("--duration and --dt must be positive");
  try {
    fs::create_directories(args.out_dir);
    auto suite = generate_suite(args.per_strategy, args.seed, args.duration, args.dt);
    std::vector<std::string> outputs;
    std::map<CycleStrategy, int> counter;
    for (const auto& labeled : suite) {
      int k = counter[labeled.strategy]++;
      auto name = std::string(to_token(labeled.strategy)) + "_" + std::to_string(k) + ".csv";
      auto path = (fs::path(args.out_dir) / name).string();
      save_cycle_csv(labeled.cycle, path);
      outputs.push_back(path);
    }
    KeyValueConfig effective;
    effective.set("per_strategy", std::to_string(args.per_strategy));
    effective.set("duration", format_double(args.duration));
    effective.set("dt", format_double(args.dt));
    auto manifest = make_manifest("gen-cycles", "", args.seed, effective, {}, outputs);
    write_manifest_file(manifest, (fs::path(args.out_dir) / "manifest.json").string());
    std::cout << "wrote " << suite.size() << " cycle files\n";
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}

// ---- train ------------------------------------------------------------

struct TrainArgs {
  std::vector<std::string> data;
  std::string out_path;
  std::string log_path;
  std::string vtype;
  std::string fuel;
  int epochs = 300;
  int batch = 1024;
  double lr = 1e-3;
  uint64_t seed = 1;
  double holdout = 0.0;
  uint64_t split_seed = 9;
};

struct HoldoutStats {
  double mape = 0, mpe = 0;
  long long n = 0;
};

HoldoutStats holdout_stats(const SurrogateFamily& family, const DatasetPartition& part,
                           VehicleType vt, FuelType ft) {
  HoldoutStats s;
  double abs_sum = 0, signed_sum = 0;
  for (const auto& r : part.records) {
    if (r.x.vtype != vt || r.x.fuel != ft) continue;
    double pct = (family.predict(r.v, r.a, r.x) - r.e) / std::max(r.e, kMapeTargetClamp) * 100.0;
    abs_sum += std::abs(pct);
    signed_sum += pct;
    ++s.n;
  }
  if (s.n > 0) {
    s.mape = abs_sum / s.n;
    s.mpe = signed_sum / s.n;
  }
  return s;
}

int cmd_train(const TrainArgs& args) {
  if (args.vtype.empty() != args.fuel.empty()) {
    return usage_error("--vtype and --fuel must be given together");
  }
  if (args.epochs < 1 || args.batch < 1 || args.lr <= 0) {
    return usage_error("--epochs and --batch must be >= 1, --lr positive");
  }
  if (args.holdout < 0 || args.holdout >= 1) {
    return usage_error("--holdout must lie in [0, 1)");
  }
  try {
    auto paths = expand_data_paths(args.data);
    if (paths.empty()) return fail("no partition files found");
    auto loaded = load_partitions(paths, LoadOptions{});
    DatasetPartition train_part = loaded.partition;
    DatasetPartition held;
    if (args.holdout > 0) {
      std::tie(train_part, held) =
          split_partition(loaded.partition, 1.0 - args.holdout, args.holdout, args.split_seed);
    }

    std::vector<std::pair<VehicleType, FuelType>> wanted;
    if (!args.vtype.empty()) {
      wanted.emplace_back(vehicle_type_from_token(args.vtype), fuel_type_from_token(args.fuel));
    } else {
      std::set<std::pair<int, int>> seen;
      for (const auto& r : train_part.records) {
        seen.emplace(static_cast<int>(r.x.vtype), static_cast<int>(r.x.fuel));
      }
      for (auto [vt, ft] : seen) {
        wanted.emplace_back(static_cast<VehicleType>(vt), static_cast<FuelType>(ft));
      }
    }
    if (wanted.empty()) return fail("dataset holds no trainable entries");

    auto grid = FactorGrid::standard();
    TrainConfig cfg;
    cfg.epochs = args.epochs;
    cfg.batch_size = args.batch;
    cfg.learning_rate = args.lr;
    cfg.seed = args.seed;

    KeyValueConfig effective;
    effective.set("epochs", std::to_string(args.epochs));
    effective.set("batch", std::to_string(args.batch));
    effective.set("lr", format_double(args.lr));
    effective.set("holdout", format_double(args.holdout));
    effective.set("split_seed", std::to_string(args.split_seed));
    std::vector<std::string> outputs = {args.out_path};
    if (!args.log_path.empty()) outputs.push_back(args.log_path);
    auto manifest = make_manifest("train", "", args.seed, effective, paths, outputs);

    SurrogateFamily family;
    std::string log_text = "# manifest: " + manifest.to_json().dump() + "\n";
    log_text += "vtype,fuel,epoch,train_mape\n";
    for (auto [vt, ft] : wanted) {
      auto [params, log] = train_entry(grid, vt, ft, train_part, cfg);
      family.set_entry(vt, ft, params);
      family.set_floor(vt, ft, build_floor_from_data(train_part, vt, ft));
      for (size_t e = 0; e < log.epoch_mape.size(); ++e) {
        log_text += std::string(to_token(vt)) + "," + to_token(ft) + "," + std::to_string(e) +
                    "," + format_double_sig(log.epoch_mape[e], 6) + "\n";
      }
      std::cout << to_token(vt) << "/" << to_token(ft) << ": final train MAPE "
                << format_double_sig(log.epoch_mape.back(), 4) << "%";
      if (args.holdout > 0) {
        auto hs = holdout_stats(family, held, vt, ft);
        std::cout << ", holdout MAPE " << format_double_sig(hs.mape, 4) << "% MPE "
                  << format_double_sig(hs.mpe, 4) << "% (n=" << hs.n << ")";
      }
      std::cout << "\n";
    }
    family.save(args.out_path);
    write_manifest_file(manifest, args.out_path + ".manifest.json");
    if (!args.log_path.empty()) write_file_atomic(args.log_path, log_text);
  } catch (const TrainingDiverged& e) {
    return fail(std::string("training diverged: ") + e.what());
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}

// ---- predict ----------------------------------------------------------

struct PredictArgs {
  std::string model_path;
  double v = 0, a = 0;
  double grade = 0, temp_f = 60, humidity = 55, age = 2019;
  std::string vtype = "passenger_car";
  std::string fuel = "gasoline";
};

int cmd_predict(const PredictArgs& args) {
  try {
    auto family = SurrogateFamily::load(args.model_path);
    FactorVector x;
    x.grade = args.grade;
    x.temp_f = args.temp_f;
    x.humidity = args.humidity;
    x.age_year = args.age;
    x.vtype = vehicle_type_from_token(args.vtype);
    x.fuel = fuel_type_from_token(args.fuel);
    std::cout << format_double(family.predict(args.v, args.a, x)) << "\n";
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}

// ---- validate ---------------------------------------------------------

struct ValidateArgs {
  std::string model_path;
  bool oracle = false;
  int scenarios = 27;
  int cycles = 25;
  uint64_t seed = 1;
  double duration = 120.0;
  double dt = 1.0;
  int jobs = 0;
  std::string out_path;
  std::string errors_path;
  double gate = -1.0;
};

// Round-robin over strategies so any truncation still covers all five.
std::vector<LabeledCycle> cycle_sample(int count, uint64_t seed, double duration, double dt) {
  int per = (count + kCycleStrategyCount - 1) / kCycleStrategyCount;
  auto suite = generate_suite(per, seed, duration, dt);
  std::vector<LabeledCycle> out;
  for (int k = 0; k < per && static_cast<int>(out.size()) < count; ++k) {
    for (int s = 0; s < kCycleStrategyCount && static_cast<int>(out.size()) < count; ++s) {
      out.push_back(suite[static_cast<size_t>(s) * per + k]);
    }
  }
  return out;
}

int cmd_validate(const ValidateArgs& args) {
  if (args.oracle == !args.model_path.empty()) {
    return usage_error("pass exactly one of --model and --oracle");
  }
  if (args.scenarios < 1 || args.cycles < 1) {
    return usage_error("--scenarios and --cycles must be >= 1");
  }
  try {
    auto grid = FactorGrid::standard();
    auto table = OpModeTable::standard();
    OracleModel reference(table, args.dt);

    SurrogateFamily family;
    std::unique_ptr<EmissionModel> candidate;
    if (args.oracle) {
      candidate = std::make_unique<OracleModel>(table, args.dt);
    } else {
      family = SurrogateFamily::load(args.model_path);
      candidate = std::make_unique<FamilyModel>(family);
    }

    // Scenarios are drawn only from (vtype, fuel) pairs the candidate covers.
    std::vector<long long> eligible;
    for (long long s = 0; s < grid.scenario_count(); ++s) {
      auto x = grid.scenario(s);
      if (args.oracle || family.has_entry(x.vtype, x.fuel)) eligible.push_back(s);
    }
    if (static_cast<long long>(eligible.size()) < args.scenarios) {
      return fail("model covers only " + std::to_string(eligible.size()) +
                  " scenarios, need " + std::to_string(args.scenarios));
    }
    Rng rng(mix_seed(args.seed, 0xa11ce5u));
    rng.shuffle(eligible);
    eligible.resize(args.scenarios);
    std::sort(eligible.begin(), eligible.end());
    std::vector<FactorVector> scenario_vals;
    for (long long s : eligible) scenario_vals.push_back(grid.scenario(s));

    auto cycles = cycle_sample(args.cycles, args.seed, args.duration, args.dt);
    EvaluateOptions opts;
    opts.jobs = args.jobs;
    auto report = evaluate(*candidate, reference, scenario_vals, cycles, opts);
    std::cout << render_table(report);

    if (!args.out_path.empty()) {
      KeyValueConfig effective;
      effective.set("scenarios", std::to_string(args.scenarios));
      effective.set("cycles", std::to_string(args.cycles));
      effective.set("duration", format_double(args.duration));
      effective.set("dt", format_double(args.dt));
      effective.set("candidate", args.oracle ? "oracle" : "model");
      std::vector<std::string> inputs;
      if (!args.model_path.empty()) inputs.push_back(args.model_path);
      auto manifest =
          make_manifest("validate", "", args.seed, effective, inputs, {args.out_path});
      json doc = json::parse(report_to_json(report));
      doc["manifest"] = manifest.to_json();
      write_file_atomic(args.out_path, doc.dump(2) + "\n");
    }
    if (!args.errors_path.empty()) write_errors_csv(report, args.errors_path);

    if (args.gate >= 0 && report.overall.mape > args.gate) {
      std::cerr << "gate failed: MAPE " << format_double_sig(report.overall.mape, 4)
                << "% > " << format_double(args.gate) << "%\n";
      return 1;
    }
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}

// ---- ecodrive ---------------------------------------------------------

struct EcodriveArgs {
  std::string model_path;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  bool receding = false;
  int steps = -1;
  std::string sweep;
  std::string values;
};

int cmd_ecodrive(const EcodriveArgs& args) {
  KeyValueConfig cfg;
  try {
    if (!args.config_path.empty()) cfg = KeyValueConfig::parse_file(args.config_path);
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  for (const auto& kv : args.overrides) {
    auto pos = kv.find('=');
    if (pos == std::string::npos || pos == 0) {
      return usage_error("--set expects key=value, got '" + kv + "'");
    }
    cfg.set(trim(kv.substr(0, pos)), trim(kv.substr(pos + 1)));
  }
  if (args.sweep.empty() != args.values.empty()) {
    return usage_error("--sweep and --values must be given together");
  }
  try {
    auto family = SurrogateFamily::load(args.model_path);
    auto problem = problem_from_config(cfg, family);
    fs::create_directories(args.out_dir);

    std::vector<std::string> outputs;
    if (!args.sweep.empty()) {
      auto dim = sweep_dimension_from_token(args.sweep);
      std::vector<double> values;
      for (const auto& tok : split(args.values, ',')) values.push_back(parse_double(trim(tok)));
      auto results = environment_sweep(problem, dim, values);
      for (size_t i = 0; i < results.size(); ++i) {
        auto name = "sweep_" + args.sweep + "_" + format_double(values[i]) + ".csv";
        auto path = (fs::path(args.out_dir) / name).string();
        save_trajectory_csv(results[i].trajectory, problem, path);
        outputs.push_back(path);
        std::cout << args.sweep << "=" << format_double(values[i]) << ": emission "
                  << format_double_sig(results[i].trajectory.total_emission, 6) << " g, objective "
                  << format_double_sig(results[i].trajectory.objective, 6) << "\n";
      }
    } else if (args.receding) {
      auto res = run_receding_horizon(problem, args.steps);
      auto path = (fs::path(args.out_dir) / "closed_loop.csv").string();
      EcoProblem scored = problem;
      scored.horizon = std::max(res.steps_completed, 1);
      save_trajectory_csv(res.trajectory, scored, path);
      outputs.push_back(path);
      std::cout << "completed " << res.steps_completed << " steps, emission "
                << format_double_sig(res.trajectory.total_emission, 6) << " g\n";
      if (!res.completed) {
        std::cerr << "receding horizon stopped early: " << res.report << "\n";
        return 1;
      }
    } else {
      auto res = solve_horizon(problem);
      auto path = (fs::path(args.out_dir) / "trajectory.csv").string();
      save_trajectory_csv(res.trajectory, problem, path);
      outputs.push_back(path);
      std::cout << "emission " << format_double_sig(res.trajectory.total_emission, 6)
                << " g, objective " << format_double_sig(res.trajectory.objective, 6) << "\n";
    }

    KeyValueConfig effective = cfg;
    effective.set("sweep", args.sweep);
    effective.set("values", args.values);
    effective.set("receding", args.receding ? "1" : "0");
    auto manifest = make_manifest("ecodrive", args.config_path, 0, effective,
                                  {args.model_path}, outputs);
    write_manifest_file(manifest, (fs::path(args.out_dir) / "manifest.json").string());
  } catch (const InfeasibleProblem& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    return fail(e.what());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MOVES-style emission pipeline: extraction, surrogate training, "
               "validation, eco-driving"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  ExtractArgs extract_args;
  auto* extract = app.add_subcommand("extract", "Extract per-second emission records");
  extract->add_option("--scenarios", extract_args.scenarios,
                      "Scenario index range, end exclusive (e.g. 0..27)");
  extract->add_option("--out", extract_args.out_dir, "Output directory")->required();
  extract->add_option("--samples", extract_args.samples, "Baseline cruise samples per pair");
  extract->add_option("--dt", extract_args.dt, "Timestep seconds");
  extract->add_flag("--binary", extract_args.binary, "Write binary partitions");
  extract->add_option("--jobs", extract_args.jobs, "Worker threads (0: all cores)");
  extract->add_option("--config", extract_args.config_path, "Grid config file");

  StatsArgs stats_args;
  auto* stats = app.add_subcommand("stats", "Summarize extracted partitions");
  stats->add_option("--data", stats_args.data, "Partition files or directories")->required();
  stats->add_option("--out", stats_args.out_path, "Write the summary JSON here");
  stats->add_option("--expected", stats_args.expected, "Expected record count (-1: skip check)");
  stats->add_flag("--tolerate-gaps", stats_args.tolerate_gaps, "Allow missing records");

  GenCyclesArgs gen_args;
  auto* gen = app.add_subcommand("gen-cycles", "Generate driving cycle CSVs");
  gen->add_option("--out", gen_args.out_dir, "Output directory")->required();
  gen->add_option("--per-strategy", gen_args.per_strategy, "Cycles per strategy");
  gen->add_option("--seed", gen_args.seed, "Suite seed");
  gen->add_option("--duration", gen_args.duration, "Cycle length seconds");
  gen->add_option("--dt", gen_args.dt, "Sample spacing seconds");

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "Train surrogate entries (single-threaded)");
  train->add_option("--data", train_args.data, "Partition files or directories")->required();
  train->add_option("--out", train_args.out_path, "Model file to write")->required();
  train->add_option("--log", train_args.log_path, "Per-epoch CSV log");
  train->add_option("--vtype", train_args.vtype, "Train only this vehicle type");
  train->add_option("--fuel", train_args.fuel, "Train only this fuel");
  train->add_option("--epochs", train_args.epochs, "Training epochs");
  train->add_option("--batch", train_args.batch, "Minibatch size");
  train->add_option("--lr", train_args.lr, "Learning rate");
  train->add_option("--seed", train_args.seed, "Init/shuffle seed");
  train->add_option("--holdout", train_args.holdout, "Held-out fraction for reporting");
  train->add_option("--split-seed", train_args.split_seed, "Holdout split seed");

  PredictArgs predict_args;
  auto* predict = app.add_subcommand("predict", "One emission prediction");
  predict->add_option("--model", predict_args.model_path, "Model file")->required();
  predict->add_option("--v", predict_args.v, "Speed m/s")->required();
  predict->add_option("--a", predict_args.a, "Acceleration m/s^2")->required();
  predict->add_option("--grade", predict_args.grade, "Road grade percent");
  predict->add_option("--temp", predict_args.temp_f, "Temperature F");
  predict->add_option("--humidity", predict_args.humidity, "Relative humidity percent");
  predict->add_option("--age", predict_args.age, "Vehicle model year");
  predict->add_option("--vtype", predict_args.vtype, "Vehicle type token");
  predict->add_option("--fuel", predict_args.fuel, "Fuel token");

  ValidateArgs validate_args;
  auto* validate = app.add_subcommand("validate", "Cross-product cycle validation");
  validate->add_option("--model", validate_args.model_path, "Candidate model file");
  validate->add_flag("--oracle", validate_args.oracle, "Self-check the oracle against itself");
  validate->add_option("--scenarios", validate_args.scenarios, "Scenario sample size");
  validate->add_option("--cycles", validate_args.cycles, "Cycle sample size");
  validate->add_option("--seed", validate_args.seed, "Sampling seed");
  validate->add_option("--duration", validate_args.duration, "Cycle length seconds");
  validate->add_option("--dt", validate_args.dt, "Sample spacing seconds");
  validate->add_option("--jobs", validate_args.jobs, "Worker threads (0: all cores)");
  validate->add_option("--out", validate_args.out_path, "Report JSON path");
  validate->add_option("--errors", validate_args.errors_path, "Per-evaluation CSV path");
  validate->add_option("--gate", validate_args.gate, "Fail when MAPE exceeds this percent");

  EcodriveArgs eco_args;
  auto* eco = app.add_subcommand("ecodrive", "Trajectory optimization");
  eco->add_option("--model", eco_args.model_path, "Surrogate model file")->required();
  eco->add_option("--config", eco_args.config_path, "Problem config file");
  eco->add_option("--set", eco_args.overrides, "Override config key=value (repeatable)");
  eco->add_option("--out", eco_args.out_dir, "Output directory")->required();
  eco->add_flag("--receding", eco_args.receding, "Run the receding-horizon loop");
  eco->add_option("--steps", eco_args.steps, "Receding steps (-1: horizon length)");
  eco->add_option("--sweep", eco_args.sweep, "Sweep dimension: grade, temp_f, humidity");
  eco->add_option("--values", eco_args.values, "Comma-separated sweep values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }

  if (extract->parsed()) return cmd_extract(extract_args);
  if (stats->parsed()) return cmd_stats(stats_args);
  if (gen->parsed()) return cmd_gen_cycles(gen_args);
  if (train->parsed()) return cmd_train(train_args);
  if (predict->parsed()) return cmd_predict(predict_args);
  if (validate->parsed()) return cmd_validate(validate_args);
  if (eco->parsed()) return cmd_ecodrive(eco_args);
  return 2;
}
