// End-to-end checks driving the installed binary through std::system.
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "doctest.h"
#include "json.hpp"
#include "nmoves/cycles.hpp"
#include "nmoves/extraction.hpp"
#include "nmoves/surrogate.hpp"
#include "nmoves/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace nmoves;

namespace {

const std::string& cli_path() {
  static std::string path = [] {
    if (const char* env = std::getenv("CLI_PATH")) return std::string(env);
    for (const char* guess : {"build/tools/nmoves", "tools/nmoves", "./nmoves"}) {
      if (fs::exists(guess)) return std::string(guess);
    }
    return std::string();
  }();
  return path;
}

struct CmdResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

CmdResult run_cli(const std::string& args) {
  REQUIRE_FALSE(cli_path().empty());
  static int counter = 0;
  auto dir = fs::temp_directory_path() / "nmoves_cli_io";
  fs::create_directories(dir);
  auto out_f = dir / ("out" + std::to_string(counter) + ".txt");
  auto err_f = dir / ("err" + std::to_string(counter) + ".txt");
  ++counter;
  std::string cmd = cli_path() + " " + args + " >" + out_f.string() + " 2>" + err_f.string();
  int raw = std::system(cmd.c_str());
  CmdResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = slurp(out_f);
  r.err = slurp(err_f);
  return r;
}

// Shared workspace: one extracted scenario and a quickly trained model,
// built on first use.
struct Workspace {
  fs::path root;
  fs::path data_dir;
  fs::path model;

  Workspace() {
    root = fs::temp_directory_path() / "nmoves_cli_ws";
    fs::remove_all(root);
    fs::create_directories(root);
    data_dir = root / "data";
    auto r = run_cli("extract --scenarios 1..2 --out " + data_dir.string());
    REQUIRE(r.code == 0);
    model = root / "model.nmnn";
    r = run_cli("train --data " + data_dir.string() + " --out " + model.string() +
                " --epochs 2 --seed 7");
    REQUIRE(r.code == 0);
  }
};

const Workspace& ws() {
  static Workspace w;
  return w;
}

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("bad invocations are usage errors") {
  CHECK(run_cli("").code == 2);
  CHECK(run_cli("--help").code == 0);
  CHECK(run_cli("extract --out /tmp/x --scenarios nonsense").code == 2);
  CHECK(run_cli("extract --out /tmp/x --scenarios 5..2").code == 2);
  CHECK(run_cli("extract --out /tmp/x --scenarios 0..99999999").code == 2);
  CHECK(run_cli("frobnicate").code == 2);
}

TEST_CASE("extract writes one scenario and skips on rerun") {
  auto dir = fs::temp_directory_path() / "nmoves_cli_extract";
  fs::remove_all(dir);
  auto r = run_cli("extract --scenarios 0..1 --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("4791 records") != std::string::npos);
  CHECK(fs::exists(dir / scenario_file_name(0, false)));
  CHECK(fs::exists(dir / "report.json"));
  CHECK(fs::exists(dir / "manifest.json"));

  auto report = json::parse(slurp(dir / "report.json"));
  CHECK(report["records_written"] == 4791);
  CHECK(report["manifest"]["subcommand"] == "extract");

  r = run_cli("extract --scenarios 0..1 --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("skipped 1") != std::string::npos);

  r = run_cli("extract --scenarios 3..3 --out " + dir.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("0 records") != std::string::npos);
}

TEST_CASE("stats reports the record count") {
  auto r = run_cli("stats --data " + ws().data_dir.string());
  CHECK(r.code == 0);
  auto doc = json::parse(r.out);
  CHECK(doc["n"] == 4791);
  CHECK(doc.contains("curves"));
  CHECK(run_cli("stats --data /nonexistent_dir_xyz").code == 1);
}

TEST_CASE("gen-cycles writes loadable files and a manifest") {
  auto dir = fs::temp_directory_path() / "nmoves_cli_cycles";
  fs::remove_all(dir);
  auto r = run_cli("gen-cycles --out " + dir.string() + " --per-strategy 2 --seed 5");
  CHECK(r.code == 0);
  int csvs = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() == ".csv") ++csvs;
  }
  CHECK(csvs == 10);
  auto cycle = load_cycle_csv((dir / "random_walk_0.csv").string());
  CHECK(cycle.speeds.size() == 121);

  auto manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["subcommand"] == "gen-cycles");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["version"] == "0.1.0");
  CHECK(manifest["outputs"].size() == 10);
  CHECK_FALSE(manifest["timestamp"].get<std::string>().empty());

  // same seed, same bytes
  auto dir2 = fs::temp_directory_path() / "nmoves_cli_cycles2";
  fs::remove_all(dir2);
  CHECK(run_cli("gen-cycles --out " + dir2.string() + " --per-strategy 2 --seed 5").code == 0);
  CHECK(slurp(dir / "random_walk_1.csv") == slurp(dir2 / "random_walk_1.csv"));
  CHECK(slurp(dir / "eco_glide_0.csv") == slurp(dir2 / "eco_glide_0.csv"));
}

TEST_CASE("train writes a model plus epoch log") {
  auto& w = ws();
  auto model = w.root / "m_log.nmnn";
  auto log = w.root / "m_log.csv";
  auto r = run_cli("train --data " + w.data_dir.string() + " --out " + model.string() +
                   " --epochs 1 --log " + log.string());
  CHECK(r.code == 0);
  auto family = SurrogateFamily::load(model.string());
  CHECK(family.entry_count() == 1);
  CHECK(family.has_entry(VehicleType::PassengerCar, FuelType::Gasoline));

  int data_rows = 0;
  std::ifstream in(log);
  std::string line;
  bool header_seen = false;
  while (std::getline(in, line)) {
    if (line.rfind("#", 0) == 0) continue;
    if (!header_seen) {
      CHECK(line == "vtype,fuel,epoch,train_mape");
      header_seen = true;
      continue;
    }
    ++data_rows;
  }
  CHECK(data_rows == 1);
  CHECK(fs::exists(model.string() + ".manifest.json"));
}

TEST_CASE("repeated training is byte-identical") {
  auto& w = ws();
  auto m1 = w.root / "det1.nmnn";
  auto m2 = w.root / "det2.nmnn";
  std::string base = "train --data " + w.data_dir.string() + " --epochs 3 --seed 7 --out ";
  REQUIRE(run_cli(base + m1.string()).code == 0);
  REQUIRE(run_cli(base + m2.string()).code == 0);
  auto b1 = slurp(m1), b2 = slurp(m2);
  CHECK(b1.size() > 0);
  CHECK(b1 == b2);
}

TEST_CASE("training defaults to 300 epochs") {
  auto& w = ws();
  auto model = w.root / "m300.nmnn";
  auto log = w.root / "m300.csv";
  auto r = run_cli("train --data " + w.data_dir.string() + " --out " + model.string() +
                   " --log " + log.string());
  CHECK(r.code == 0);
  int data_rows = 0;
  std::ifstream in(log);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.find(',') != std::string::npos && line[0] != '#' &&
        line != "vtype,fuel,epoch,train_mape") {
      ++data_rows;
    }
  }
  CHECK(data_rows == 300);
}

TEST_CASE("training an absent entry fails at runtime") {
  auto& w = ws();
  auto r = run_cli("train --data " + w.data_dir.string() + " --out /tmp/never.nmnn" +
                   " --epochs 1 --vtype transit_bus --fuel diesel");
  CHECK(r.code == 1);
  CHECK_FALSE(r.err.empty());
  CHECK(run_cli("train --data x --out y --vtype transit_bus").code == 2);
}

TEST_CASE("predict matches an in-process prediction") {
  auto& w = ws();
  auto r = run_cli("predict --model " + w.model.string() + " --v 10 --a 0.5");
  CHECK(r.code == 0);
  auto family = SurrogateFamily::load(w.model.string());
  CHECK(trim(r.out) == format_double(family.predict(10.0, 0.5, FactorVector{})));
  CHECK(run_cli("predict --model /nonexistent.nmnn --v 1 --a 0").code == 1);
}

TEST_CASE("oracle self-check scores zero error") {
  auto out = fs::temp_directory_path() / "nmoves_cli_self.json";
  fs::remove(out);
  auto r = run_cli("validate --oracle --scenarios 2 --cycles 5 --out " + out.string());
  CHECK(r.code == 0);
  CHECK(r.out.find("overall") != std::string::npos);
  CHECK(r.out.find("0.000") != std::string::npos);
  auto doc = json::parse(slurp(out));
  CHECK(doc["overall"]["n"] == 10);
  CHECK(doc["overall"]["mape"] == 0.0);
  CHECK(doc["manifest"]["subcommand"] == "validate");
  // all five strategies appear even in a 5-cycle sample
  CHECK(doc["by_strategy"].size() == 5);
}

TEST_CASE("validate gate controls the exit code") {
  auto& w = ws();
  std::string base = "validate --model " + w.model.string() + " --scenarios 2 --cycles 5";
  CHECK(run_cli(base).code == 0);  // no gate: reporting only
  CHECK(run_cli(base + " --gate 1e9").code == 0);
  auto r = run_cli(base + " --gate 0.0001");  // barely trained model: way over
  CHECK(r.code == 1);
  CHECK(r.err.find("gate failed") != std::string::npos);
  // equality passes: the self-check sits exactly at zero
  CHECK(run_cli("validate --oracle --scenarios 1 --cycles 5 --gate 0").code == 0);
}

TEST_CASE("validate requires exactly one candidate") {
  CHECK(run_cli("validate --scenarios 1 --cycles 5").code == 2);
  CHECK(run_cli("validate --oracle --model x --scenarios 1 --cycles 5").code == 2);
  CHECK(run_cli("validate --model /nonexistent.nmnn --scenarios 1 --cycles 5").code == 1);
}

TEST_CASE("ecodrive writes trajectory and manifest") {
  auto& w = ws();
  auto dir = w.root / "eco";
  auto r = run_cli("ecodrive --model " + w.model.string() + " --out " + dir.string() +
                   " --set horizon=8 --set q3=50 --set q4=120");
  CHECK(r.code == 0);
  auto body = slurp(dir / "trajectory.csv");
  CHECK(body.rfind("t_s,x_m,v_mps,a_mps2,e_g", 0) == 0);
  CHECK(std::count(body.begin(), body.end(), '\n') == 10);  // header + 9 state rows
  auto manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest["subcommand"] == "ecodrive");

  // deterministic rerun: same trajectory bytes
  auto dir2 = w.root / "eco_rerun";
  r = run_cli("ecodrive --model " + w.model.string() + " --out " + dir2.string() +
              " --set horizon=8 --set q3=50 --set q4=120");
  CHECK(r.code == 0);
  CHECK(slurp(dir2 / "trajectory.csv") == body);
}

TEST_CASE("ecodrive sweep emits one file per value") {
  auto& w = ws();
  auto dir = w.root / "eco_sweep";
  auto r = run_cli("ecodrive --model " + w.model.string() + " --out " + dir.string() +
                   " --set horizon=10 --set q3=60 --sweep grade --values -5,0,5");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "sweep_grade_-5.csv"));
  CHECK(fs::exists(dir / "sweep_grade_0.csv"));
  CHECK(fs::exists(dir / "sweep_grade_5.csv"));
}

TEST_CASE("ecodrive surfaces infeasibility as exit 1") {
  auto& w = ws();
  auto r = run_cli("ecodrive --model " + w.model.string() + " --out " +
                   (w.root / "eco_bad").string() + " --set q3=1000000");
  CHECK(r.code == 1);
  CHECK(r.err.find("terminal window") != std::string::npos);
}

TEST_CASE("ecodrive flag misuse is a usage error") {
  auto& w = ws();
  std::string base = "ecodrive --model " + w.model.string() + " --out /tmp/eco_usage ";
  CHECK(run_cli(base + "--set novalue").code == 2);
  CHECK(run_cli(base + "--sweep grade").code == 2);
  CHECK(run_cli(base + "--values 1,2").code == 2);
}

TEST_SUITE_END();
