#include "nmoves/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "nmoves/util.hpp"
#include "nmoves/version.hpp"

namespace nmoves {

namespace {

// strict ordering over the full (v, a, X) key
int key_compare(const EmissionRecord& l, const EmissionRecord& r) {
  auto cmp = [](double a, double b) { return a < b ? -1 : a > b ? 1 : 0; };
  if (int c = cmp(l.v, r.v)) return c;
  if (int c = cmp(l.a, r.a)) return c;
  if (int c = cmp(l.x.grade, r.x.grade)) return c;
  if (int c = cmp(l.x.temp_f, r.x.temp_f)) return c;
  if (int c = cmp(l.x.humidity, r.x.humidity)) return c;
  if (int c = cmp(static_cast<double>(l.x.vtype), static_cast<double>(r.x.vtype))) return c;
  if (int c = cmp(static_cast<double>(l.x.fuel), static_cast<double>(r.x.fuel))) return c;
  return cmp(l.x.age_year, r.x.age_year);
}

struct SourceRef {
  int file;
  long long line;  // 1-based CSV line, or record ordinal for binary
};

void check_duplicates(const std::vector<EmissionRecord>& records,
                      const std::vector<SourceRef>& refs,
                      const std::vector<std::string>& paths) {
  std::vector<size_t> order(records.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    int c = key_compare(records[a], records[b]);
    if (c != 0) return c < 0;
    return a < b;
  });
  for (size_t i = 0; i + 1 < order.size(); ++i) {
    if (key_compare(records[order[i]], records[order[i + 1]]) == 0) {
      const auto& r1 = refs[order[i]];
      const auto& r2 = refs[order[i + 1]];
      throw std::runtime_error(
          "duplicate record key: " + paths[static_cast<size_t>(r1.file)] + ":" +
          std::to_string(r1.line) + " and " + paths[static_cast<size_t>(r2.file)] + ":" +
          std::to_string(r2.line));
    }
  }
}

std::string csv_row(const EmissionRecord& r) {
  std::string out;
  out += format_double(r.v);
  out += ',';
  out += format_double(r.a);
  out += ',';
  out += format_double(r.x.grade);
  out += ',';
  out += format_double(r.x.temp_f);
  out += ',';
  out += format_double(r.x.humidity);
  out += ',';
  out += to_token(r.x.vtype);
  out += ',';
  out += to_token(r.x.fuel);
  out += ',';
  out += format_double(r.x.age_year);
  out += ',';
  out += format_double(r.e);
  out += '\n';
  return out;
}

EmissionRecord parse_csv_row(const std::string& line, const std::string& path, long long lineno) {
  auto f = split(line, ',');
  if (f.size() != 9) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) +
                             ": expected 9 fields, found " + std::to_string(f.size()));
  }
  try {
    EmissionRecord r;
    r.v = parse_double(trim(f[0]));
    r.a = parse_double(trim(f[1]));
    r.x.grade = parse_double(trim(f[2]));
    r.x.temp_f = parse_double(trim(f[3]));
    r.x.humidity = parse_double(trim(f[4]));
    r.x.vtype = vehicle_type_from_token(trim(f[5]));
    r.x.fuel = fuel_type_from_token(trim(f[6]));
    r.x.age_year = parse_double(trim(f[7]));
    r.e = parse_double(trim(f[8]));
    return r;
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
  }
}

void load_csv(const std::string& path, DatasetPartition* out, std::vector<SourceRef>* refs,
              int file_index) {
  const std::string text = read_file(path);
  std::istringstream in(text);
  std::string line;
  long long lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      // manifest comment; provenance lines are informational
      if (t.rfind("# subset:", 0) == 0) out->provenance.subset = trim(t.substr(9));
      if (t.rfind("# version:", 0) == 0) out->provenance.version = trim(t.substr(10));
      continue;
    }
    if (!saw_header) {
      if (t != kDatasetCsvHeader) {
        throw std::runtime_error(path + ":" + std::to_string(lineno) + ": unexpected header");
      }
      saw_header = true;
      continue;
    }
    out->records.push_back(parse_csv_row(t, path, lineno));
    refs->push_back({file_index, lineno});
  }
  if (!saw_header) throw std::runtime_error(path + ": missing header row");
}

void load_binary(const std::string& path, DatasetPartition* out, std::vector<SourceRef>* refs,
                 int file_index) {
  const std::string blob = read_file(path);
  ByteReader r(blob);
  char magic[4];
  r.bytes(magic, 4);
  if (std::string_view(magic, 4) != std::string_view(kDatasetMagic, 4)) {
    throw std::runtime_error(path + ": not a dataset file (bad magic)");
  }
  const uint8_t version = r.u8();
  if (version != kDatasetFormatVersion) {
    throw std::runtime_error(path + ": unsupported dataset format version " +
                             std::to_string(version));
  }
  auto read_string = [&r]() {
    const uint32_t len = r.u32();
    std::string s(len, '\0');
    r.bytes(s.data(), len);
    return s;
  };
  out->provenance.subset = read_string();
  out->provenance.version = read_string();
  const uint64_t count = r.u64();
  for (uint64_t i = 0; i < count; ++i) {
    EmissionRecord rec;
    rec.v = r.f64();
    rec.a = r.f64();
    rec.x.grade = r.f64();
    rec.x.temp_f = r.f64();
    rec.x.humidity = r.f64();
    const uint8_t vt = r.u8();
    const uint8_t fu = r.u8();
    if (vt >= kVehicleTypeCount || fu >= kFuelTypeCount) {
      throw std::runtime_error(path + ": record " + std::to_string(i) +
                               ": invalid vehicle/fuel code");
    }
    rec.x.vtype = static_cast<VehicleType>(vt);
    rec.x.fuel = static_cast<FuelType>(fu);
    rec.x.age_year = r.f64();
    rec.e = r.f64();
    out->records.push_back(rec);
    refs->push_back({file_index, static_cast<long long>(i)});
  }
  if (!r.done()) throw std::runtime_error(path + ": trailing bytes after records");
}

bool has_suffix(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

}  // namespace

size_t write_partition_csv(const DatasetPartition& p, const std::string& path) {
  std::string out;
  out.reserve(64 * p.records.size() + 256);
  out += "# subset: " + p.provenance.subset + "\n";
  out += "# version: " + p.provenance.version + "\n";
  out += kDatasetCsvHeader;
  out += '\n';
  for (const auto& r : p.records) out += csv_row(r);
  return write_file_atomic(path, out);
}

size_t write_partition_binary(const DatasetPartition& p, const std::string& path) {
  std::string out;
  out.reserve(58 * p.records.size() + 64);
  out.append(kDatasetMagic, 4);
  put_u8(out, kDatasetFormatVersion);
  put_u32(out, static_cast<uint32_t>(p.provenance.subset.size()));
  out += p.provenance.subset;
  put_u32(out, static_cast<uint32_t>(p.provenance.version.size()));
  out += p.provenance.version;
  put_u64(out, p.records.size());
  for (const auto& r : p.records) {
    put_f64(out, r.v);
    put_f64(out, r.a);
    put_f64(out, r.x.grade);
    put_f64(out, r.x.temp_f);
    put_f64(out, r.x.humidity);
    put_u8(out, static_cast<uint8_t>(r.x.vtype));
    put_u8(out, static_cast<uint8_t>(r.x.fuel));
    put_f64(out, r.x.age_year);
    put_f64(out, r.e);
  }
  return write_file_atomic(path, out);
}

size_t write_partition(const DatasetPartition& p, const std::string& path) {
  if (has_suffix(path, ".nmre")) return write_partition_binary(p, path);
  if (has_suffix(path, ".csv")) return write_partition_csv(p, path);
  throw std::invalid_argument("unknown dataset extension (want .csv or .nmre): " + path);
}

LoadResult load_partitions(const std::vector<std::string>& paths, const LoadOptions& opt) {
  if (paths.empty()) throw std::invalid_argument("no dataset files given");
  LoadResult res;
  std::vector<SourceRef> refs;
  for (size_t i = 0; i < paths.size(); ++i) {
    if (has_suffix(paths[i], ".nmre")) {
      load_binary(paths[i], &res.partition, &refs, static_cast<int>(i));
    } else {
      load_csv(paths[i], &res.partition, &refs, static_cast<int>(i));
    }
  }
  check_duplicates(res.partition.records, refs, paths);
  const long long present = static_cast<long long>(res.partition.records.size());
  if (opt.expected_records >= 0 && present != opt.expected_records) {
    if (present > opt.expected_records) {
      throw std::runtime_error("dataset holds " + std::to_string(present) +
                               " records, more than the declared subset's " +
                               std::to_string(opt.expected_records));
    }
    if (!opt.tolerate_gaps) {
      throw std::runtime_error("dataset has gaps: " + std::to_string(present) + " of " +
                               std::to_string(opt.expected_records) +
                               " declared records present (pass tolerate_gaps to accept)");
    }
    res.gap_count = opt.expected_records - present;
  }
  if (paths.size() == 1) {
    // keep single-file provenance; merged loads get a synthesized descriptor
  } else {
    res.partition.provenance.subset = "merge of " + std::to_string(paths.size()) + " partitions";
    res.partition.provenance.version = kVersion;
  }
  return res;
}

const FactorCurve& SummaryStats::curve(const std::string& factor) const {
  for (const auto& c : curves) {
    if (c.factor == factor) return c;
  }
  throw std::out_of_range("no summary curve for factor: " + factor);
}

SummaryStats summarize(const DatasetPartition& p) {
  if (p.records.empty()) throw std::invalid_argument("cannot summarize an empty partition");
  SummaryStats s;
  s.n = static_cast<long long>(p.records.size());

  // whole-partition emission stats, summed in sorted order for
  // permutation invariance
  {
    std::vector<double> es;
    es.reserve(p.records.size());
    for (const auto& r : p.records) es.push_back(r.e);
    std::sort(es.begin(), es.end());
    s.e_min = es.front();
    s.e_max = es.back();
    double sum = 0;
    for (double e : es) sum += e;
    s.e_mean = sum / static_cast<double>(es.size());
  }

  const char* names[8] = {"speed",    "accel", "grade", "temp_f",
                          "humidity", "vtype", "fuel",  "age_year"};
  std::vector<std::pair<double, double>> buf;
  buf.reserve(p.records.size());
  for (int f = 0; f < 8; ++f) {
    buf.clear();
    for (const auto& r : p.records) {
      double key = 0;
      switch (f) {
        case 0: key = r.v; break;
        case 1: key = r.a; break;
        case 2: key = r.x.grade; break;
        case 3: key = r.x.temp_f; break;
        case 4: key = r.x.humidity; break;
        case 5: key = static_cast<double>(r.x.vtype); break;
        case 6: key = static_cast<double>(r.x.fuel); break;
        case 7: key = r.x.age_year; break;
      }
      buf.emplace_back(key, r.e);
    }
    std::sort(buf.begin(), buf.end());
    FactorCurve curve;
    curve.factor = names[f];
    size_t i = 0;
    double lo_mean = 0, hi_mean = 0;
    bool first = true;
    while (i < buf.size()) {
      size_t j = i;
      double sum = 0;
      while (j < buf.size() && buf[j].first == buf[i].first) {
        sum += buf[j].second;
        ++j;
      }
      const double mean = sum / static_cast<double>(j - i);
      curve.points.emplace_back(buf[i].first, mean);
      if (first || mean < lo_mean) lo_mean = mean;
      if (first || mean > hi_mean) hi_mean = mean;
      first = false;
      i = j;
    }
    curve.ratio = lo_mean > 0 ? hi_mean / lo_mean : 1.0;
    s.curves.push_back(std::move(curve));
  }
  return s;
}

std::string SummaryStats::to_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["e_min"] = e_min;
  j["e_max"] = e_max;
  j["e_mean"] = e_mean;
  for (const auto& c : curves) {
    nlohmann::json jc;
    jc["ratio"] = c.ratio;
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& [value, mean] : c.points) pts.push_back({value, mean});
    jc["points"] = pts;
    j["curves"][c.factor] = jc;
  }
  return j.dump(2) + "\n";
}

std::pair<DatasetPartition, DatasetPartition> split_partition(const DatasetPartition& p,
                                                              double train_fraction,
                                                              double test_fraction,
                                                              uint64_t seed) {
  if (std::abs(train_fraction + test_fraction - 1.0) > 1e-9 || train_fraction < 0 ||
      test_fraction < 0) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  std::vector<size_t> order(p.records.size());
  std::iota(order.begin(), order.end(), size_t{0});
  Rng rng(mix_seed(seed, 0x5917ull));
  rng.shuffle(order);
  const auto n_train = static_cast<size_t>(std::llround(train_fraction *
                                                        static_cast<double>(order.size())));
  DatasetPartition train, test;
  train.provenance = p.provenance;
  train.provenance.subset += ";split=train";
  test.provenance = p.provenance;
  test.provenance.subset += ";split=test";
  train.records.reserve(n_train);
  test.records.reserve(order.size() - n_train);
  for (size_t i = 0; i < order.size(); ++i) {
    (i < n_train ? train : test).records.push_back(p.records[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace nmoves
