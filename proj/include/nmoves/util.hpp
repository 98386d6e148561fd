#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace nmoves {

// Deterministic PRNG (xoshiro256**) with self-contained distributions.
// The standard <random> distributions are implementation-defined, which would
// break byte-identical outputs across toolchains; everything seeded goes
// through this class instead.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  // uniform in [0, 1)
  double uniform();
  // uniform in [lo, hi)
  double uniform(double lo, double hi);
  // standard normal via Box-Muller, scaled
  double normal(double mean, double stddev);
  // uniform index in [0, n)
  size_t index(size_t n);

  // Fisher-Yates
  template <typename T>
  void shuffle(std::vector<T>& v) {
    if (v.size() < 2) return;
    for (size_t i = v.size() - 1; i > 0; --i) {
      size_t j = index(i + 1);
      std::swap(v[i], v[j]);
    }
  }

 private:
  uint64_t state_[4];
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// splitmix64 step; also used to derive independent stream seeds
uint64_t mix_seed(uint64_t a, uint64_t b);

// FNV-1a over a byte string
uint64_t fnv1a(std::string_view data);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double v);
// Fixed significant-digit formatting (still round-trip exact for digits >= 17).
std::string format_double_sig(double v, int digits);
// Parses a double; accepts "inf"/"-inf"/"nan". Throws std::invalid_argument.
double parse_double(std::string_view s);

std::vector<std::string> split(std::string_view s, char sep);
std::string trim(std::string_view s);

// Little-endian byte packing used by the binary file formats.
void put_u8(std::string& out, uint8_t v);
void put_u16(std::string& out, uint16_t v);
void put_u32(std::string& out, uint32_t v);
void put_u64(std::string& out, uint64_t v);
void put_f64(std::string& out, double v);

class ByteReader {
 public:
  explicit ByteReader(std::string_view data) : data_(data) {}
  uint8_t u8();
  uint16_t u16();
  uint32_t u32();
  uint64_t u64();
  double f64();
  void bytes(char* dst, size_t n);
  size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }

 private:
  std::string_view data_;
  size_t pos_ = 0;
};

std::string read_file(const std::string& path);
// Writes via a temp file + rename so partial files never land at `path`.
// Returns the byte count written.
size_t write_file_atomic(const std::string& path, std::string_view content);

}  // namespace nmoves
