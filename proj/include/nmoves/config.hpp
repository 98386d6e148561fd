#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <string_view>

namespace nmoves {

// Minimal `key = value` config files: one pair per line, '#' comments,
// blank lines ignored. Values are kept as strings and converted on access.
class KeyValueConfig {
 public:
  static KeyValueConfig parse_file(const std::string& path);
  static KeyValueConfig parse_string(std::string_view text);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long long get_int(const std::string& key, long long fallback) const;
  void set(const std::string& key, const std::string& value) { values_[key] = value; }

  // Sorted `key=value` lines; basis for the manifest config hash.
  std::string canonical_text() const;
  uint64_t hash() const;
  bool empty() const { return values_.empty(); }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace nmoves
