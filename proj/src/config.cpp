#include "nmoves/config.hpp"

#include <sstream>
#include <stdexcept>

#include "nmoves/util.hpp"

namespace nmoves {

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  return parse_string(read_file(path));
}

KeyValueConfig KeyValueConfig::parse_string(std::string_view text) {
  KeyValueConfig cfg;
  size_t lineno = 0;
  for (const auto& raw : split(text, '\n')) {
    ++lineno;
    std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

std::string KeyValueConfig::get(const std::string& key,
                                const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : parse_double(it->second);
}

long long KeyValueConfig::get_int(const std::string& key, long long fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return static_cast<long long>(parse_double(it->second));
}

std::string KeyValueConfig::canonical_text() const {
  std::ostringstream ss;
  for (const auto& [k, v] : values_) ss << k << '=' << v << '\n';
  return ss.str();
}

uint64_t KeyValueConfig::hash() const { return fnv1a(canonical_text()); }

}  // namespace nmoves
