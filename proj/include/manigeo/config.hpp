#pragma once

// Flat key/value config files. Lines are `key = value`; a `[section]` header
// prefixes the keys that follow as "section.key"; '#' starts a comment;
// commas separate list elements. Values stay strings until asked for, so
// thresholds and runner-specific knobs can live in the file without code
// changes.

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace manigeo {

inline std::string trim(const std::string& s) {
  const char* ws = " \t\r\n";
  const size_t a = s.find_first_not_of(ws);
  if (a == std::string::npos) return "";
  const size_t b = s.find_last_not_of(ws);
  return s.substr(a, b - a + 1);
}

namespace detail {

inline double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  const double v = std::strtod(t.c_str(), &end);
  if (end != t.c_str() + t.size() || t.empty())
    throw std::invalid_argument("config key '" + key + "' is not a number: '" + text + "'");
  return v;
}

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace detail

struct Config {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) != 0; }

  const std::string& raw(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw std::out_of_range("missing config key '" + key + "'");
    return it->second;
  }

  void set(const std::string& key, const std::string& value) { values[key] = trim(value); }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    auto it = values.find(key);
    return it == values.end() ? fallback : detail::parse_double(key, it->second);
  }

  int get_int(const std::string& key, int fallback) const {
    const double v = get_double(key, static_cast<double>(fallback));
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v)
      throw std::invalid_argument("config key '" + key + "' is not an integer");
    return i;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    auto it = values.find(key);
    if (it == values.end()) return fallback;
    const std::string& v = it->second;
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw std::invalid_argument("config key '" + key + "' is not a bool: '" + v + "'");
  }

  std::vector<std::string> get_string_list(const std::string& key) const {
    std::vector<std::string> out;
    auto it = values.find(key);
    if (it == values.end()) return out;
    std::stringstream ss(it->second);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    return out;
  }

  std::vector<double> get_list(const std::string& key, const std::vector<double>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<double> out;
    for (const std::string& cell : get_string_list(key)) out.push_back(detail::parse_double(key, cell));
    return out;
  }

  std::vector<int> get_int_list(const std::string& key, const std::vector<int>& fallback) const {
    if (!has(key)) return fallback;
    std::vector<int> out;
    for (double v : get_list(key, {})) {
      const int i = static_cast<int>(v);
      if (static_cast<double>(i) != v)
        throw std::invalid_argument("config key '" + key + "' holds a non-integer");
      out.push_back(i);
    }
    return out;
  }

  // Sorted dump; the value every provenance hash is taken over. Comments and
  // ordering of the source files never affect it.
  std::string canonical() const {
    std::string out;
    for (const auto& [k, v] : values) out += k + " = " + v + "\n";
    return out;
  }

  std::string hash() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx",
                  static_cast<unsigned long long>(detail::fnv1a64(canonical())));
    return buf;
  }
};

inline Config parse_config(const std::string& text) {
  Config cfg;
  std::string section;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config line " + std::to_string(lineno) + ": unclosed section");
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty())
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": empty key");
    cfg.set(section.empty() ? key : section + "." + key, line.substr(eq + 1));
  }
  return cfg;
}

inline Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

// Overlay: every key in `over` replaces or adds to `base`.
inline Config merged(Config base, const Config& over) {
  for (const auto& [k, v] : over.values) base.values[k] = v;
  return base;
}

}  // namespace manigeo
