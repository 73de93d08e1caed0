#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "via/errors.hpp"

namespace via {

/// INI-style key-value configuration: `[section]` headers, `key = value`
/// lines, `#` comments. Reads are consuming so that leftover keys can be
/// rejected as unknown after an experiment has pulled everything it needs.
class Config {
 public:
  static Config from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return from_string(buffer.str(), path.string());
  }

  static Config from_string(const std::string& text, const std::string& origin = "<config>") {
    Config cfg;
    cfg.origin_ = origin;
    std::istringstream in(text);
    std::string line;
    std::string section;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const std::string trimmed = trim(line);
      if (trimmed.empty()) continue;
      if (trimmed.front() == '[') {
        if (trimmed.back() != ']' || trimmed.size() < 3) {
          throw ConfigError(origin + ":" + std::to_string(line_no) + ": malformed section");
        }
        section = trim(trimmed.substr(1, trimmed.size() - 2));
        continue;
      }
      const auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": expected key = value");
      }
      const std::string key = trim(trimmed.substr(0, eq));
      const std::string value = trim(trimmed.substr(eq + 1));
      if (key.empty()) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": empty key");
      }
      const std::string full = section.empty() ? key : section + "." + key;
      if (!cfg.values_.emplace(full, value).second) {
        throw ConfigError(origin + ":" + std::to_string(line_no) + ": duplicate key " + full);
      }
    }
    return cfg;
  }

  bool has(const std::string& key) const { return values_.count(key) > 0; }

  std::string get_string(const std::string& key) {
    const auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError(origin_ + ": missing key " + key);
    consumed_.insert(key);
    return it->second;
  }

  std::string get_string(const std::string& key, const std::string& fallback) {
    return has(key) ? get_string(key) : fallback;
  }

  double get_double(const std::string& key) { return parse_double(key, get_string(key)); }

  double get_double(const std::string& key, double fallback) {
    return has(key) ? get_double(key) : fallback;
  }

  int get_int(const std::string& key) {
    const double v = get_double(key);
    const int i = static_cast<int>(v);
    if (static_cast<double>(i) != v) {
      throw ConfigError(origin_ + ": key " + key + " must be an integer");
    }
    return i;
  }

  int get_int(const std::string& key, int fallback) {
    return has(key) ? get_int(key) : fallback;
  }

  std::uint64_t get_seed(const std::string& key, std::uint64_t fallback) {
    if (!has(key)) return fallback;
    const std::string raw = get_string(key);
    try {
      return std::stoull(raw);
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key " + key + " is not a valid seed: " + raw);
    }
  }

  bool get_bool(const std::string& key, bool fallback) {
    if (!has(key)) return fallback;
    std::string raw = get_string(key);
    std::transform(raw.begin(), raw.end(), raw.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    if (raw == "true" || raw == "1" || raw == "yes") return true;
    if (raw == "false" || raw == "0" || raw == "no") return false;
    throw ConfigError(origin_ + ": key " + key + " is not a boolean: " + raw);
  }

  std::vector<std::string> get_string_list(const std::string& key) {
    std::vector<std::string> items;
    std::string raw = get_string(key);
    std::istringstream in(raw);
    std::string item;
    while (std::getline(in, item, ',')) {
      const std::string t = trim(item);
      if (!t.empty()) items.push_back(t);
    }
    return items;
  }

  std::vector<double> get_double_list(const std::string& key) {
    std::vector<double> values;
    for (const auto& item : get_string_list(key)) {
      values.push_back(parse_double(key, item));
    }
    return values;
  }

  /// Throws unless every key present in the file has been read.
  void require_all_consumed() const {
    std::string leftover;
    for (const auto& [key, value] : values_) {
      if (!consumed_.count(key)) {
        leftover += (leftover.empty() ? "" : ", ") + key;
      }
    }
    if (!leftover.empty()) {
      throw ConfigError(origin_ + ": unknown keys: " + leftover);
    }
  }

  const std::string& origin() const { return origin_; }

 private:
  static std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) return "";
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
  }

  double parse_double(const std::string& key, const std::string& raw) const {
    try {
      size_t consumed = 0;
      const double v = std::stod(raw, &consumed);
      if (consumed != raw.size()) throw std::invalid_argument(raw);
      return v;
    } catch (const std::exception&) {
      throw ConfigError(origin_ + ": key " + key + " is not a number: " + raw);
    }
  }

  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
  std::string origin_;
};

}  // namespace via
