#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace codql {

/// Flat dotted-key view of a TOML-subset config file.
///
/// Supported syntax: `[table]` and `[table.sub]` headers, `key = value`
/// lines, `#` comments. Values are integers, floats, booleans, double-quoted
/// strings, or single-line arrays of integers. Overrides (`a.b=c`) accept
/// the same value syntax and also bare words as strings.
///
/// Typed getters throw ConfigError naming the key on type mismatch.
/// `require_all_used()` rejects keys no getter asked for, so typos in a
/// config file are reported instead of silently ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::string_view text, std::string_view source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(const std::string& key, std::string raw_value);
  /// Parses `dotted.key=value` and stores it, replacing any earlier value.
  void apply_override(std::string_view assignment);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::vector<std::string> keys() const;

  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  std::vector<std::int64_t> get_int_list(const std::string& key,
                                         const std::vector<std::int64_t>& fallback) const;

  void require_all_used() const;

  /// Canonical TOML rendering, tables and keys sorted.
  std::string to_text() const;

 private:
  const std::string* lookup(const std::string& key) const;

  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

}  // namespace codql
