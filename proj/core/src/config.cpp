#include "codql/config.hpp"

#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "codql/errors.hpp"

namespace codql {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Drops a trailing comment, ignoring '#' inside quotes.
std::string_view strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return line.substr(0, i);
  }
  return line;
}

bool valid_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
                    c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return k.front() != '.' && k.back() != '.';
}

bool parse_int(std::string_view s, std::int64_t& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::string digits;
  for (char c : s) {
    if (c != '_') digits.push_back(c);
  }
  const char* b = digits.data();
  const char* e = b + digits.size();
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e && !digits.empty();
}

bool parse_double(std::string_view s, double& out) {
  std::string text(trim(s));
  if (text.empty()) return false;
  char* end = nullptr;
  errno = 0;
  out = std::strtod(text.c_str(), &end);
  return errno == 0 && end == text.c_str() + text.size();
}

bool is_quoted(std::string_view s) { return s.size() >= 2 && s.front() == '"' && s.back() == '"'; }

std::string unquote(std::string_view s) {
  std::string out;
  for (std::size_t i = 1; i + 1 < s.size(); ++i) {
    if (s[i] == '\\' && i + 2 < s.size()) ++i;
    out.push_back(s[i]);
  }
  return out;
}

std::string quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text, std::string_view source) {
  KeyValueConfig cfg;
  std::string table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    const auto raw_line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const auto line = trim(strip_comment(raw_line));
    if (line.empty()) continue;
    const std::string where = std::string(source) + ":" + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where, "unterminated table header");
      table = std::string(trim(line.substr(1, line.size() - 2)));
      if (!valid_key(table)) throw ConfigError(where, "invalid table name '" + table + "'");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where, "expected key = value");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!valid_key(key)) throw ConfigError(where, "invalid key '" + std::string(key) + "'");
    if (value.empty()) throw ConfigError(where, "missing value");
    const std::string full = table.empty() ? std::string(key) : table + "." + std::string(key);
    if (cfg.values_.count(full)) throw ConfigError(full, "duplicate key at " + where);
    cfg.values_[full] = std::string(value);
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.string());
}

void KeyValueConfig::set(const std::string& key, std::string raw_value) {
  if (!valid_key(key)) throw ConfigError(key, "invalid key");
  values_[key] = std::move(raw_value);
}

void KeyValueConfig::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(std::string(assignment), "override must have the form key=value");
  }
  const std::string key(trim(assignment.substr(0, eq)));
  std::string value(trim(assignment.substr(eq + 1)));
  if (value.empty()) throw ConfigError(key, "empty override value");
  set(key, std::move(value));
}

std::vector<std::string> KeyValueConfig::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

const std::string* KeyValueConfig::lookup(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_.insert(key);
  return &it->second;
}

std::int64_t KeyValueConfig::get_int(const std::string& key, std::int64_t fallback) const {
  const auto* raw = lookup(key);
  if (!raw) return fallback;
  std::int64_t v = 0;
  if (!parse_int(*raw, v)) throw ConfigError(key, "expected an integer, got '" + *raw + "'");
  return v;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  const auto* raw = lookup(key);
  if (!raw) return fallback;
  double v = 0;
  if (!parse_double(*raw, v)) throw ConfigError(key, "expected a number, got '" + *raw + "'");
  return v;
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  const auto* raw = lookup(key);
  if (!raw) return fallback;
  if (*raw == "true") return true;
  if (*raw == "false") return false;
  throw ConfigError(key, "expected true or false, got '" + *raw + "'");
}

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  const auto* raw = lookup(key);
  if (!raw) return fallback;
  if (is_quoted(*raw)) return unquote(*raw);
  if (raw->find_first_of("\"[]") != std::string::npos) {
    throw ConfigError(key, "malformed string '" + *raw + "'");
  }
  return *raw;
}

std::vector<std::int64_t> KeyValueConfig::get_int_list(
    const std::string& key, const std::vector<std::int64_t>& fallback) const {
  const auto* raw = lookup(key);
  if (!raw) return fallback;
  const std::string_view s = *raw;
  if (s.size() < 2 || s.front() != '[' || s.back() != ']') {
    throw ConfigError(key, "expected an array of integers, got '" + *raw + "'");
  }
  std::vector<std::int64_t> out;
  auto body = trim(s.substr(1, s.size() - 2));
  while (!body.empty()) {
    const auto comma = body.find(',');
    const auto item = trim(body.substr(0, comma));
    std::int64_t v = 0;
    if (!parse_int(item, v)) throw ConfigError(key, "bad array element '" + std::string(item) + "'");
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    body = trim(body.substr(comma + 1));
  }
  return out;
}

void KeyValueConfig::require_all_used() const {
  for (const auto& [k, v] : values_) {
    if (!used_.count(k)) throw ConfigError(k, "unknown configuration key");
  }
}

std::string KeyValueConfig::to_text() const {
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> tables;
  for (const auto& [k, v] : values_) {
    const auto dot = k.rfind('.');
    const std::string table = dot == std::string::npos ? "" : k.substr(0, dot);
    const std::string leaf = dot == std::string::npos ? k : k.substr(dot + 1);
    std::string value = v;
    std::int64_t i = 0;
    double d = 0;
    const bool bare_word = !is_quoted(v) && v.front() != '[' && v != "true" && v != "false" &&
                           !parse_int(v, i) && !parse_double(v, d);
    if (bare_word) value = quote(v);
    tables[table].emplace_back(leaf, value);
  }
  std::ostringstream os;
  bool first = true;
  for (const auto& [table, entries] : tables) {
    if (!table.empty()) {
      if (!first) os << '\n';
      os << '[' << table << "]\n";
    }
    for (const auto& [k, v] : entries) os << k << " = " << v << '\n';
    first = false;
  }
  return os.str();
}

}  // namespace codql
