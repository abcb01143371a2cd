#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "hcdn/errors.hpp"

namespace hcdn {

/// Scalar or flat-array value of the TOML subset used for run configs:
/// strings, integers, floats, booleans, and single-line arrays of scalars.
class TomlValue {
 public:
  enum class Kind { String, Integer, Float, Boolean, Array };

  TomlValue() : v_(std::string()) {}
  TomlValue(std::string s) : v_(std::move(s)) {}
  TomlValue(const char* s) : v_(std::string(s)) {}
  TomlValue(long long i) : v_(i) {}
  TomlValue(int i) : v_(static_cast<long long>(i)) {}
  TomlValue(std::uint64_t i) : v_(static_cast<long long>(i)) {}
  TomlValue(double d) : v_(d) {}
  TomlValue(bool b) : v_(b) {}
  TomlValue(std::vector<TomlValue> a) : v_(std::move(a)) {}

  Kind kind() const { return static_cast<Kind>(v_.index()); }

  const std::string& as_string() const {
    require(Kind::String, "string");
    return std::get<std::string>(v_);
  }
  long long as_int() const {
    require(Kind::Integer, "integer");
    return std::get<long long>(v_);
  }
  /// Integers widen to double so "1024" satisfies a float-typed key.
  double as_double() const {
    if (kind() == Kind::Integer) return static_cast<double>(std::get<long long>(v_));
    require(Kind::Float, "float");
    return std::get<double>(v_);
  }
  bool as_bool() const {
    require(Kind::Boolean, "boolean");
    return std::get<bool>(v_);
  }
  const std::vector<TomlValue>& as_array() const {
    require(Kind::Array, "array");
    return std::get<std::vector<TomlValue>>(v_);
  }

  bool operator==(const TomlValue&) const = default;

 private:
  void require(Kind k, const char* name) const {
    if (kind() != k)
      raise(ErrorCode::ConfigMismatch, std::string("toml: value is not a ") + name);
  }
  std::variant<std::string, long long, double, bool, std::vector<TomlValue>> v_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

/// Cuts an unquoted `#` comment; quotes are honoured so "#" survives in strings.
inline std::string_view strip_comment(std::string_view s) {
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) quoted = !quoted;
    else if (s[i] == '#' && !quoted) return s.substr(0, i);
  }
  return s;
}

[[noreturn]] inline void toml_fail(const std::string& where, int line, const std::string& msg) {
  std::string prefix = where.empty() ? "toml" : where;
  raise(ErrorCode::ParseError, prefix + ":" + std::to_string(line) + ": " + msg);
}

inline bool valid_key(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-' && c != '.')
      return false;
  return true;
}

inline std::string parse_basic_string(std::string_view s, const std::string& where, int line) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\') {
      out.push_back(s[i]);
      continue;
    }
    if (++i == s.size()) toml_fail(where, line, "dangling escape in string");
    switch (s[i]) {
      case '"': out.push_back('"'); break;
      case '\\': out.push_back('\\'); break;
      case 'n': out.push_back('\n'); break;
      case 't': out.push_back('\t'); break;
      default: toml_fail(where, line, std::string("unsupported escape \\") + s[i]);
    }
  }
  return out;
}

inline TomlValue parse_scalar(std::string_view s, const std::string& where, int line) {
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    return TomlValue(parse_basic_string(s.substr(1, s.size() - 2), where, line));
  if (s == "true") return TomlValue(true);
  if (s == "false") return TomlValue(false);

  bool integral = !s.empty();
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (i == 0 && (c == '+' || c == '-')) continue;
    if (!std::isdigit(static_cast<unsigned char>(c))) integral = false;
  }
  if (integral && !(s.size() == 1 && (s[0] == '+' || s[0] == '-'))) {
    long long v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size())
      toml_fail(where, line, "bad integer: " + std::string(s));
    return TomlValue(v);
  }

  try {
    std::size_t used = 0;
    const double d = std::stod(std::string(s), &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return TomlValue(d);
  } catch (const std::exception&) {
    toml_fail(where, line, "cannot parse value: " + std::string(s));
  }
}

inline TomlValue parse_value(std::string_view s, const std::string& where, int line) {
  if (!s.empty() && s.front() == '[') {
    if (s.back() != ']') toml_fail(where, line, "array must close on the same line");
    std::vector<TomlValue> items;
    std::string_view body = s.substr(1, s.size() - 2);
    std::size_t start = 0;
    bool quoted = false;
    for (std::size_t i = 0; i <= body.size(); ++i) {
      if (i < body.size() && body[i] == '"' && (i == 0 || body[i - 1] != '\\')) quoted = !quoted;
      if (i == body.size() || (body[i] == ',' && !quoted)) {
        const auto piece = trim(body.substr(start, i - start));
        if (!piece.empty()) items.emplace_back(parse_scalar(piece, where, line));
        else if (i < body.size()) toml_fail(where, line, "empty array element");
        start = i + 1;
      }
    }
    return TomlValue(std::move(items));
  }
  return parse_scalar(s, where, line);
}

inline std::string format_double(double d) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, r.ptr);
  if (s.find('.') == std::string::npos && s.find('e') == std::string::npos &&
      s.find("inf") == std::string::npos && s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

inline std::string format_value(const TomlValue& v) {
  switch (v.kind()) {
    case TomlValue::Kind::String: {
      std::string out = "\"";
      for (char c : v.as_string()) {
        switch (c) {
          case '"': out += "\\\""; break;
          case '\\': out += "\\\\"; break;
          case '\n': out += "\\n"; break;
          case '\t': out += "\\t"; break;
          default: out.push_back(c);
        }
      }
      return out + "\"";
    }
    case TomlValue::Kind::Integer: return std::to_string(v.as_int());
    case TomlValue::Kind::Float: return format_double(v.as_double());
    case TomlValue::Kind::Boolean: return v.as_bool() ? "true" : "false";
    case TomlValue::Kind::Array: {
      std::string out = "[";
      const auto& items = v.as_array();
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out += ", ";
        out += format_value(items[i]);
      }
      return out + "]";
    }
  }
  raise(ErrorCode::ConfigMismatch, "toml: unknown value kind");
}

}  // namespace detail

/// Flat document of `section.key = value` entries in insertion order.
/// Serialization groups keys under `[section]` headers in first-appearance
/// order, so save -> parse -> save is byte-stable.
class TomlDoc {
 public:
  static TomlDoc parse(std::string_view text, const std::string& where = "") {
    TomlDoc doc;
    std::string section;
    int line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
      const auto nl = text.find('\n', pos);
      std::string_view raw = text.substr(pos, nl == std::string_view::npos ? nl : nl - pos);
      pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
      ++line_no;

      const auto line = detail::trim(detail::strip_comment(raw));
      if (line.empty()) continue;

      if (line.front() == '[') {
        if (line.back() != ']') detail::toml_fail(where, line_no, "unterminated section header");
        const auto name = detail::trim(line.substr(1, line.size() - 2));
        if (!detail::valid_key(name))
          detail::toml_fail(where, line_no, "bad section name: " + std::string(name));
        section = std::string(name);
        continue;
      }

      const auto eq = line.find('=');
      if (eq == std::string_view::npos)
        detail::toml_fail(where, line_no, "expected 'key = value'");
      const auto key = detail::trim(line.substr(0, eq));
      const auto value = detail::trim(line.substr(eq + 1));
      if (!detail::valid_key(key) || key.find('.') != std::string_view::npos)
        detail::toml_fail(where, line_no, "bad key: " + std::string(key));
      if (value.empty()) detail::toml_fail(where, line_no, "missing value");

      std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
      if (doc.find(full))
        detail::toml_fail(where, line_no, "duplicate key: " + full);
      doc.items_.emplace_back(std::move(full), detail::parse_value(value, where, line_no));
    }
    return doc;
  }

  static TomlDoc parse_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::MissingFile, "config not found: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str(), path.filename().string());
  }

  const TomlValue* find(std::string_view key) const {
    for (const auto& [k, v] : items_)
      if (k == key) return &v;
    return nullptr;
  }

  bool contains(std::string_view key) const { return find(key) != nullptr; }

  const TomlValue& at(const std::string& key) const {
    if (const auto* v = find(key)) return *v;
    raise(ErrorCode::ConfigMismatch, "toml: missing key " + key);
  }

  long long get_int(const std::string& key) const { return at(key).as_int(); }
  double get_double(const std::string& key) const { return at(key).as_double(); }
  bool get_bool(const std::string& key) const { return at(key).as_bool(); }
  const std::string& get_string(const std::string& key) const { return at(key).as_string(); }

  std::vector<double> get_double_array(const std::string& key) const {
    std::vector<double> out;
    for (const auto& v : at(key).as_array()) out.push_back(v.as_double());
    return out;
  }
  std::vector<int> get_int_array(const std::string& key) const {
    std::vector<int> out;
    for (const auto& v : at(key).as_array()) out.push_back(static_cast<int>(v.as_int()));
    return out;
  }

  /// Inserts or overwrites `section.key` (a key with exactly one dot, or a
  /// bare top-level key). Insertion order is the serialization order.
  void set(const std::string& key, TomlValue value) {
    for (auto& [k, v] : items_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    items_.emplace_back(key, std::move(value));
  }

  const std::vector<std::pair<std::string, TomlValue>>& items() const { return items_; }

  std::string serialize() const {
    std::string out;
    std::string section;
    bool first = true;
    for (const auto& [key, value] : items_) {
      const auto dot = key.rfind('.');
      const std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
      const std::string leaf = dot == std::string::npos ? key : key.substr(dot + 1);
      if (sec.empty() && !section.empty())
        raise(ErrorCode::ConfigMismatch,
              "toml: top-level key " + key + " would serialize inside [" + section + "]");
      if (sec != section || first) {
        if (!first) out += "\n";
        if (!sec.empty()) out += "[" + sec + "]\n";
        section = sec;
      }
      out += leaf + " = " + detail::format_value(value) + "\n";
      first = false;
    }
    return out;
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::trunc);
    if (!out) raise(ErrorCode::IoError, "cannot write " + path.string());
    out << serialize();
    if (!out) raise(ErrorCode::IoError, "failed writing " + path.string());
  }

  bool operator==(const TomlDoc&) const = default;

 private:
  std::vector<std::pair<std::string, TomlValue>> items_;
};

}  // namespace hcdn
