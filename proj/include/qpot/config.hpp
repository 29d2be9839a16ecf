#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qpot {

/// Flat key=value settings with dotted keys. A "[section]" line prefixes the keys that
/// follow it with "section.". Lines starting with '#' or ';' are comments.
class ConfigMap {
 public:
  /// Throws ConfigError (with the line number) on malformed lines or repeated keys.
  static ConfigMap parse(std::string_view text);
  /// Reads and parses a file; throws ConfigError if it cannot be read.
  static ConfigMap load(const std::string& path);

  /// Text that parse() maps back to an equal ConfigMap: top-level keys first, then
  /// one section per leading key component.
  std::string to_text() const;

  void set(const std::string& key, std::string value);
  bool contains(const std::string& key) const { return values_.count(key) != 0; }
  std::optional<std::string> find(const std::string& key) const;
  const std::map<std::string, std::string>& entries() const { return values_; }

  /// Typed accessors return the fallback when the key is absent and throw ConfigError
  /// when the value does not parse.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  /// Comma-separated numbers.
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;

  friend bool operator==(const ConfigMap&, const ConfigMap&) = default;

 private:
  std::map<std::string, std::string> values_;
};

/// "1,2,3" -> {1, 2, 3}; throws ConfigError naming `what` on bad input.
std::vector<double> parse_number_list(std::string_view text, const std::string& what);
/// Shortest round-trip text of each number, comma-separated.
std::string format_number_list(const std::vector<double>& values);

}  // namespace qpot
