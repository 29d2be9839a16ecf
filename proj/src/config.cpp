#include "qpot/config.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "qpot/errors.hpp"
#include "qpot/io.hpp"

namespace qpot {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

bool valid_key(std::string_view key) {
  if (key.empty() || key.front() == '.' || key.back() == '.') return false;
  for (char c : key) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
    if (!ok) return false;
  }
  return key.find("..") == std::string_view::npos;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* kind) {
  throw ConfigError("config key '" + key + "': '" + value + "' is not " + kind);
}

}  // namespace

ConfigMap ConfigMap::parse(std::string_view text) {
  ConfigMap out;
  std::string section;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const std::size_t eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == ';') continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError(where + ": unterminated section header");
      const std::string_view name = trim(line.substr(1, line.size() - 2));
      if (!name.empty() && !valid_key(name)) {
        throw ConfigError(where + ": invalid section name '" + std::string(name) + "'");
      }
      section = std::string(name);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) throw ConfigError(where + ": expected key = value");
    const std::string_view key = trim(line.substr(0, eq));
    if (!valid_key(key)) throw ConfigError(where + ": invalid key '" + std::string(key) + "'");
    const std::string full = section.empty() ? std::string(key) : section + "." + std::string(key);
    if (out.contains(full)) throw ConfigError(where + ": key '" + full + "' is set twice");
    out.values_[full] = std::string(trim(line.substr(eq + 1)));
  }
  return out;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

std::string ConfigMap::to_text() const {
  std::ostringstream out;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;
  for (const auto& [key, value] : values_) {
    const std::size_t dot = key.find('.');
    if (dot == std::string::npos) {
      out << key << " = " << value << "\n";
    } else {
      sections[key.substr(0, dot)].emplace_back(key.substr(dot + 1), value);
    }
  }
  for (const auto& [name, entries] : sections) {
    out << "\n[" << name << "]\n";
    for (const auto& [key, value] : entries) out << key << " = " << value << "\n";
  }
  return out.str();
}

void ConfigMap::set(const std::string& key, std::string value) {
  if (!valid_key(key)) throw ConfigError("invalid config key '" + key + "'");
  const std::string_view trimmed = trim(value);
  values_[key] = std::string(trimmed);
}

std::optional<std::string> ConfigMap::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

std::string ConfigMap::get_string(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double ConfigMap::get_double(const std::string& key, double fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  try {
    return parse_double(*v);
  } catch (const std::invalid_argument&) {
    bad_value(key, *v, "a number");
  }
}

long ConfigMap::get_int(const std::string& key, long fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  std::size_t used = 0;
  long value = 0;
  try {
    value = std::stol(*v, &used);
  } catch (const std::exception&) {
    bad_value(key, *v, "an integer");
  }
  if (used != v->size()) bad_value(key, *v, "an integer");
  return value;
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  if (*v == "true" || *v == "yes" || *v == "on" || *v == "1") return true;
  if (*v == "false" || *v == "no" || *v == "off" || *v == "0") return false;
  bad_value(key, *v, "a boolean");
}

std::vector<double> ConfigMap::get_doubles(const std::string& key,
                                           const std::vector<double>& fallback) const {
  const auto v = find(key);
  if (!v) return fallback;
  return parse_number_list(*v, "config key '" + key + "'");
}

std::vector<double> parse_number_list(std::string_view text, const std::string& what) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) return out;
  while (true) {
    const std::size_t comma = text.find(',');
    const std::string_view item = trim(text.substr(0, comma));
    try {
      out.push_back(parse_double(item));
    } catch (const std::invalid_argument&) {
      throw ConfigError(what + ": '" + std::string(item) + "' is not a number");
    }
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

std::string format_number_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k > 0) out += ',';
    out += format_double(values[k]);
  }
  return out;
}

}  // namespace qpot
