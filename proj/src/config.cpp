#include "stflow/config.hpp"

#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace stflow {

namespace {

std::string trim(const std::string& s) {
  size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

}  // namespace

bool ExperimentConfig::has(const std::string& key) const {
  return values.count(key) != 0;
}

std::string ExperimentConfig::get_str(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("config: missing key '" + key + "'");
  return it->second;
}

std::string ExperimentConfig::get_str(const std::string& key,
                                      const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ExperimentConfig::get_num(const std::string& key) const {
  std::string raw = get_str(key);
  try {
    size_t used = 0;
    double x = std::stod(raw, &used);
    if (trim(raw.substr(used)).empty()) return x;
  } catch (const std::exception&) {
  }
  throw ConfigError("config: key '" + key + "' is not a number: '" + raw + "'");
}

double ExperimentConfig::get_num(const std::string& key, double fallback) const {
  return has(key) ? get_num(key) : fallback;
}

int ExperimentConfig::get_int(const std::string& key, int fallback) const {
  if (!has(key)) return fallback;
  double x = get_num(key);
  int i = static_cast<int>(x);
  if (static_cast<double>(i) != x)
    throw ConfigError("config: key '" + key + "' is not an integer");
  return i;
}

bool ExperimentConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string raw = get_str(key);
  if (raw == "true" || raw == "1" || raw == "yes") return true;
  if (raw == "false" || raw == "0" || raw == "no") return false;
  throw ConfigError("config: key '" + key + "' is not a boolean: '" + raw + "'");
}

std::vector<double> ExperimentConfig::get_list(const std::string& key) const {
  std::string raw = get_str(key);
  for (char& c : raw)
    if (c == ',') c = ' ';
  std::istringstream is(raw);
  std::vector<double> out;
  double x = 0.0;
  while (is >> x) out.push_back(x);
  std::string rest;
  if (is.clear(), is >> rest)
    throw ConfigError("config: key '" + key + "' is not a number list");
  if (out.empty()) throw ConfigError("config: key '" + key + "' is empty");
  return out;
}

std::string ExperimentConfig::path(const std::string& key) const {
  return resolve(get_str(key));
}

std::string ExperimentConfig::resolve(const std::string& relative) const {
  std::filesystem::path p(relative);
  if (p.is_absolute() || dir.empty()) return p.string();
  return (std::filesystem::path(dir) / p).string();
}

ExperimentConfig parse_config(const std::string& text, const std::string& dir,
                              const std::string& source) {
  ExperimentConfig cfg;
  cfg.dir = dir;
  cfg.source_path = source;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("config: unterminated section header at line " +
                          std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("config: empty section name at line " +
                          std::to_string(lineno));
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config: expected 'key = value' at line " +
                        std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty())
      throw ConfigError("config: empty key at line " + std::to_string(lineno));
    std::string full = section.empty() ? key : section + "." + key;
    cfg.values[full] = val;
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("config: cannot open " + path);
  std::ostringstream buf;
  buf << is.rdbuf();
  std::string dir = std::filesystem::path(path).parent_path().string();
  return parse_config(buf.str(), dir, path);
}

}  // namespace stflow
