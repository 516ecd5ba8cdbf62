#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace stflow {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line-oriented experiment description: `key = value` entries grouped under
// `[section]` headers, '#' starts a comment, no nesting. Keys are flattened to
// "section.key"; a key set twice keeps the later value. Relative paths are
// resolved against the config file's own directory.
struct ExperimentConfig {
  std::string source_path;  // where it was loaded from (empty for in-memory)
  std::string dir;          // directory used to resolve relative paths
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const;
  std::string get_str(const std::string& key) const;
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get_num(const std::string& key) const;
  double get_num(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_list(const std::string& key) const;  // comma/space separated

  // Resolves the value of `key` as a path relative to `dir`.
  std::string path(const std::string& key) const;
  std::string resolve(const std::string& relative) const;
};

ExperimentConfig parse_config(const std::string& text, const std::string& dir,
                              const std::string& source = "");
ExperimentConfig load_config(const std::string& path);

}  // namespace stflow
