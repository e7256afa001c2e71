#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

namespace srpt {

/// Flat `key = value` configuration. Lines starting with `#` are comments.
/// Keys are namespaced by convention (`vehicle.m`, `nmpc.w_pos`, `delay.xi`).
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig from_file(const std::filesystem::path& path);
  static KeyValueConfig from_string(const std::string& text);

  void set(const std::string& key, double value);
  std::optional<double> get(const std::string& key) const;
  bool contains(const std::string& key) const { return values_.count(key) != 0; }

  /// Assigns `*target` when `key` is present.
  void assign(const std::string& key, double* target) const;

  const std::map<std::string, double>& values() const { return values_; }

  void write(const std::filesystem::path& path) const;

 private:
  std::map<std::string, double> values_;
};

}  // namespace srpt
