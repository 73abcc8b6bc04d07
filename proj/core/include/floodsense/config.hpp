#pragma once

// Flat key/value run configuration. Values come from built-in defaults, an
// optional JSON object file, then "key=value" overrides, in that order.

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace floodsense {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Config {
 public:
  /// Every known key with its default value.
  Config();

  /// Merges a flat JSON object. Unknown keys and nested objects are errors.
  void merge_json(std::string_view json_text, std::string_view origin = "config");
  void merge_file(const std::filesystem::path& path);

  /// "key=value"; the value is read as JSON when it parses as JSON and as a
  /// plain string otherwise.
  void set_override(std::string_view assignment);

  bool has(std::string_view key) const;
  bool is_null(std::string_view key) const;

  double get_double(std::string_view key) const;
  std::int64_t get_int(std::string_view key) const;
  std::uint64_t get_uint(std::string_view key) const;
  bool get_bool(std::string_view key) const;
  std::string get_string(std::string_view key) const;
  std::optional<double> get_optional_double(std::string_view key) const;
  /// Arrays, or a single scalar / comma-separated string.
  std::vector<std::string> get_string_list(std::string_view key) const;
  std::vector<double> get_double_list(std::string_view key) const;

  /// Pretty JSON, keys sorted; what the run actually used.
  std::string effective_json() const;

  std::vector<std::string> keys() const;

 private:
  void set(std::string_view key, std::string json_value, std::string_view origin);
  const std::string& raw(std::string_view key) const;

  std::map<std::string, std::string, std::less<>> values_;  // serialized JSON scalars/arrays
};

}  // namespace floodsense
