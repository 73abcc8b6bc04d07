#include "floodsense/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "floodsense/filters.hpp"
#include "floodsense/text.hpp"
#include "json_util.hpp"

namespace floodsense {
namespace {

using detail::json;

const json& defaults() {
  static const json d{
      {"seed", 42},
      {"threads", 1},
      {"timezones", {"London", "Edinburgh", "UTC"}},
      {"bot_threshold_fraction", 0.01},
      {"bot_denylist", json::array()},
      {"blocklist", default_blocklist()},
      {"nb_smoothing", 0.5},
      {"cv_folds", 6},
      {"countries", {"GB"}},
      {"r", 1.0},
      {"keep_all", false},
      {"alpha", 0.15},
      {"T", 0.1},
      {"mode", "relative"},
      {"reference_max", nullptr},
      {"grid_rows", 64},
      {"grid_cols", 64},
      {"bbox", {49.9, 55.9, -6.5, 1.8}},
      {"window_hours", 24},
      {"sweep_r", {0.0, 0.5, 1.0, 2.0}},
      {"sweep_alpha", {0.0, 0.15, 0.35, 0.4}},
      {"sweep_T", {0.075, 0.1, 0.25, 0.5}},
      {"sweep_modes", {"relative", "absolute"}},
      {"betas", {1.0, 2.0}},
      {"png_cell_px", 8},
  };
  return d;
}

bool compatible(const json& def, const json& v) {
  if (def.is_null()) return v.is_null() || v.is_number();
  if (def.is_number()) return v.is_number();
  if (def.is_boolean()) return v.is_boolean();
  if (def.is_string()) return v.is_string();
  if (def.is_array()) {
    if (v.is_string()) return true;  // comma-separated shorthand
    if (!v.is_array()) return false;
    for (const auto& e : v) {
      if (!e.is_primitive() || e.is_null()) return false;
    }
    return true;
  }
  return false;
}

}  // namespace

Config::Config() {
  for (const auto& [k, v] : defaults().items()) values_[k] = v.dump();
}

void Config::set(std::string_view key, std::string json_value, std::string_view origin) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(std::string(origin) + ": unknown key '" + std::string(key) + "'");
  const auto& def = defaults().at(std::string(key));
  auto v = json::parse(json_value);
  if (def.is_array() && (v.is_number() || v.is_boolean())) v = json::array({v});  // one-element list
  if (!compatible(def, v)) {
    throw ConfigError(std::string(origin) + ": wrong type for '" + std::string(key) + "'");
  }
  it->second = v.dump();
}

void Config::merge_json(std::string_view json_text, std::string_view origin) {
  const auto j = json::parse(json_text, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw ConfigError(std::string(origin) + ": expected a JSON object");
  for (const auto& [k, v] : j.items()) set(k, v.dump(), origin);
}

void Config::merge_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  merge_json(ss.str(), path.string());
}

void Config::set_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
  }
  const auto key = text::trim(assignment.substr(0, eq));
  const auto value = text::trim(assignment.substr(eq + 1));
  auto parsed = json::parse(value, nullptr, false);
  if (parsed.is_discarded()) parsed = std::string(value);
  set(key, parsed.dump(), "--set");
}

bool Config::has(std::string_view key) const { return values_.find(key) != values_.end(); }

const std::string& Config::raw(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown key '" + std::string(key) + "'");
  return it->second;
}

bool Config::is_null(std::string_view key) const { return json::parse(raw(key)).is_null(); }

double Config::get_double(std::string_view key) const {
  const auto j = json::parse(raw(key));
  if (!j.is_number()) throw ConfigError("'" + std::string(key) + "' is not a number");
  return j.get<double>();
}

std::int64_t Config::get_int(std::string_view key) const {
  const double d = get_double(key);
  if (std::trunc(d) != d) throw ConfigError("'" + std::string(key) + "' must be an integer");
  return static_cast<std::int64_t>(d);
}

std::uint64_t Config::get_uint(std::string_view key) const {
  const auto j = json::parse(raw(key));
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  const auto v = get_int(key);
  if (v < 0) throw ConfigError("'" + std::string(key) + "' must not be negative");
  return static_cast<std::uint64_t>(v);
}

bool Config::get_bool(std::string_view key) const {
  const auto j = json::parse(raw(key));
  if (!j.is_boolean()) throw ConfigError("'" + std::string(key) + "' is not a boolean");
  return j.get<bool>();
}

std::string Config::get_string(std::string_view key) const {
  const auto j = json::parse(raw(key));
  if (!j.is_string()) throw ConfigError("'" + std::string(key) + "' is not a string");
  return j.get<std::string>();
}

std::optional<double> Config::get_optional_double(std::string_view key) const {
  if (is_null(key)) return std::nullopt;
  return get_double(key);
}

std::vector<std::string> Config::get_string_list(std::string_view key) const {
  const auto j = json::parse(raw(key));
  std::vector<std::string> out;
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    std::size_t start = 0;
    while (start <= s.size()) {
      const auto comma = s.find(',', start);
      const auto piece = text::trim(std::string_view(s).substr(start, comma - start));
      if (!piece.empty()) out.emplace_back(piece);
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    return out;
  }
  for (const auto& e : j) out.push_back(e.is_string() ? e.get<std::string>() : e.dump());
  return out;
}

std::vector<double> Config::get_double_list(std::string_view key) const {
  std::vector<double> out;
  for (const auto& s : get_string_list(key)) {
    const auto j = json::parse(s, nullptr, false);
    if (j.is_discarded() || !j.is_number()) throw ConfigError("'" + std::string(key) + "' holds a non-number: " + s);
    out.push_back(j.get<double>());
  }
  return out;
}

std::string Config::effective_json() const {
  json out = json::object();
  for (const auto& [k, v] : values_) out[k] = json::parse(v);
  return out.dump(2) + "\n";
}

std::vector<std::string> Config::keys() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_) out.push_back(k);
  return out;
}

}  // namespace floodsense
