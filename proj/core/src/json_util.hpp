#pragma once

#include <charconv>
#include <string>

#include <json.hpp>

#include "floodsense/geo.hpp"

namespace floodsense::detail {

using nlohmann::json;

geo::GeoShape geometry_from_json(const json& j);
json geometry_to_json_value(const geo::GeoShape& shape);

/// Shortest round-trip decimal representation.
inline std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace floodsense::detail
