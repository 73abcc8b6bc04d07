#include "floodsense/geojson.hpp"

#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace floodsense {
namespace detail {
namespace {

geo::LatLon position(const json& p) {
  if (!p.is_array() || p.size() < 2 || !p[0].is_number() || !p[1].is_number()) {
    throw GeoJsonError("position must be an array [lon, lat]");
  }
  return {p[1].get<double>(), p[0].get<double>()};
}

geo::Polygon polygon(const json& rings) {
  if (!rings.is_array() || rings.empty()) throw GeoJsonError("polygon needs at least one ring");
  geo::Polygon out;
  for (const auto& r : rings) {
    if (!r.is_array()) throw GeoJsonError("ring must be an array of positions");
    geo::Ring ring;
    ring.reserve(r.size());
    for (const auto& p : r) ring.push_back(position(p));
    out.rings.push_back(std::move(ring));
  }
  return out;
}

json position_json(geo::LatLon p) { return json::array({p.lon, p.lat}); }

json polygon_json(const geo::Polygon& poly) {
  json rings = json::array();
  for (const auto& ring : poly.rings) {
    json r = json::array();
    for (const auto& p : ring) r.push_back(position_json(p));
    rings.push_back(std::move(r));
  }
  return rings;
}

}  // namespace

geo::GeoShape geometry_from_json(const json& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string()) {
    throw GeoJsonError("geometry must be an object with a string \"type\"");
  }
  const auto type = j["type"].get<std::string>();
  if (!j.contains("coordinates")) throw GeoJsonError("geometry has no coordinates");
  const json& c = j["coordinates"];
  geo::GeoShape shape;
  if (type == "Point") {
    shape = position(c);
  } else if (type == "Polygon") {
    shape = polygon(c);
  } else if (type == "MultiPolygon") {
    if (!c.is_array() || c.empty()) throw GeoJsonError("multipolygon needs at least one polygon");
    geo::MultiPolygon mp;
    for (const auto& part : c) mp.parts.push_back(polygon(part));
    shape = std::move(mp);
  } else {
    throw GeoJsonError("unsupported geometry type: " + type);
  }
  try {
    geo::validate(shape);
  } catch (const geo::GeometryError& e) {
    throw GeoJsonError(std::string("invalid geometry: ") + e.what());
  }
  return shape;
}

json geometry_to_json_value(const geo::GeoShape& shape) {
  return std::visit(
      [](const auto& s) -> json {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, geo::LatLon>) {
          return {{"type", "Point"}, {"coordinates", position_json(s)}};
        } else if constexpr (std::is_same_v<T, geo::Polygon>) {
          return {{"type", "Polygon"}, {"coordinates", polygon_json(s)}};
        } else {
          json parts = json::array();
          for (const auto& p : s.parts) parts.push_back(polygon_json(p));
          return {{"type", "MultiPolygon"}, {"coordinates", parts}};
        }
      },
      shape);
}

}  // namespace detail

geo::GeoShape parse_geometry(std::string_view text) {
  const auto j = detail::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw GeoJsonError("geometry is not valid JSON");
  return detail::geometry_from_json(j);
}

std::string geometry_to_json(const geo::GeoShape& shape) {
  return detail::geometry_to_json_value(shape).dump();
}

std::vector<Region> parse_regions(std::string_view text) {
  const auto j = detail::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw GeoJsonError("region file is not valid JSON");
  if (!j.is_object() || j.value("type", "") != "FeatureCollection" || !j.contains("features") ||
      !j["features"].is_array()) {
    throw GeoJsonError("region file must be a GeoJSON FeatureCollection");
  }
  std::vector<Region> out;
  std::size_t index = 0;
  for (const auto& f : j["features"]) {
    try {
      if (!f.is_object() || !f.contains("properties") || !f["properties"].is_object()) {
        throw GeoJsonError("feature has no properties object");
      }
      const auto& props = f["properties"];
      if (!props.contains("name") || !props["name"].is_string() || props["name"].get<std::string>().empty()) {
        throw GeoJsonError("feature has no \"name\" property");
      }
      Region r;
      r.name = props["name"].get<std::string>();
      if (props.contains("population")) {
        if (!props["population"].is_number() || props["population"].get<double>() < 0) {
          throw GeoJsonError("\"population\" must be a nonnegative number");
        }
        r.population = props["population"].get<double>();
      }
      if (!f.contains("geometry")) throw GeoJsonError("feature has no geometry");
      r.shape = detail::geometry_from_json(f["geometry"]);
      if (geo::is_point(r.shape)) throw GeoJsonError("region geometry must be polygonal");
      out.push_back(std::move(r));
    } catch (const GeoJsonError& e) {
      throw GeoJsonError("feature " + std::to_string(index) + ": " + e.what());
    }
    ++index;
  }
  return out;
}

std::vector<Region> load_regions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw GeoJsonError("cannot open region file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_regions(ss.str());
}

std::string regions_to_json(const std::vector<Region>& regions) {
  detail::json features = detail::json::array();
  for (const auto& r : regions) {
    features.push_back({{"type", "Feature"},
                        {"properties", {{"name", r.name}, {"population", r.population}}},
                        {"geometry", detail::geometry_to_json_value(r.shape)}});
  }
  return detail::json{{"type", "FeatureCollection"}, {"features", features}}.dump();
}

}  // namespace floodsense
