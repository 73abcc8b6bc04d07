#pragma once

// GeoJSON geometry objects (Point, Polygon, MultiPolygon) and the
// FeatureCollection of named regions used for counties and population.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "floodsense/geo.hpp"

namespace floodsense {

class GeoJsonError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses and validates one geometry object.
geo::GeoShape parse_geometry(std::string_view json);

/// Compact single-line GeoJSON; coordinates as [lon, lat].
std::string geometry_to_json(const geo::GeoShape& shape);

/// Named administrative polygon with an optional resident population.
struct Region {
  std::string name;
  geo::GeoShape shape;
  double population = 0.0;
};

/// FeatureCollection whose features carry a "name" property and optionally
/// "population". Throws GeoJsonError with the feature index on bad input.
std::vector<Region> load_regions(const std::filesystem::path& path);
std::vector<Region> parse_regions(std::string_view json);
std::string regions_to_json(const std::vector<Region>& regions);

}  // namespace floodsense
