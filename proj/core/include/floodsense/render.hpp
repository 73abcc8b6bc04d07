#pragma once

// Grid and declaration artifacts: GeoJSON, CSV and PNG heatmaps.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "floodsense/corpus.hpp"
#include "floodsense/detect.hpp"
#include "floodsense/geo.hpp"

namespace floodsense::render {

class RenderError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// FeatureCollection of cell rectangles with row, col, height and masked.
std::string grid_to_geojson(const geo::Grid& grid);

/// Long format: row,col,lat_min,lat_max,lon_min,lon_max,height,masked.
std::string grid_to_csv(const geo::Grid& grid);
/// Inverse of grid_to_csv. Throws RenderError on missing cells or
/// inconsistent edges.
geo::Grid grid_from_csv(std::string_view csv);

std::string declarations_csv_header();
/// date,county,flooded,max_cell_height rows for one window.
std::string declarations_to_csv(std::string_view window_label,
                                std::span<const detect::CountyDeclaration> declarations);

/// Reads declarations_to_csv output (with header) grouped by window label,
/// labels in first-seen order.
std::vector<std::pair<std::string, std::vector<detect::CountyDeclaration>>> parse_declarations_csv(
    std::string_view csv);

struct Image {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, top row first

  friend bool operator==(const Image&, const Image&) = default;
};

/// North up. Masked and zero cells are white; the rest follow a
/// yellow-to-red ramp scaled by the largest height.
Image heatmap(const geo::Grid& grid, std::size_t cell_px = 8);

void write_png(const Image& image, const std::filesystem::path& path);
Image read_png(const std::filesystem::path& path);

}  // namespace floodsense::render
