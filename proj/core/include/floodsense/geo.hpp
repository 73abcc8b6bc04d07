#pragma once

// Geometry substrate: points, polygons with holes, multipolygons, areas,
// intersections and the lat/lon grid used for floodiness accumulation.
//
// Shapes are stored in WGS84 degrees. All planar work happens in the
// Lambert cylindrical equal-area projection (x = R*lon, y = R*sin(lat)),
// so polygon areas are true spherical areas for polygons whose edges are
// straight in that projection, and areas are exactly additive. Grid cells,
// which are lat/lon rectangles, stay rectangles in that projection.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace floodsense::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// Closed ring: first vertex equals last.
using Ring = std::vector<LatLon>;

/// rings[0] is the outer boundary, any further rings are holes.
struct Polygon {
  std::vector<Ring> rings;
};

/// Parts are assumed not to overlap.
struct MultiPolygon {
  std::vector<Polygon> parts;
};

using GeoShape = std::variant<LatLon, Polygon, MultiPolygon>;

struct BBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;

  bool contains(LatLon p) const {
    return p.lat >= lat_min && p.lat <= lat_max && p.lon >= lon_min && p.lon <= lon_max;
  }
  bool overlaps(const BBox& o) const {
    return lat_min <= o.lat_max && o.lat_min <= lat_max && lon_min <= o.lon_max &&
           o.lon_min <= lon_max;
  }
  bool well_ordered() const { return lat_min < lat_max && lon_min < lon_max; }
};

/// England and Wales.
inline constexpr BBox kEnglandWales{49.9, 55.9, -6.5, 1.8};

inline bool is_point(const GeoShape& s) { return std::holds_alternative<LatLon>(s); }

/// Throws GeometryError on unclosed or degenerate rings, zero area, or
/// coordinates outside WGS84 bounds.
void validate(const GeoShape& shape);

Polygon make_rectangle(const BBox& box);

BBox bounds(const GeoShape& shape);

/// Area-weighted centroid (in the equal-area projection); a point is its own
/// centroid.
LatLon centroid(const GeoShape& shape);

/// Square kilometres. Points have zero area.
double area_km2(const GeoShape& shape);

/// Area of the overlap in square kilometres; zero whenever either side is a
/// point. Symmetric in its arguments.
double intersection_area_km2(const GeoShape& a, const GeoShape& b);

/// Boundary-inclusive: touching shapes intersect, a point on an edge or
/// vertex is inside.
bool intersects(const GeoShape& a, const GeoShape& b);

/// Point-in-shape, boundary inclusive.
bool contains(const GeoShape& shape, LatLon p);

struct CellIndex {
  std::size_t row = 0;
  std::size_t col = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// N x M floodiness raster over a bounding box. Row 0 is the southern edge,
/// column 0 the western edge. Cells are closed on their low edges and open on
/// their high edges, except the last row/column which also own the bbox edge.
class Grid {
 public:
  Grid(const BBox& bbox, std::size_t rows, std::size_t cols);

  const BBox& bbox() const { return bbox_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }

  double lat_edge(std::size_t row) const;
  double lon_edge(std::size_t col) const;
  BBox cell_bounds(std::size_t row, std::size_t col) const;
  std::optional<CellIndex> cell_of(LatLon p) const;

  std::size_t flat(std::size_t row, std::size_t col) const { return row * cols_ + col; }

  double height(std::size_t row, std::size_t col) const { return heights_[flat(row, col)]; }
  double& height(std::size_t row, std::size_t col) { return heights_[flat(row, col)]; }
  std::span<const double> heights() const { return heights_; }
  std::span<double> heights() { return heights_; }

  bool masked(std::size_t row, std::size_t col) const { return masked_[flat(row, col)] != 0; }
  void set_masked(std::size_t row, std::size_t col, bool m) { masked_[flat(row, col)] = m ? 1 : 0; }
  std::span<const std::uint8_t> mask() const { return masked_; }

  double max_height() const;

 private:
  BBox bbox_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> heights_;
  std::vector<std::uint8_t> masked_;
};

/// Zero-height grid; throws GeometryError on an inverted bbox or zero
/// dimensions.
Grid make_grid(const BBox& bbox, std::size_t rows, std::size_t cols);

struct CellOverlap {
  CellIndex cell;
  double area_km2 = 0.0;
};

/// Cells with positive overlap with a polygonal shape, row-major order.
/// Points yield nothing; use Grid::cell_of for them.
std::vector<CellOverlap> overlay(const Grid& grid, const GeoShape& shape);

}  // namespace floodsense::geo
