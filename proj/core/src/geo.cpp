#include "floodsense/geo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <iterator>
#include <numbers>

namespace floodsense::geo {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Absolute tolerance (km) for boundary tests in projected space.
constexpr double kEpsKm = 1e-9;
constexpr double kAreaNoise = 1e-12;  // relative to the areas involved

struct XY {
  double x = 0.0;
  double y = 0.0;
};

XY project(LatLon p) {
  return {kEarthRadiusKm * p.lon * kDegToRad, kEarthRadiusKm * std::sin(p.lat * kDegToRad)};
}

LatLon unproject(XY p) {
  const double s = std::clamp(p.y / kEarthRadiusKm, -1.0, 1.0);
  return {std::asin(s) / kDegToRad, p.x / kEarthRadiusKm / kDegToRad};
}

using PlanarRing = std::vector<XY>;  // open: no repeated closing vertex

double cross(XY o, XY a, XY b) { return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x); }

double signed_area(const PlanarRing& ring) {
  const std::size_t n = ring.size();
  if (n < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const XY& a = ring[i];
    const XY& b = ring[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

PlanarRing project_ring(const Ring& ring) {
  PlanarRing out;
  out.reserve(ring.size());
  for (std::size_t i = 0; i + 1 < ring.size(); ++i) out.push_back(project(ring[i]));
  return out;
}

// Rings oriented so the signed areas sum to the polygon area: outer
// counter-clockwise, holes clockwise.
std::vector<PlanarRing> oriented_rings(const Polygon& poly) {
  std::vector<PlanarRing> out;
  out.reserve(poly.rings.size());
  for (std::size_t i = 0; i < poly.rings.size(); ++i) {
    PlanarRing r = project_ring(poly.rings[i]);
    const double a = signed_area(r);
    if ((i == 0 && a < 0) || (i > 0 && a > 0)) std::reverse(r.begin(), r.end());
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<PlanarRing> oriented_rings(const GeoShape& shape) {
  if (const auto* p = std::get_if<Polygon>(&shape)) return oriented_rings(*p);
  std::vector<PlanarRing> out;
  if (const auto* mp = std::get_if<MultiPolygon>(&shape)) {
    for (const auto& part : mp->parts) {
      auto rings = oriented_rings(part);
      std::move(rings.begin(), rings.end(), std::back_inserter(out));
    }
  }
  return out;
}

// Sutherland-Hodgman against one axis-aligned half plane. `axis` 0 clips on
// x, 1 on y; keeps coordinates >= value when keep_above, else <= value.
// Works for non-convex subjects as far as the signed area is concerned.
PlanarRing clip_axis(const PlanarRing& in, int axis, double value, bool keep_above) {
  PlanarRing out;
  const std::size_t n = in.size();
  if (n == 0) return out;
  out.reserve(n + 4);
  auto coord = [axis](const XY& p) { return axis == 0 ? p.x : p.y; };
  auto inside = [&](const XY& p) { return keep_above ? coord(p) >= value : coord(p) <= value; };
  auto crossing = [&](const XY& a, const XY& b) {
    const double t = (value - coord(a)) / (coord(b) - coord(a));
    XY r{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)};
    if (axis == 0) r.x = value; else r.y = value;
    return r;
  };
  for (std::size_t i = 0; i < n; ++i) {
    const XY& cur = in[i];
    const XY& prev = in[(i + n - 1) % n];
    const bool cin = inside(cur);
    const bool pin = inside(prev);
    if (cin) {
      if (!pin) out.push_back(crossing(prev, cur));
      out.push_back(cur);
    } else if (pin) {
      out.push_back(crossing(prev, cur));
    }
  }
  return out;
}

struct PlanarRect {
  double x0, x1, y0, y1;
};

PlanarRect project_box(const BBox& b) {
  const XY lo = project({b.lat_min, b.lon_min});
  const XY hi = project({b.lat_max, b.lon_max});
  return {lo.x, hi.x, lo.y, hi.y};
}

// Keep the side left of the directed line p->q.
PlanarRing clip_line(const PlanarRing& in, XY p, XY q) {
  PlanarRing out;
  const std::size_t n = in.size();
  if (n == 0) return out;
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const XY& cur = in[i];
    const XY& prev = in[(i + n - 1) % n];
    const double dc = cross(p, q, cur);
    const double dp = cross(p, q, prev);
    if (dc >= 0) {
      if (dp < 0) {
        const double t = dp / (dp - dc);
        out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
      }
      out.push_back(cur);
    } else if (dp >= 0) {
      const double t = dp / (dp - dc);
      out.push_back({prev.x + t * (cur.x - prev.x), prev.y + t * (cur.y - prev.y)});
    }
  }
  return out;
}

struct FanTriangle {
  std::array<XY, 3> v;  // counter-clockwise
  double sign;
  PlanarRect box;
};

std::vector<FanTriangle> fan(const std::vector<PlanarRing>& rings, XY origin) {
  std::vector<FanTriangle> out;
  const XY o{0.0, 0.0};
  for (const auto& ring : rings) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      XY a{ring[i].x - origin.x, ring[i].y - origin.y};
      XY b{ring[(i + 1) % n].x - origin.x, ring[(i + 1) % n].y - origin.y};
      const double c = cross(o, a, b);
      if (c == 0.0) continue;
      FanTriangle t;
      t.sign = c > 0 ? 1.0 : -1.0;
      if (c < 0) std::swap(a, b);
      t.v = {o, a, b};
      t.box = {std::min({0.0, a.x, b.x}), std::max({0.0, a.x, b.x}), std::min({0.0, a.y, b.y}),
               std::max({0.0, a.y, b.y})};
      out.push_back(t);
    }
  }
  return out;
}

// Area of A∩B via signed origin fans: the indicator of each shape is the
// signed sum of its fan triangles, so the overlap area is the signed sum of
// pairwise convex triangle overlaps.
double fan_overlap(const std::vector<PlanarRing>& a, const std::vector<PlanarRing>& b, XY origin) {
  const auto fa = fan(a, origin);
  const auto fb = fan(b, origin);
  double total = 0.0;
  for (const auto& ta : fa) {
    for (const auto& tb : fb) {
      if (ta.box.x1 < tb.box.x0 || tb.box.x1 < ta.box.x0 || ta.box.y1 < tb.box.y0 ||
          tb.box.y1 < ta.box.y0) {
        continue;
      }
      PlanarRing poly(ta.v.begin(), ta.v.end());
      for (int e = 0; e < 3 && !poly.empty(); ++e) {
        poly = clip_line(poly, tb.v[e], tb.v[(e + 1) % 3]);
      }
      if (poly.size() < 3) continue;
      total += ta.sign * tb.sign * std::abs(signed_area(poly));
    }
  }
  return total;
}

bool on_segment(XY p, XY a, XY b) {
  const double len = std::hypot(b.x - a.x, b.y - a.y);
  if (len == 0.0) return std::hypot(p.x - a.x, p.y - a.y) <= kEpsKm;
  if (std::abs(cross(a, b, p)) / len > kEpsKm) return false;
  return p.x >= std::min(a.x, b.x) - kEpsKm && p.x <= std::max(a.x, b.x) + kEpsKm &&
         p.y >= std::min(a.y, b.y) - kEpsKm && p.y <= std::max(a.y, b.y) + kEpsKm;
}

enum class Where { Outside, Boundary, Inside };

Where locate_in_ring(XY p, const PlanarRing& ring) {
  const std::size_t n = ring.size();
  bool in = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const XY& a = ring[i];
    const XY& b = ring[j];
    if (on_segment(p, a, b)) return Where::Boundary;
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x) in = !in;
    }
  }
  return in ? Where::Inside : Where::Outside;
}

bool polygon_contains(const Polygon& poly, XY p) {
  if (poly.rings.empty()) return false;
  const Where outer = locate_in_ring(p, project_ring(poly.rings[0]));
  if (outer == Where::Outside) return false;
  if (outer == Where::Boundary) return true;
  for (std::size_t h = 1; h < poly.rings.size(); ++h) {
    if (locate_in_ring(p, project_ring(poly.rings[h])) == Where::Inside) return false;
  }
  return true;
}

bool shape_contains(const GeoShape& shape, XY p) {
  if (const auto* poly = std::get_if<Polygon>(&shape)) return polygon_contains(*poly, p);
  if (const auto* mp = std::get_if<MultiPolygon>(&shape)) {
    return std::any_of(mp->parts.begin(), mp->parts.end(),
                       [&](const Polygon& part) { return polygon_contains(part, p); });
  }
  const XY q = project(std::get<LatLon>(shape));
  return std::hypot(p.x - q.x, p.y - q.y) <= kEpsKm;
}

int orient(XY a, XY b, XY c) {
  const double v = cross(a, b, c);
  const double scale = std::max({std::hypot(b.x - a.x, b.y - a.y), std::hypot(c.x - a.x, c.y - a.y), 1.0});
  if (std::abs(v) <= kEpsKm * scale) return 0;
  return v > 0 ? 1 : -1;
}

bool segments_intersect(XY p1, XY p2, XY q1, XY q2) {
  const int o1 = orient(p1, p2, q1);
  const int o2 = orient(p1, p2, q2);
  const int o3 = orient(q1, q2, p1);
  const int o4 = orient(q1, q2, p2);
  if (o1 != o2 && o3 != o4 && o1 * o2 <= 0 && o3 * o4 <= 0) {
    if (o1 != 0 || o2 != 0) return true;
  }
  return on_segment(q1, p1, p2) || on_segment(q2, p1, p2) || on_segment(p1, q1, q2) ||
         on_segment(p2, q1, q2);
}

std::vector<const Polygon*> parts_of(const GeoShape& s) {
  std::vector<const Polygon*> out;
  if (const auto* p = std::get_if<Polygon>(&s)) out.push_back(p);
  if (const auto* mp = std::get_if<MultiPolygon>(&s)) {
    for (const auto& part : mp->parts) out.push_back(&part);
  }
  return out;
}

bool polygons_intersect(const Polygon& a, const Polygon& b) {
  if (!bounds(a).overlaps(bounds(b))) return false;
  std::vector<PlanarRing> ra, rb;
  for (const auto& r : a.rings) ra.push_back(project_ring(r));
  for (const auto& r : b.rings) rb.push_back(project_ring(r));
  for (const auto& x : ra) {
    for (const auto& y : rb) {
      for (std::size_t i = 0; i < x.size(); ++i) {
        const XY& p1 = x[i];
        const XY& p2 = x[(i + 1) % x.size()];
        for (std::size_t j = 0; j < y.size(); ++j) {
          if (segments_intersect(p1, p2, y[j], y[(j + 1) % y.size()])) return true;
        }
      }
    }
  }
  // No boundary crossings: one may lie wholly inside the other.
  return polygon_contains(b, ra[0][0]) || polygon_contains(a, rb[0][0]);
}

void validate_coord(LatLon p) {
  if (!std::isfinite(p.lat) || !std::isfinite(p.lon) || p.lat < -90.0 || p.lat > 90.0 ||
      p.lon < -180.0 || p.lon > 180.0) {
    throw GeometryError("coordinate outside WGS84 bounds");
  }
}

void validate_polygon(const Polygon& poly) {
  if (poly.rings.empty()) throw GeometryError("polygon has no rings");
  for (const auto& ring : poly.rings) {
    if (ring.size() < 4) throw GeometryError("ring needs at least 4 vertices (closed triangle)");
    if (!(ring.front() == ring.back())) throw GeometryError("ring is not closed");
    for (const auto& p : ring) validate_coord(p);
    if (signed_area(project_ring(ring)) == 0.0) throw GeometryError("degenerate ring with zero area");
  }
  if (!(area_km2(poly) > 0.0)) throw GeometryError("polygon area is not positive");
}

}  // namespace

void validate(const GeoShape& shape) {
  std::visit(
      [](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, LatLon>) {
          validate_coord(s);
        } else if constexpr (std::is_same_v<T, Polygon>) {
          validate_polygon(s);
        } else {
          if (s.parts.empty()) throw GeometryError("multipolygon has no parts");
          for (const auto& part : s.parts) validate_polygon(part);
        }
      },
      shape);
}

Polygon make_rectangle(const BBox& b) {
  return Polygon{{Ring{{b.lat_min, b.lon_min},
                       {b.lat_min, b.lon_max},
                       {b.lat_max, b.lon_max},
                       {b.lat_max, b.lon_min},
                       {b.lat_min, b.lon_min}}}};
}

BBox bounds(const GeoShape& shape) {
  if (const auto* p = std::get_if<LatLon>(&shape)) return {p->lat, p->lat, p->lon, p->lon};
  BBox b{90.0, -90.0, 180.0, -180.0};
  for (const Polygon* part : parts_of(shape)) {
    for (const auto& ring : part->rings) {
      for (const auto& v : ring) {
        b.lat_min = std::min(b.lat_min, v.lat);
        b.lat_max = std::max(b.lat_max, v.lat);
        b.lon_min = std::min(b.lon_min, v.lon);
        b.lon_max = std::max(b.lon_max, v.lon);
      }
    }
  }
  return b;
}

LatLon centroid(const GeoShape& shape) {
  if (const auto* p = std::get_if<LatLon>(&shape)) return *p;
  double a = 0.0, cx = 0.0, cy = 0.0;
  for (const auto& ring : oriented_rings(shape)) {
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
      const XY& p = ring[i];
      const XY& q = ring[(i + 1) % n];
      const double c = p.x * q.y - q.x * p.y;
      a += c;
      cx += (p.x + q.x) * c;
      cy += (p.y + q.y) * c;
    }
  }
  if (a == 0.0) throw GeometryError("centroid of zero-area shape");
  return unproject({cx / (3.0 * a), cy / (3.0 * a)});
}

double area_km2(const GeoShape& shape) {
  double total = 0.0;
  for (const auto& ring : oriented_rings(shape)) total += signed_area(ring);
  return std::max(total, 0.0);
}

double intersection_area_km2(const GeoShape& a, const GeoShape& b) {
  if (is_point(a) || is_point(b)) return 0.0;
  const BBox ba = bounds(a);
  const BBox bb = bounds(b);
  if (!ba.overlaps(bb)) return 0.0;
  const BBox common{std::max(ba.lat_min, bb.lat_min), std::min(ba.lat_max, bb.lat_max),
                    std::max(ba.lon_min, bb.lon_min), std::min(ba.lon_max, bb.lon_max)};
  const XY origin = project({0.5 * (common.lat_min + common.lat_max), 0.5 * (common.lon_min + common.lon_max)});
  // Summation order depends on argument order; evaluate both ways and
  // average so the result is exactly symmetric.
  const double ab = fan_overlap(oriented_rings(a), oriented_rings(b), origin);
  const double ba_ = fan_overlap(oriented_rings(b), oriented_rings(a), origin);
  const double v = 0.5 * (ab + ba_);
  const double aa = area_km2(a), ab_area = area_km2(b);
  // Cancellation in the signed fan sums leaves residue near zero for
  // disjoint or edge-touching shapes.
  if (v <= kAreaNoise * (aa + ab_area)) return 0.0;
  return std::min(v, std::min(aa, ab_area));
}

bool contains(const GeoShape& shape, LatLon p) { return shape_contains(shape, project(p)); }

bool intersects(const GeoShape& a, const GeoShape& b) {
  if (const auto* pa = std::get_if<LatLon>(&a)) return shape_contains(b, project(*pa));
  if (const auto* pb = std::get_if<LatLon>(&b)) return shape_contains(a, project(*pb));
  for (const Polygon* x : parts_of(a)) {
    for (const Polygon* y : parts_of(b)) {
      if (polygons_intersect(*x, *y)) return true;
    }
  }
  return false;
}

Grid::Grid(const BBox& bbox, std::size_t rows, std::size_t cols)
    : bbox_(bbox), rows_(rows), cols_(cols), heights_(rows * cols, 0.0), masked_(rows * cols, 0) {
  if (rows == 0 || cols == 0) throw GeometryError("grid dimensions must be at least 1x1");
  if (!bbox.well_ordered()) throw GeometryError("grid bounding box is inverted or empty");
  validate_coord({bbox.lat_min, bbox.lon_min});
  validate_coord({bbox.lat_max, bbox.lon_max});
}

double Grid::lat_edge(std::size_t row) const {
  if (row >= rows_) return bbox_.lat_max;
  return bbox_.lat_min + (bbox_.lat_max - bbox_.lat_min) * static_cast<double>(row) / static_cast<double>(rows_);
}

double Grid::lon_edge(std::size_t col) const {
  if (col >= cols_) return bbox_.lon_max;
  return bbox_.lon_min + (bbox_.lon_max - bbox_.lon_min) * static_cast<double>(col) / static_cast<double>(cols_);
}

BBox Grid::cell_bounds(std::size_t row, std::size_t col) const {
  return {lat_edge(row), lat_edge(row + 1), lon_edge(col), lon_edge(col + 1)};
}

std::optional<CellIndex> Grid::cell_of(LatLon p) const {
  if (!bbox_.contains(p)) return std::nullopt;
  auto index = [](double v, double lo, double hi, std::size_t n, auto edge) {
    auto i = static_cast<std::size_t>(std::floor((v - lo) / (hi - lo) * static_cast<double>(n)));
    i = std::min(i, n - 1);
    // Snap against the exact edge values used for cell bounds.
    while (i > 0 && v < edge(i)) --i;
    while (i + 1 < n && v >= edge(i + 1)) ++i;
    return i;
  };
  const std::size_t row = index(p.lat, bbox_.lat_min, bbox_.lat_max, rows_,
                                [this](std::size_t r) { return lat_edge(r); });
  const std::size_t col = index(p.lon, bbox_.lon_min, bbox_.lon_max, cols_,
                                [this](std::size_t c) { return lon_edge(c); });
  return CellIndex{row, col};
}

double Grid::max_height() const {
  double m = 0.0;
  for (double h : heights_) m = std::max(m, h);
  return m;
}

Grid make_grid(const BBox& bbox, std::size_t rows, std::size_t cols) { return Grid(bbox, rows, cols); }

std::vector<CellOverlap> overlay(const Grid& grid, const GeoShape& shape) {
  std::vector<CellOverlap> out;
  if (is_point(shape)) return out;
  const BBox sb = bounds(shape);
  const BBox& gb = grid.bbox();
  if (!sb.overlaps(gb)) return out;

  auto row_range = [&](double lo, double hi) {
    const auto first = grid.cell_of({std::max(lo, gb.lat_min), gb.lon_min});
    const auto last = grid.cell_of({std::min(hi, gb.lat_max), gb.lon_min});
    return std::pair{first->row, last->row};
  };
  auto col_range = [&](double lo, double hi) {
    const auto first = grid.cell_of({gb.lat_min, std::max(lo, gb.lon_min)});
    const auto last = grid.cell_of({gb.lat_min, std::min(hi, gb.lon_max)});
    return std::pair{first->col, last->col};
  };
  const auto [r0, r1] = row_range(sb.lat_min, sb.lat_max);
  const auto [c0, c1] = col_range(sb.lon_min, sb.lon_max);

  const auto rings = oriented_rings(shape);
  const double floor = kAreaNoise * area_km2(shape);
  std::vector<double> acc((r1 - r0 + 1) * (c1 - c0 + 1), 0.0);
  for (std::size_t r = r0; r <= r1; ++r) {
    const PlanarRect band = project_box(grid.cell_bounds(r, c0));
    std::vector<PlanarRing> banded;
    for (const auto& ring : rings) {
      auto b = clip_axis(clip_axis(ring, 1, band.y0, true), 1, band.y1, false);
      if (b.size() >= 3) banded.push_back(std::move(b));
    }
    if (banded.empty()) continue;
    for (std::size_t c = c0; c <= c1; ++c) {
      const PlanarRect cell = project_box(grid.cell_bounds(r, c));
      double a = 0.0;
      for (const auto& ring : banded) {
        const auto piece = clip_axis(clip_axis(ring, 0, cell.x0, true), 0, cell.x1, false);
        a += signed_area(piece);
      }
      acc[(r - r0) * (c1 - c0 + 1) + (c - c0)] = a;
    }
  }
  for (std::size_t r = r0; r <= r1; ++r) {
    for (std::size_t c = c0; c <= c1; ++c) {
      const double a = acc[(r - r0) * (c1 - c0 + 1) + (c - c0)];
      if (a > floor) out.push_back({{r, c}, a});
    }
  }
  return out;
}

}  // namespace floodsense::geo
