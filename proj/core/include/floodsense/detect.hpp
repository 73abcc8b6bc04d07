#pragma once

// Floodiness grid: accumulation of located messages, population scaling,
// relative normalisation and county declarations.

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "floodsense/corpus.hpp"
#include "floodsense/geo.hpp"
#include "floodsense/geojson.hpp"
#include "floodsense/locate.hpp"

namespace floodsense::detect {

class DetectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Relative normalisation of a grid with no positive unmasked cell.
class NoSignal : public DetectError {
 public:
  NoSignal() : DetectError("no signal: every unmasked cell has zero height") {}
};

enum class FloodinessMode { Relative, Absolute };

std::string_view to_string(FloodinessMode m);
std::optional<FloodinessMode> parse_mode(std::string_view s);

struct DetectParams {
  double alpha = 0.15;
  double threshold = 0.1;
  FloodinessMode mode = FloodinessMode::Relative;
  /// Relative mode divisor; the window maximum when unset.
  std::optional<double> reference_max;

  void validate() const;
};

/// Half-open [start, end).
struct TimeWindow {
  Timestamp start{};
  Timestamp end{};

  bool contains(Timestamp t) const { return t >= start && t < end; }
  static TimeWindow whole_day(Day d);
};

struct GridSpec {
  geo::BBox bbox = geo::kEnglandWales;
  std::size_t rows = 64;
  std::size_t cols = 64;

  geo::Grid make() const { return geo::make_grid(bbox, rows, cols); }
};

/// Grid-aligned resident counts N_g, row-major like Grid.
struct PopulationRaster {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t row, std::size_t col) const { return values[row * cols + col]; }
  static PopulationRaster uniform(std::size_t rows, std::size_t cols, double per_cell);
};

/// Spreads each region's population over the cells it overlaps in
/// proportion to overlap area. Population outside the grid is dropped.
PopulationRaster rasterize_population(const geo::Grid& grid, std::span<const Region> regions);

struct AccumulateReport {
  std::size_t points = 0;
  std::size_t polygons = 0;
  std::size_t single_cell_polygons = 0;  // added exactly 1
  std::size_t clipped_polygons = 0;      // partly outside the bbox
  std::size_t outside = 0;               // contributed nothing
  double mass = 0.0;                     // total added
};

/// g_h += Area(g ∩ p) / Area(p) for polygons, +1 for points and for
/// polygons inside a single cell. The per-cell sums are exact fixed-point
/// integers, so the result does not depend on input order or thread count.
AccumulateReport accumulate(geo::Grid& grid, std::span<const geo::GeoShape> shapes, unsigned threads = 1);

/// Every location of every message.
AccumulateReport accumulate(geo::Grid& grid, std::span<const LocatedMessage> located, unsigned threads = 1);

/// g_h /= N_g^alpha. Cells with N_g = 0 are masked and set to 0.
void population_scale(geo::Grid& grid, const PopulationRaster& raster, double alpha);

/// Divides by reference_max, or by the largest unmasked height. Throws
/// NoSignal when that maximum is not positive.
void normalize_relative(geo::Grid& grid, std::optional<double> reference_max = std::nullopt);

struct CountyDeclaration {
  std::string county;
  bool flooded = false;
  double max_cell_height = 0.0;

  friend bool operator==(const CountyDeclaration&, const CountyDeclaration&) = default;
};

/// Cells overlapping each county with positive area, computed once per
/// grid geometry and reused across windows and parameter sets.
class CountyOverlay {
 public:
  CountyOverlay(const geo::Grid& grid, std::span<const Region> counties);

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  std::span<const std::size_t> cells(std::size_t i) const { return cells_[i]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  std::vector<std::string> names_;
  std::vector<std::vector<std::size_t>> cells_;  // flat indices
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
};

/// Flooded iff some unmasked overlapping cell has height strictly above T.
std::vector<CountyDeclaration> declare_counties(const geo::Grid& grid, const CountyOverlay& overlay,
                                                double threshold);
std::vector<CountyDeclaration> declare_counties(const geo::Grid& grid, std::span<const Region> counties,
                                                double threshold);

/// Raw accumulated grid -> scaled (and normalised) grid. A relative grid
/// with no signal comes back all zero with no_signal set.
struct ScaledGrid {
  geo::Grid grid;
  bool no_signal = false;
};
ScaledGrid scale_grid(const geo::Grid& raw, const PopulationRaster& raster, const DetectParams& params);

struct WindowResult {
  geo::Grid raw;     // after accumulation
  geo::Grid grid;    // after scaling / normalisation
  bool no_signal = false;
  AccumulateReport accumulation;
  LocationStats locations;
  std::vector<LocatedMessage> located;
  std::vector<CountyDeclaration> declarations;
};

/// locate -> accumulate -> population_scale -> (normalise) -> declare over
/// the messages inside the window (all messages when no window is given).
WindowResult run_window(std::span<const Message> messages, const gazetteer::Backend& backend,
                        const InferenceParams& inference, const DetectParams& params, const GridSpec& spec,
                        const PopulationRaster& raster, const CountyOverlay& counties,
                        std::optional<TimeWindow> window = std::nullopt,
                        const gazetteer::ResolveOptions& options = {}, unsigned threads = 1);

}  // namespace floodsense::detect
