#include "floodsense/detect.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "floodsense/parallel.hpp"

namespace floodsense::detect {
namespace {

// Fixed point with 64 fractional bits. Every increment is at most 1, so the
// integer part has 63 bits of headroom.
__extension__ typedef __int128 Fixed;
constexpr int kFracBits = 64;

Fixed to_fixed(double v) { return static_cast<Fixed>(std::ldexp(v, kFracBits)); }
double from_fixed(Fixed v) { return std::ldexp(static_cast<double>(v), -kFracBits); }

struct Contribution {
  std::size_t cell;
  Fixed amount;
};

enum class Kind { Point, Single, Spread, Clipped, Outside };

Kind contributions(const geo::Grid& grid, const geo::GeoShape& shape, std::vector<Contribution>& out) {
  if (const auto* p = std::get_if<geo::LatLon>(&shape)) {
    auto cell = grid.cell_of(*p);
    if (!cell) return Kind::Outside;
    out.push_back({grid.flat(cell->row, cell->col), to_fixed(1.0)});
    return Kind::Point;
  }
  const auto cells = geo::overlay(grid, shape);
  if (cells.empty()) return Kind::Outside;
  const double total = geo::area_km2(shape);
  const auto box = geo::bounds(shape);
  const bool inside = grid.bbox().contains({box.lat_min, box.lon_min}) &&
                      grid.bbox().contains({box.lat_max, box.lon_max});
  if (cells.size() == 1 && inside) {
    out.push_back({grid.flat(cells[0].cell.row, cells[0].cell.col), to_fixed(1.0)});
    return Kind::Single;
  }
  for (const auto& c : cells) {
    out.push_back({grid.flat(c.cell.row, c.cell.col), to_fixed(std::min(1.0, c.area_km2 / total))});
  }
  return inside ? Kind::Spread : Kind::Clipped;
}

}  // namespace

std::string_view to_string(FloodinessMode m) { return m == FloodinessMode::Relative ? "relative" : "absolute"; }

std::optional<FloodinessMode> parse_mode(std::string_view s) {
  if (s == "relative") return FloodinessMode::Relative;
  if (s == "absolute") return FloodinessMode::Absolute;
  return std::nullopt;
}

void DetectParams::validate() const {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite and >= 0");
  if (!(threshold >= 0.0) || !std::isfinite(threshold)) throw std::invalid_argument("T must be finite and >= 0");
  if (reference_max && !(*reference_max > 0.0)) throw std::invalid_argument("reference max must be positive");
}

TimeWindow TimeWindow::whole_day(Day d) {
  return {Timestamp(d), Timestamp(d + std::chrono::days(1))};
}

PopulationRaster PopulationRaster::uniform(std::size_t rows, std::size_t cols, double per_cell) {
  return {rows, cols, std::vector<double>(rows * cols, per_cell)};
}

PopulationRaster rasterize_population(const geo::Grid& grid, std::span<const Region> regions) {
  PopulationRaster r{grid.rows(), grid.cols(), std::vector<double>(grid.size(), 0.0)};
  for (const auto& region : regions) {
    if (!(region.population >= 0.0)) throw DetectError("negative population for region " + region.name);
    if (region.population == 0.0 || geo::is_point(region.shape)) continue;
    const double total = geo::area_km2(region.shape);
    for (const auto& c : geo::overlay(grid, region.shape)) {
      r.values[grid.flat(c.cell.row, c.cell.col)] += region.population * (c.area_km2 / total);
    }
  }
  return r;
}

AccumulateReport accumulate(geo::Grid& grid, std::span<const geo::GeoShape> shapes, unsigned threads) {
  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (shapes.size() + kChunk - 1) / kChunk;
  struct Partial {
    std::vector<Contribution> items;
    std::size_t counts[5] = {};
  };
  std::vector<Partial> partial(chunks);
  parallel_chunks(shapes.size(), kChunk, threads, [&](std::size_t c, std::size_t lo, std::size_t hi) {
    auto& p = partial[c];
    for (std::size_t i = lo; i < hi; ++i) ++p.counts[static_cast<int>(contributions(grid, shapes[i], p.items))];
  });

  std::vector<Fixed> sums(grid.size(), 0);
  AccumulateReport report;
  Fixed mass = 0;
  for (const auto& p : partial) {
    for (const auto& item : p.items) {
      sums[item.cell] += item.amount;
      mass += item.amount;
    }
    report.points += p.counts[static_cast<int>(Kind::Point)];
    report.single_cell_polygons += p.counts[static_cast<int>(Kind::Single)];
    report.clipped_polygons += p.counts[static_cast<int>(Kind::Clipped)];
    report.outside += p.counts[static_cast<int>(Kind::Outside)];
    report.polygons += p.counts[static_cast<int>(Kind::Single)] + p.counts[static_cast<int>(Kind::Spread)] +
                       p.counts[static_cast<int>(Kind::Clipped)];
  }
  auto heights = grid.heights();
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (sums[i] != 0) heights[i] += from_fixed(sums[i]);
  }
  report.mass = from_fixed(mass);
  return report;
}

AccumulateReport accumulate(geo::Grid& grid, std::span<const LocatedMessage> located, unsigned threads) {
  std::vector<geo::GeoShape> shapes;
  for (const auto& m : located) {
    for (const auto& loc : m.locations) shapes.push_back(loc.shape);
  }
  return accumulate(grid, shapes, threads);
}

void population_scale(geo::Grid& grid, const PopulationRaster& raster, double alpha) {
  if (raster.rows != grid.rows() || raster.cols != grid.cols() || raster.values.size() != grid.size()) {
    throw DetectError("population raster does not match the grid dimensions");
  }
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("alpha must be finite and >= 0");
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double n = raster.at(r, c);
      if (!(n >= 0.0)) throw DetectError("negative population in raster");
      if (n == 0.0) {
        grid.height(r, c) = 0.0;
        grid.set_masked(r, c, true);
      } else if (alpha != 0.0) {
        grid.height(r, c) /= std::pow(n, alpha);
      }
    }
  }
}

void normalize_relative(geo::Grid& grid, std::optional<double> reference_max) {
  const double m = reference_max ? *reference_max : grid.max_height();
  if (!(m > 0.0)) throw NoSignal();
  for (auto& h : grid.heights()) h /= m;
}

CountyOverlay::CountyOverlay(const geo::Grid& grid, std::span<const Region> counties)
    : rows_(grid.rows()), cols_(grid.cols()) {
  names_.reserve(counties.size());
  cells_.reserve(counties.size());
  for (const auto& county : counties) {
    names_.push_back(county.name);
    std::vector<std::size_t> cells;
    if (const auto* p = std::get_if<geo::LatLon>(&county.shape)) {
      if (auto cell = grid.cell_of(*p)) cells.push_back(grid.flat(cell->row, cell->col));
    } else {
      for (const auto& c : geo::overlay(grid, county.shape)) cells.push_back(grid.flat(c.cell.row, c.cell.col));
    }
    cells_.push_back(std::move(cells));
  }
}

std::vector<CountyDeclaration> declare_counties(const geo::Grid& grid, const CountyOverlay& overlay,
                                                double threshold) {
  if (overlay.rows() != grid.rows() || overlay.cols() != grid.cols()) {
    throw DetectError("county overlay was built for a different grid");
  }
  const auto heights = grid.heights();
  const auto mask = grid.mask();
  std::vector<CountyDeclaration> out;
  out.reserve(overlay.size());
  for (std::size_t i = 0; i < overlay.size(); ++i) {
    double m = 0.0;
    for (auto cell : overlay.cells(i)) {
      if (!mask[cell]) m = std::max(m, heights[cell]);
    }
    out.push_back({overlay.name(i), m > threshold, m});
  }
  return out;
}

std::vector<CountyDeclaration> declare_counties(const geo::Grid& grid, std::span<const Region> counties,
                                                double threshold) {
  return declare_counties(grid, CountyOverlay(grid, counties), threshold);
}

ScaledGrid scale_grid(const geo::Grid& raw, const PopulationRaster& raster, const DetectParams& params) {
  params.validate();
  ScaledGrid out{raw};
  population_scale(out.grid, raster, params.alpha);
  if (params.mode == FloodinessMode::Relative) {
    try {
      normalize_relative(out.grid, params.reference_max);
    } catch (const NoSignal&) {
      out.no_signal = true;
    }
  }
  return out;
}

WindowResult run_window(std::span<const Message> messages, const gazetteer::Backend& backend,
                        const InferenceParams& inference, const DetectParams& params, const GridSpec& spec,
                        const PopulationRaster& raster, const CountyOverlay& counties,
                        std::optional<TimeWindow> window, const gazetteer::ResolveOptions& options,
                        unsigned threads) {
  params.validate();
  std::vector<Message> selected;
  std::span<const Message> input = messages;
  if (window) {
    std::copy_if(messages.begin(), messages.end(), std::back_inserter(selected),
                 [&](const Message& m) { return window->contains(m.timestamp); });
    input = selected;
  }
  auto batch = infer_batch(input, backend, inference, options, threads);
  geo::Grid raw = spec.make();
  const auto report = accumulate(raw, std::span<const LocatedMessage>(batch.messages), threads);
  auto scaled = scale_grid(raw, raster, params);
  auto declarations = declare_counties(scaled.grid, counties, params.threshold);
  return WindowResult{std::move(raw),          std::move(scaled.grid),  scaled.no_signal, report,
                      batch.stats,             std::move(batch.messages), std::move(declarations)};
}

}  // namespace floodsense::detect
