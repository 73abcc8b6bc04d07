#include "floodsense/render.hpp"

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <sstream>

#include "json_util.hpp"

namespace floodsense::render {
namespace {

using detail::format_double;
using detail::json;

struct Rgb {
  double r, g, b;
};

// Light yellow, orange, dark red.
constexpr std::array<Rgb, 3> kRamp{{{255, 237, 160}, {253, 141, 60}, {177, 0, 38}}};

std::array<std::uint8_t, 3> colour(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const double x = t * (kRamp.size() - 1);
  const std::size_t i = std::min<std::size_t>(static_cast<std::size_t>(x), kRamp.size() - 2);
  const double f = x - static_cast<double>(i);
  auto mix = [f](double a, double b) { return static_cast<std::uint8_t>(std::lround(a + (b - a) * f)); };
  return {mix(kRamp[i].r, kRamp[i + 1].r), mix(kRamp[i].g, kRamp[i + 1].g), mix(kRamp[i].b, kRamp[i + 1].b)};
}

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};

}  // namespace

std::string grid_to_geojson(const geo::Grid& grid) {
  json features = json::array();
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      features.push_back({{"type", "Feature"},
                          {"geometry", detail::geometry_to_json_value(geo::make_rectangle(grid.cell_bounds(r, c)))},
                          {"properties",
                           {{"row", r}, {"col", c}, {"height", grid.height(r, c)}, {"masked", grid.masked(r, c)}}}});
    }
  }
  return json{{"type", "FeatureCollection"}, {"features", features}}.dump() + "\n";
}

std::string grid_to_csv(const geo::Grid& grid) {
  std::ostringstream out;
  out << "row,col,lat_min,lat_max,lon_min,lon_max,height,masked\n";
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const auto b = grid.cell_bounds(r, c);
      out << r << ',' << c << ',' << format_double(b.lat_min) << ',' << format_double(b.lat_max) << ','
          << format_double(b.lon_min) << ',' << format_double(b.lon_max) << ',' << format_double(grid.height(r, c))
          << ',' << (grid.masked(r, c) ? 1 : 0) << '\n';
    }
  }
  return out.str();
}

geo::Grid grid_from_csv(std::string_view csv) {
  struct Cell {
    std::size_t row, col;
    double lat_min, lat_max, lon_min, lon_max, height;
    bool masked;
  };
  std::vector<Cell> cells;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (n == 1) {
      if (line != "row,col,lat_min,lat_max,lon_min,lon_max,height,masked") {
        throw RenderError("grid CSV: unexpected header");
      }
      continue;
    }
    Cell c{};
    int masked = 0;
    if (std::sscanf(line.c_str(), "%zu,%zu,%lf,%lf,%lf,%lf,%lf,%d", &c.row, &c.col, &c.lat_min, &c.lat_max,
                    &c.lon_min, &c.lon_max, &c.height, &masked) != 8 ||
        !(c.height >= 0.0)) {
      throw RenderError("grid CSV line " + std::to_string(n) + ": malformed");
    }
    c.masked = masked != 0;
    cells.push_back(c);
  }
  if (cells.empty()) throw RenderError("grid CSV has no cells");
  std::size_t rows = 0, cols = 0;
  geo::BBox box{cells[0].lat_min, cells[0].lat_max, cells[0].lon_min, cells[0].lon_max};
  for (const auto& c : cells) {
    rows = std::max(rows, c.row + 1);
    cols = std::max(cols, c.col + 1);
    box.lat_min = std::min(box.lat_min, c.lat_min);
    box.lat_max = std::max(box.lat_max, c.lat_max);
    box.lon_min = std::min(box.lon_min, c.lon_min);
    box.lon_max = std::max(box.lon_max, c.lon_max);
  }
  if (cells.size() != rows * cols) throw RenderError("grid CSV does not hold every cell exactly once");
  geo::Grid grid(box, rows, cols);
  std::vector<char> seen(rows * cols, 0);
  for (const auto& c : cells) {
    const auto b = grid.cell_bounds(c.row, c.col);
    const double tol = 1e-9;
    if (std::abs(b.lat_min - c.lat_min) > tol || std::abs(b.lat_max - c.lat_max) > tol ||
        std::abs(b.lon_min - c.lon_min) > tol || std::abs(b.lon_max - c.lon_max) > tol) {
      throw RenderError("grid CSV: cell edges are not a uniform partition");
    }
    if (seen[grid.flat(c.row, c.col)]++) throw RenderError("grid CSV: duplicate cell");
    grid.height(c.row, c.col) = c.height;
    grid.set_masked(c.row, c.col, c.masked);
  }
  return grid;
}

std::string declarations_csv_header() { return "date,county,flooded,max_cell_height\n"; }

std::string declarations_to_csv(std::string_view window_label,
                                std::span<const detect::CountyDeclaration> declarations) {
  std::string out;
  for (const auto& d : declarations) {
    std::string county = d.county;
    if (county.find_first_of(",\"") != std::string::npos) {
      std::string quoted = "\"";
      for (char ch : county) {
        if (ch == '"') quoted += '"';
        quoted += ch;
      }
      county = quoted + "\"";
    }
    out += std::string(window_label) + "," + county + "," + (d.flooded ? "1" : "0") + "," +
           format_double(d.max_cell_height) + "\n";
  }
  return out;
}

std::vector<std::pair<std::string, std::vector<detect::CountyDeclaration>>> parse_declarations_csv(
    std::string_view csv) {
  std::vector<std::pair<std::string, std::vector<detect::CountyDeclaration>>> out;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (n == 1) {
      if (line + "\n" != declarations_csv_header()) throw RenderError("declarations CSV: unexpected header");
      continue;
    }
    std::vector<std::string> f(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted && c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        f.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = !quoted;
      } else if (c == ',' && !quoted) {
        f.emplace_back();
      } else {
        f.back() += c;
      }
    }
    const auto where = "declarations CSV line " + std::to_string(n) + ": ";
    if (f.size() != 4 || (f[2] != "0" && f[2] != "1")) throw RenderError(where + "malformed");
    detect::CountyDeclaration d{f[1], f[2] == "1", 0.0};
    char* end = nullptr;
    d.max_cell_height = std::strtod(f[3].c_str(), &end);
    if (end == f[3].c_str() || *end != '\0') throw RenderError(where + "bad max_cell_height");
    if (out.empty() || out.back().first != f[0]) {
      auto it = std::find_if(out.begin(), out.end(), [&](const auto& p) { return p.first == f[0]; });
      if (it != out.end()) {
        it->second.push_back(std::move(d));
        continue;
      }
      out.push_back({f[0], {}});
    }
    out.back().second.push_back(std::move(d));
  }
  return out;
}

Image heatmap(const geo::Grid& grid, std::size_t cell_px) {
  if (cell_px == 0) throw RenderError("cell size must be at least one pixel");
  Image img{grid.cols() * cell_px, grid.rows() * cell_px, {}};
  img.rgb.assign(img.width * img.height * 3, 255);
  const double top = grid.max_height();
  for (std::size_t r = 0; r < grid.rows(); ++r) {
    for (std::size_t c = 0; c < grid.cols(); ++c) {
      const double h = grid.height(r, c);
      if (grid.masked(r, c) || !(h > 0.0) || !(top > 0.0)) continue;
      const auto px = colour(h / top);
      const std::size_t y0 = (grid.rows() - 1 - r) * cell_px;
      for (std::size_t y = y0; y < y0 + cell_px; ++y) {
        for (std::size_t x = c * cell_px; x < (c + 1) * cell_px; ++x) {
          std::copy(px.begin(), px.end(), img.rgb.begin() + static_cast<std::ptrdiff_t>((y * img.width + x) * 3));
        }
      }
    }
  }
  return img;
}

void write_png(const Image& image, const std::filesystem::path& path) {
  if (image.rgb.size() != image.width * image.height * 3 || image.width == 0 || image.height == 0) {
    throw RenderError("image buffer does not match its dimensions");
  }
  std::unique_ptr<std::FILE, FileCloser> file(std::fopen(path.c_str(), "wb"));
  if (!file) throw RenderError("cannot open " + path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw RenderError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw RenderError("libpng failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(image.width), static_cast<png_uint_32>(image.height), 8,
               PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < image.height; ++y) {
    png_write_row(png, const_cast<png_bytep>(image.rgb.data() + y * image.width * 3));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  png_image pi{};
  pi.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&pi, path.c_str())) {
    throw RenderError("cannot read PNG " + path.string() + ": " + pi.message);
  }
  pi.format = PNG_FORMAT_RGB;
  Image img{pi.width, pi.height, std::vector<std::uint8_t>(PNG_IMAGE_SIZE(pi))};
  if (!png_image_finish_read(&pi, nullptr, img.rgb.data(), 0, nullptr)) {
    png_image_free(&pi);
    throw RenderError("cannot decode PNG " + path.string() + ": " + pi.message);
  }
  return img;
}

}  // namespace floodsense::render
