#include <benchmark/benchmark.h>

#include <random>

#include "floodsense/detect.hpp"
#include "floodsense/synthetic.hpp"

using namespace floodsense;

namespace {

std::vector<geo::GeoShape> shapes(std::size_t n, bool points) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> lat(50.5, 55.0), lon(-5.5, 1.0), size(0.01, 0.5);
  std::vector<geo::GeoShape> out;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = lat(rng), o = lon(rng);
    if (points) {
      out.push_back(geo::LatLon{a, o});
    } else {
      const double s = size(rng);
      out.push_back(geo::make_rectangle({a, a + s, o, o + s}));
    }
  }
  return out;
}

void BM_AccumulatePoints(benchmark::State& state) {
  const auto s = shapes(100'000, true);
  for (auto _ : state) {
    auto g = geo::make_grid(geo::kEnglandWales, 64, 64);
    benchmark::DoNotOptimize(detect::accumulate(g, s, static_cast<unsigned>(state.range(0))).mass);
  }
  state.SetItemsProcessed(state.iterations() * 100'000);
}
BENCHMARK(BM_AccumulatePoints)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_AccumulatePolygons(benchmark::State& state) {
  const auto s = shapes(10'000, false);
  for (auto _ : state) {
    auto g = geo::make_grid(geo::kEnglandWales, 64, 64);
    benchmark::DoNotOptimize(detect::accumulate(g, s, static_cast<unsigned>(state.range(0))).mass);
  }
  state.SetItemsProcessed(state.iterations() * 10'000);
}
BENCHMARK(BM_AccumulatePolygons)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ScaleAndDeclare(benchmark::State& state) {
  const auto world = synthetic::make_world();
  const auto base = world.spec.grid.make();
  const auto raster = detect::rasterize_population(base, world.counties);
  const detect::CountyOverlay overlay(base, world.counties);
  auto raw = base;
  detect::accumulate(raw, shapes(10'000, true));
  detect::DetectParams p;
  for (auto _ : state) {
    const auto scaled = detect::scale_grid(raw, raster, p);
    benchmark::DoNotOptimize(detect::declare_counties(scaled.grid, overlay, p.threshold).size());
  }
}
BENCHMARK(BM_ScaleAndDeclare);

}  // namespace
