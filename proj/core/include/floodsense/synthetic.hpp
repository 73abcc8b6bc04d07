#pragma once

// Deterministic synthetic inputs: a county/town world aligned with the
// floodiness grid, message corpora with planted flood clusters, labelled
// training text and flood records. Used by tests, benchmarks and `synth`.

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "floodsense/corpus.hpp"
#include "floodsense/detect.hpp"
#include "floodsense/evaluate.hpp"
#include "floodsense/gazetteer.hpp"
#include "floodsense/geojson.hpp"
#include "floodsense/relevance.hpp"

namespace floodsense::synthetic {

/// Unbiased integer in [0, n) from a 64-bit engine, independent of the
/// standard library's distribution implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n);
double uniform01(std::mt19937_64& rng);

struct WorldSpec {
  detect::GridSpec grid;
  std::size_t county_rows = 4;
  std::size_t county_cols = 4;
  std::size_t towns_per_county = 3;
};

struct Town {
  std::string name;
  std::size_t county = 0;
  geo::LatLon where;
};

struct World {
  WorldSpec spec;
  std::vector<Region> counties;  // rectangles on grid-cell edges, with population
  std::vector<Town> towns;
  std::vector<gazetteer::GazetteerEntry> gazetteer;

  std::vector<std::size_t> towns_of(std::size_t county) const;
};

/// Needs county_rows <= grid rows and county_cols <= grid cols.
World make_world(const WorldSpec& spec = {});

struct PlantedEvent {
  Day date{};
  std::size_t county = 0;
  evaluate::Severity severity = evaluate::Severity::Significant;
};

struct CorpusSpec {
  std::uint64_t seed = 42;
  std::vector<Day> days;
  std::vector<PlantedEvent> events;
  std::size_t planted_per_event = 50;
  std::size_t background_per_day = 500;
  double foreign_timezone_fraction = 0.10;
  double missing_timezone_fraction = 0.05;
  double retweet_fraction = 0.05;
  double blocklist_fraction = 0.05;
  double noise_relevant_fraction = 0.02;  // flood talk scattered over other counties
  std::size_t bots = 2;
  double bot_share = 0.03;                // of each day's organic volume, per bot
};

/// Messages sorted by timestamp, ids unique.
std::vector<Message> generate_corpus(const World& world, const CorpusSpec& spec);

std::vector<evaluate::EventRecord> planted_truth(const World& world, const CorpusSpec& spec);

/// Balanced Immediate / Other examples.
std::vector<relevance::LabeledExample> generate_training(const World& world, std::size_t n, std::uint64_t seed);

/// High-volume stream for throughput work: mostly clean, UK-timezone
/// messages with a realistic mix of chatter and flood reports.
std::vector<Message> generate_stream(const World& world, std::size_t n, std::uint64_t seed);

}  // namespace floodsense::synthetic
