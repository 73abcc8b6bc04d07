#pragma once

// Shared builders for unit and acceptance tests.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "floodsense/corpus.hpp"
#include "floodsense/gazetteer.hpp"
#include "floodsense/geo.hpp"

namespace fixtures {

using namespace floodsense;

inline geo::Polygon rect(double lat0, double lat1, double lon0, double lon1) {
  return geo::make_rectangle({lat0, lat1, lon0, lon1});
}

inline Timestamp at(int y, unsigned m, unsigned d, int hh = 12, int mm = 0, int ss = 0) {
  using namespace std::chrono;
  return sys_days(year(y) / month(m) / day(d)) + hours(hh) + minutes(mm) + seconds(ss);
}

inline Day day(int y, unsigned m, unsigned d) {
  using namespace std::chrono;
  return sys_days(year(y) / month(m) / std::chrono::day(d));
}

inline Message msg(std::string id, std::string text, std::string author = "u1",
                   std::optional<std::string> tz = std::string("London")) {
  Message m;
  m.id = std::move(id);
  m.timestamp = at(2015, 10, 28);
  m.text = std::move(text);
  m.author_id = std::move(author);
  m.author_timezone = std::move(tz);
  return m;
}

inline gazetteer::GazetteerEntry entry(std::string name, std::string country, gazetteer::FeatureClass fc,
                                       geo::GeoShape shape, double score = 1.0,
                                       std::vector<std::string> aliases = {}) {
  gazetteer::GazetteerEntry e;
  e.name = std::move(name);
  e.aliases = std::move(aliases);
  e.country = std::move(country);
  e.feature_class = fc;
  e.shape = std::move(shape);
  e.default_score = score;
  return e;
}

/// Cumbria and London as rough rectangles, Carlisle as a point in Cumbria.
inline std::vector<gazetteer::GazetteerEntry> carlisle_entries() {
  using gazetteer::FeatureClass;
  return {
      entry("Cumbria", "GB", FeatureClass::Area, rect(54.0, 55.2, -3.7, -2.2)),
      entry("London", "GB", FeatureClass::City, rect(51.28, 51.70, -0.51, 0.33), 1.0, {"Ldn"}),
      entry("Carlisle", "GB", FeatureClass::Town, geo::LatLon{54.89, -2.93}),
  };
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("floodsense-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& content) {
  std::ofstream out(p, std::ios::binary);
  out << content;
}

}  // namespace fixtures

#include <array>
#include <cmath>
#include <map>

#include "floodsense/relevance.hpp"

namespace fixtures {

/// Independent multinomial naive Bayes for whitespace-separated lowercase
/// tokens: explicit feature enumeration, counts and normalised log posterior.
struct NbOracle {
  std::array<double, 2> log_posterior{};
};

inline std::vector<std::string> oracle_features(const std::string& text) {
  std::vector<std::string> toks;
  std::istringstream in(text);
  for (std::string t; in >> t;) toks.push_back(t);
  std::vector<std::string> out = toks;
  for (std::size_t i = 0; i + 1 < toks.size(); ++i) out.push_back(toks[i] + " " + toks[i + 1]);
  return out;
}

inline NbOracle nb_oracle(const std::vector<relevance::LabeledExample>& train, const std::string& query,
                          double smoothing) {
  std::array<double, 2> docs{};
  std::array<double, 2> total{};
  std::map<std::string, std::array<double, 2>> counts;
  for (const auto& ex : train) {
    const int c = ex.label == relevance::Label::Immediate ? 1 : 0;
    docs[c] += 1;
    for (const auto& f : oracle_features(ex.text)) {
      counts[f][c] += 1;
      total[c] += 1;
    }
  }
  const double v = static_cast<double>(counts.size());
  std::array<double, 2> joint{};
  for (int c = 0; c < 2; ++c) {
    double p = docs[c] / (docs[0] + docs[1]);
    double logp = std::log(p);
    for (const auto& f : oracle_features(query)) {
      auto it = counts.find(f);
      if (it == counts.end()) continue;
      logp += std::log((it->second[c] + smoothing) / (total[c] + smoothing * v));
    }
    joint[c] = logp;
  }
  const double m = std::max(joint[0], joint[1]);
  const double lse = m + std::log(std::exp(joint[0] - m) + std::exp(joint[1] - m));
  return {{joint[0] - lse, joint[1] - lse}};
}

/// Random corpus of at most 6 examples over at most 6 tokens, both classes present.
inline std::vector<relevance::LabeledExample> tiny_corpus(std::mt19937_64& rng) {
  static const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f"};
  const std::size_t tokens = 1 + rng() % 6;
  const std::size_t n = 2 + rng() % 5;
  std::vector<relevance::LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    const std::size_t len = 1 + rng() % 6;
    for (std::size_t j = 0; j < len; ++j) {
      if (j) text += ' ';
      text += vocab[rng() % tokens];
    }
    relevance::Label label = i == 0 ? relevance::Label::Immediate
                             : i == 1 ? relevance::Label::Other
                                      : (rng() % 2 ? relevance::Label::Immediate : relevance::Label::Other);
    out.push_back({text, label});
  }
  return out;
}

inline std::string tiny_query(std::mt19937_64& rng) {
  static const std::vector<std::string> vocab{"a", "b", "c", "d", "e", "f", "g"};
  std::string q;
  const std::size_t len = rng() % 7;
  for (std::size_t j = 0; j < len; ++j) {
    if (j) q += ' ';
    q += vocab[rng() % vocab.size()];
  }
  return q;
}

/// Disjoint class vocabularies; alternating labels.
inline std::vector<relevance::LabeledExample> separable_corpus(std::size_t n, std::uint64_t seed) {
  static const std::vector<std::string> imm{"flooded", "water", "underwater", "submerged", "torrent", "deluge"};
  static const std::vector<std::string> oth{"football", "coffee", "music", "weekend", "shopping", "movie"};
  std::mt19937_64 rng(seed);
  std::vector<relevance::LabeledExample> out;
  for (std::size_t i = 0; i < n; ++i) {
    const bool pos = i % 2 == 0;
    const auto& v = pos ? imm : oth;
    std::string text;
    for (std::size_t j = 0; j < 3 + rng() % 4; ++j) {
      if (j) text += ' ';
      text += v[rng() % v.size()];
    }
    out.push_back({text, pos ? relevance::Label::Immediate : relevance::Label::Other});
  }
  return out;
}

}  // namespace fixtures

#include "floodsense/evaluate.hpp"
#include "floodsense/filters.hpp"
#include "floodsense/synthetic.hpp"

namespace fixtures {

/// Three synthetic days, one planted county per day, run through the full
/// filter cascade and classifier.
struct PlantedScenario {
  synthetic::World world;
  synthetic::CorpusSpec spec;
  std::vector<Message> corpus;
  std::vector<evaluate::SweepDay> days;
  evaluate::SweepSetup setup;
  evaluate::RegionRegistry registry;
  std::shared_ptr<gazetteer::FixtureBackend> backend;
};

inline PlantedScenario planted_scenario(std::uint64_t seed = 42, unsigned threads = 1) {
  PlantedScenario s;
  s.world = synthetic::make_world();
  s.spec.seed = seed;
  s.spec.days = {day(2015, 10, 28), day(2015, 10, 29), day(2015, 10, 30)};
  s.spec.events = {{s.spec.days[0], 3, evaluate::Severity::Minor},
                   {s.spec.days[1], 8, evaluate::Severity::Significant},
                   {s.spec.days[2], 13, evaluate::Severity::Severe}};
  s.corpus = synthetic::generate_corpus(s.world, s.spec);
  const auto training = synthetic::generate_training(s.world, 2000, seed + 1);
  const auto model = relevance::NBModel::train(training);
  auto filtered = run_cascade(s.corpus, FilterConfig{}, &model, threads).messages;
  const auto truth = synthetic::planted_truth(s.world, s.spec);
  for (const auto& d : s.spec.days) {
    evaluate::SweepDay sd;
    sd.date = d;
    for (const auto& m : filtered) {
      if (day_of(m.timestamp) == d) sd.messages.push_back(m);
    }
    for (const auto& t : truth) {
      if (t.date == d) sd.truth.push_back(t);
    }
    s.days.push_back(std::move(sd));
  }
  s.setup.grid = s.world.spec.grid;
  s.setup.population = detect::rasterize_population(s.world.spec.grid.make(), s.world.counties);
  s.setup.counties = s.world.counties;
  s.setup.threads = threads;
  s.registry = evaluate::RegionRegistry::from_regions(s.world.counties);
  s.backend = std::make_shared<gazetteer::FixtureBackend>(s.world.gazetteer);
  return s;
}

inline evaluate::ParamGrid reference_grid() {
  evaluate::ParamGrid g;
  g.r = {0.0, 0.5, 1.0, 2.0};
  g.alpha = {0.0, 0.15, 0.35, 0.4};
  g.threshold = {0.075, 0.1, 0.25, 0.5};
  g.modes = {detect::FloodinessMode::Relative, detect::FloodinessMode::Absolute};
  return g;
}

}  // namespace fixtures
