#include "floodsense/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <stdexcept>
#include <limits>
#include <string_view>
#include <tuple>

namespace floodsense::synthetic {
namespace {

constexpr std::array<std::string_view, 20> kStems{
    "Ash",   "Bram", "Cold", "Dun",  "Elm", "Fern",  "Gold", "Hart", "Ivy",  "Kings",
    "Lang",  "Marsh", "North", "Oak", "Pen", "Red",  "Stan", "Thorn", "Wey", "Yarn"};
constexpr std::array<std::string_view, 9> kTownSuffix{"moor", "dale", "field", "wick", "ford",
                                                      "ton",  "bury", "ham",   "ley"};

constexpr std::array<std::string_view, 8> kImmediate{
    "{} is flooding right now, the river has burst its banks",
    "Water pouring into houses on the high street in {} #flood",
    "Roads under water in {} this morning, avoid the area",
    "Flash flooding near {} station, cars stuck in deep water",
    "Our street in {} is completely under water right now",
    "Fire crews pumping water out of homes in {} tonight #floods",
    "River has overtopped and is rushing through {} town centre",
    "Can't get home, {} bridge is closed because of flooding now"};

constexpr std::array<std::string_view, 10> kOther{
    "Lovely sunny afternoon walking around {}",
    "Great match at {} tonight, what a finish",
    "Traffic is awful in {} again this evening",
    "New cafe opened in {}, excellent coffee",
    "Remembering the floods that hit {} back in 2007",
    "Council meeting in {} next week about flood defence funding",
    "Anyone know a good plumber near {}? Washing machine leaking",
    "Watching the rugby with friends in {}",
    "Insurance premiums in {} still high years after the last flood",
    "Train from {} delayed by twenty minutes again"};

constexpr std::array<std::string_view, 5> kBlocked{
    "I was in floods of tears watching that film", "The market was flooded with copies.",
    "Memories of that summer came flooding back", "Inbox flooded with spam again",
    "Migrant crisis flood-hit towns story on the news"};

constexpr std::array<std::string_view, 3> kHomeZones{"London", "Edinburgh", "UTC"};
constexpr std::array<std::string_view, 4> kAwayZones{"Eastern Time (US & Canada)", "Pacific Time (US & Canada)",
                                                     "Amsterdam", "Sydney"};

std::string fill(std::string_view tmpl, std::string_view place) {
  std::string out(tmpl);
  const auto at = out.find("{}");
  if (at != std::string::npos) out.replace(at, 2, place);
  return out;
}

template <typename Array>
std::string_view pick(std::mt19937_64& rng, const Array& a) {
  return a[uniform_below(rng, a.size())];
}

std::size_t other_county(std::mt19937_64& rng, std::size_t n, const std::set<std::size_t>& avoid) {
  if (avoid.size() >= n) return uniform_below(rng, n);
  for (;;) {
    const auto c = uniform_below(rng, n);
    if (!avoid.count(c)) return c;
  }
}

geo::LatLon jitter(std::mt19937_64& rng, geo::LatLon p, double amount) {
  return {p.lat + (uniform01(rng) * 2.0 - 1.0) * amount, p.lon + (uniform01(rng) * 2.0 - 1.0) * amount};
}

struct MessageFactory {
  const World& world;
  std::mt19937_64& rng;
  const CorpusSpec* spec;
  std::size_t counter = 0;

  Message base(Day day) {
    Message m;
    m.timestamp = Timestamp(day) + std::chrono::seconds(uniform_below(rng, 86400));
    m.author_id = "user" + std::to_string(uniform_below(rng, 1000000));
    const double u = uniform01(rng);
    const double away = spec ? spec->foreign_timezone_fraction : 0.0;
    const double missing = spec ? spec->missing_timezone_fraction : 0.0;
    if (u < away) {
      m.author_timezone = std::string(pick(rng, kAwayZones));
    } else if (u >= away + missing) {
      m.author_timezone = std::string(pick(rng, kHomeZones));
    }
    return m;
  }

  // Location signal for a message about `town`: geotag, field, field with
  // county, or text only.
  void locate(Message& m, const Town& town) {
    const auto u = uniform_below(rng, 20);
    if (u < 5) {
      m.geotag = jitter(rng, town.where, 0.01);
    } else if (u < 12) {
      m.author_location = town.name;
    } else if (u < 16) {
      m.author_location = town.name + ", " + world.counties[town.county].name;
    } else if (u < 18) {
      m.author_location = "somewhere nice";
    }
  }

  const Town& town_in(std::size_t county) {
    const auto ts = world.towns_of(county);
    return world.towns[ts[uniform_below(rng, ts.size())]];
  }
};

}  // namespace

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("uniform_below needs n > 0");
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
  for (;;) {
    const auto v = rng();
    if (v < limit) return v % n;
  }
}

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1p-53; }

std::vector<std::size_t> World::towns_of(std::size_t county) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < towns.size(); ++i) {
    if (towns[i].county == county) out.push_back(i);
  }
  return out;
}

World make_world(const WorldSpec& spec) {
  if (spec.county_rows == 0 || spec.county_cols == 0 || spec.county_rows > spec.grid.rows ||
      spec.county_cols > spec.grid.cols) {
    throw std::invalid_argument("county layout does not fit the grid");
  }
  if (spec.towns_per_county == 0 || spec.towns_per_county > kTownSuffix.size()) {
    throw std::invalid_argument("towns per county must lie in [1, 9]");
  }
  World w;
  w.spec = spec;
  const auto grid = spec.grid.make();
  const std::size_t n = spec.county_rows * spec.county_cols;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t cr = i / spec.county_cols, cc = i % spec.county_cols;
    const std::size_t r0 = grid.rows() * cr / spec.county_rows, r1 = grid.rows() * (cr + 1) / spec.county_rows;
    const std::size_t c0 = grid.cols() * cc / spec.county_cols, c1 = grid.cols() * (cc + 1) / spec.county_cols;
    const geo::BBox box{grid.lat_edge(r0), grid.lat_edge(r1), grid.lon_edge(c0), grid.lon_edge(c1)};
    const std::string stem(kStems[i % kStems.size()]);
    const std::string county = stem + "shire" + (i >= kStems.size() ? " " + std::to_string(i / kStems.size()) : "");
    const double population = 200000.0 + static_cast<double>((i * 7919) % 13) * 150000.0;
    w.counties.push_back({county, geo::make_rectangle(box), population});
    w.gazetteer.push_back({county, {}, "GB", gazetteer::FeatureClass::Area, geo::make_rectangle(box), 1.0});
    for (std::size_t k = 0; k < spec.towns_per_county; ++k) {
      const std::size_t rows = r1 - r0, cols = c1 - c0;
      const std::size_t row = r0 + (k * 5 + 1 + i) % rows, col = c0 + (k * 7 + 2 + i) % cols;
      const auto cell = grid.cell_bounds(row, col);
      const geo::LatLon where{(cell.lat_min + cell.lat_max) / 2, (cell.lon_min + cell.lon_max) / 2};
      std::string name = stem + std::string(kTownSuffix[k]);
      if (i >= kStems.size()) name += " " + std::to_string(i / kStems.size());
      w.towns.push_back({name, i, where});
      w.gazetteer.push_back({name, {}, "GB", gazetteer::FeatureClass::Town, where, 1.0});
    }
  }
  // A namesake abroad, removed by the country restriction.
  if (!w.towns.empty()) {
    w.gazetteer.push_back(
        {w.towns.front().name, {}, "US", gazetteer::FeatureClass::Town, geo::LatLon{40.0, -75.0}, 1.0});
  }
  return w;
}

std::vector<Message> generate_corpus(const World& world, const CorpusSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  MessageFactory make{world, rng, &spec};
  std::vector<Message> out;
  std::vector<std::string> organic_texts;
  for (const auto& day : spec.days) {
    std::set<std::size_t> flooded;
    for (const auto& e : spec.events) {
      if (e.date == day) flooded.insert(e.county);
    }
    const std::size_t first = out.size();
    for (auto county : flooded) {
      for (std::size_t i = 0; i < spec.planted_per_event; ++i) {
        auto m = make.base(day);
        const auto& town = make.town_in(county);
        m.text = fill(pick(rng, kImmediate), town.name);
        make.locate(m, town);
        out.push_back(std::move(m));
      }
    }
    for (std::size_t i = 0; i < spec.background_per_day; ++i) {
      auto m = make.base(day);
      const auto& town = make.town_in(other_county(rng, world.counties.size(), flooded));
      const double u = uniform01(rng);
      if (u < spec.blocklist_fraction) {
        m.text = std::string(pick(rng, kBlocked));
      } else if (u < spec.blocklist_fraction + spec.noise_relevant_fraction) {
        m.text = fill(pick(rng, kImmediate), town.name);
      } else {
        m.text = fill(pick(rng, kOther), town.name);
      }
      make.locate(m, town);
      out.push_back(std::move(m));
    }
    const std::size_t organic = out.size() - first;
    for (std::size_t i = first; i < first + organic; ++i) {
      if (uniform01(rng) < spec.retweet_fraction) {
        auto m = make.base(day);
        m.text = "RT @" + out[i].author_id + ": " + out[i].text;
        m.is_retweet = true;
        m.author_location = out[i].author_location;
        out.push_back(std::move(m));
      }
    }
    for (std::size_t b = 0; b < spec.bots; ++b) {
      const auto count = static_cast<std::size_t>(std::ceil(spec.bot_share * static_cast<double>(organic)));
      const auto& town = make.town_in(other_county(rng, world.counties.size(), flooded));
      for (std::size_t i = 0; i < count; ++i) {
        auto m = make.base(day);
        m.author_id = "alertbot" + std::to_string(b);
        m.author_timezone = "London";
        m.text = "Flood alert: river levels rising fast at " + town.name + " now, gauge " + std::to_string(i);
        m.author_location = town.name;
        out.push_back(std::move(m));
      }
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const Message& a, const Message& b) { return a.timestamp < b.timestamp; });
  for (std::size_t i = 0; i < out.size(); ++i) out[i].id = "syn" + std::to_string(spec.seed) + "-" + std::to_string(i);
  return out;
}

std::vector<evaluate::EventRecord> planted_truth(const World& world, const CorpusSpec& spec) {
  std::vector<evaluate::EventRecord> out;
  for (const auto& e : spec.events) out.push_back({e.date, world.counties.at(e.county).name, e.severity});
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return std::tie(a.date, a.county) < std::tie(b.date, b.county); });
  return out;
}

std::vector<relevance::LabeledExample> generate_training(const World& world, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<relevance::LabeledExample> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& town = world.towns[uniform_below(rng, world.towns.size())];
    if (i % 2 == 0) {
      out.push_back({fill(pick(rng, kImmediate), town.name), relevance::Label::Immediate});
    } else if (uniform_below(rng, 5) == 0) {
      out.push_back({std::string(pick(rng, kBlocked)), relevance::Label::Other});
    } else {
      out.push_back({fill(pick(rng, kOther), town.name), relevance::Label::Other});
    }
  }
  return out;
}

std::vector<Message> generate_stream(const World& world, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  MessageFactory make{world, rng, nullptr};
  std::vector<Message> out;
  out.reserve(n);
  const Day day = std::chrono::sys_days(std::chrono::year{2015} / 10 / 28);
  for (std::size_t i = 0; i < n; ++i) {
    auto m = make.base(day);
    const auto& town = world.towns[uniform_below(rng, world.towns.size())];
    const auto u = uniform_below(rng, 100);
    if (u < 10) {
      m.author_timezone = std::string(pick(rng, kAwayZones));
    } else if (u < 15) {
      m.text = "RT @someone: " + fill(pick(rng, kOther), town.name);
      m.is_retweet = true;
    }
    if (m.text.empty()) {
      if (u < 20) m.text = std::string(pick(rng, kBlocked));
      else if (u < 40) m.text = fill(pick(rng, kImmediate), town.name);
      else m.text = fill(pick(rng, kOther), town.name);
    }
    make.locate(m, town);
    m.id = "s" + std::to_string(i);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace floodsense::synthetic
