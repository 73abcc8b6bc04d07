#include "floodsense/locate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "floodsense/parallel.hpp"
#include "json_util.hpp"

namespace floodsense {
namespace {

using detail::json;
using gazetteer::LocationCandidate;
using gazetteer::LocationSource;

struct Scored {
  std::size_t index;
  double score;
  double area;
};

bool nearly_equal(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({std::abs(a), std::abs(b), 1e-300});
}

// Highest score first; ties by smaller area, then name, then input order.
bool better(const Scored& a, const Scored& b, std::span<const LocationCandidate> c) {
  if (!nearly_equal(a.score, b.score)) return a.score > b.score;
  if (a.area != b.area) return a.area < b.area;
  if (c[a.index].matched_name != c[b.index].matched_name) {
    return c[a.index].matched_name < c[b.index].matched_name;
  }
  return a.index < b.index;
}

std::vector<Scored> score_all(std::span<const LocationCandidate> candidates, const InferenceParams& params,
                              std::vector<std::vector<char>>& hits) {
  const std::size_t n = candidates.size();
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = candidate_weight(candidates[i], params);
  hits.assign(n, std::vector<char>(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    hits[i][i] = 1;
    for (std::size_t j = i + 1; j < n; ++j) {
      const char h = geo::intersects(candidates[i].shape, candidates[j].shape) ? 1 : 0;
      hits[i][j] = hits[j][i] = h;
    }
  }
  std::vector<Scored> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(w[i] > 0.0)) continue;
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (hits[i][j]) s += w[j];
    }
    out.push_back({i, s, geo::area_km2(candidates[i].shape)});
  }
  std::sort(out.begin(), out.end(), [&](const Scored& a, const Scored& b) { return better(a, b, candidates); });
  return out;
}

InferredLocation make_location(std::span<const LocationCandidate> candidates, const Scored& s,
                               const std::vector<std::vector<char>>& hits) {
  InferredLocation loc;
  const auto& c = candidates[s.index];
  loc.shape = c.shape;
  loc.weight_sum = s.score;
  loc.source = c.source;
  loc.matched_name = c.matched_name;
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    if (hits[s.index][j]) loc.contributing.push_back(candidates[j]);
  }
  return loc;
}

InferredLocation geotag_location(const Message& m) {
  InferredLocation loc;
  loc.shape = *m.geotag;
  loc.weight_sum = std::numeric_limits<double>::infinity();
  loc.source = LocationSource::Geotag;
  loc.matched_name = "geotag";
  loc.contributing.push_back({*m.geotag, 1.0, LocationSource::Geotag, "geotag"});
  return loc;
}

void count(LocationStats& stats, const Message& m, const CandidateSet& set, const LocatedMessage& out) {
  ++stats.messages;
  bool gps = false, field = false, body = false;
  for (const auto& c : set.candidates) {
    gps |= c.source == LocationSource::LocFieldGPS;
    field |= c.source == LocationSource::LocFieldToponym;
    body |= c.source == LocationSource::TextToponym;
  }
  const bool tagged = m.geotag.has_value();
  stats.geotag += tagged;
  stats.location_field_gps += gps;
  stats.location_field_toponym += field;
  stats.text_toponym += body;
  stats.any_location_info += (tagged || gps || field || body);
  stats.located += !out.locations.empty();
  stats.backend_errors += set.backend_error;
}

}  // namespace

void InferenceParams::validate() const {
  if (!(r >= 0.0) || !std::isfinite(r)) throw std::invalid_argument("r must be a finite nonnegative number");
}

double candidate_weight(const LocationCandidate& c, const InferenceParams& params) {
  return c.source == LocationSource::TextToponym ? c.quality * params.r : c.quality;
}

std::optional<InferredLocation> infer(const Message& message, std::span<const LocationCandidate> candidates,
                                      const InferenceParams& params) {
  if (message.geotag) return geotag_location(message);
  std::vector<std::vector<char>> hits;
  const auto scored = score_all(candidates, params, hits);
  if (scored.empty()) return std::nullopt;
  return make_location(candidates, scored.front(), hits);
}

std::vector<InferredLocation> infer_all(const Message& message, std::span<const LocationCandidate> candidates,
                                        const InferenceParams& params) {
  std::vector<InferredLocation> out;
  if (message.geotag) {
    out.push_back(geotag_location(message));
    return out;
  }
  std::vector<std::vector<char>> hits;
  for (const auto& s : score_all(candidates, params, hits)) out.push_back(make_location(candidates, s, hits));
  return out;
}

CandidateSet gather_candidates(const Message& message, const gazetteer::Backend& backend,
                               const gazetteer::ResolveOptions& options) {
  CandidateSet set;
  if (message.geotag) return set;
  if (message.author_location) {
    auto field = gazetteer::parse_location_field(*message.author_location, backend, options);
    set.backend_error |= field.status == gazetteer::BackendStatus::Unavailable;
    std::move(field.candidates.begin(), field.candidates.end(), std::back_inserter(set.candidates));
  }
  auto body = gazetteer::extract_text_toponyms(message.text, backend, options);
  set.backend_error |= body.status == gazetteer::BackendStatus::Unavailable;
  std::move(body.candidates.begin(), body.candidates.end(), std::back_inserter(set.candidates));
  return set;
}

BatchLocation infer_gathered(std::span<const Message> messages, std::span<const CandidateSet> candidates,
                             const InferenceParams& params) {
  params.validate();
  if (messages.size() != candidates.size()) throw std::invalid_argument("candidate sets do not match messages");
  BatchLocation batch;
  batch.messages.resize(messages.size());
  for (std::size_t i = 0; i < messages.size(); ++i) {
    auto& out = batch.messages[i];
    out.id = messages[i].id;
    out.timestamp = messages[i].timestamp;
    if (params.keep_all) {
      out.locations = infer_all(messages[i], candidates[i].candidates, params);
    } else if (auto loc = infer(messages[i], candidates[i].candidates, params)) {
      out.locations.push_back(std::move(*loc));
    }
    count(batch.stats, messages[i], candidates[i], out);
  }
  return batch;
}

BatchLocation infer_batch(std::span<const Message> messages, const gazetteer::Backend& backend,
                          const InferenceParams& params, const gazetteer::ResolveOptions& options,
                          unsigned threads) {
  params.validate();
  std::vector<CandidateSet> sets(messages.size());
  parallel_chunks(messages.size(), 256, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) sets[i] = gather_candidates(messages[i], backend, options);
  });
  return infer_gathered(messages, sets, params);
}

std::string LocationStats::to_json() const {
  return json{{"messages", messages},
              {"any_location_info", any_location_info},
              {"geotag", geotag},
              {"location_field_gps", location_field_gps},
              {"location_field_toponym", location_field_toponym},
              {"text_toponym", text_toponym},
              {"located", located},
              {"backend_errors", backend_errors}}
      .dump();
}

std::string located_to_jsonl(const LocatedMessage& m) {
  json locs = json::array();
  for (const auto& loc : m.locations) {
    json breakdown = {{"geotag", 0}, {"location_field_gps", 0}, {"location_field_toponym", 0}, {"text_toponym", 0}};
    for (const auto& c : loc.contributing) {
      breakdown[std::string(gazetteer::to_string(c.source))] = breakdown[std::string(gazetteer::to_string(c.source))].get<int>() + 1;
    }
    locs.push_back({{"geometry", detail::geometry_to_json_value(loc.shape)},
                    {"weight_sum", std::isfinite(loc.weight_sum) ? json(loc.weight_sum) : json(nullptr)},
                    {"source", std::string(gazetteer::to_string(loc.source))},
                    {"matched_name", loc.matched_name},
                    {"breakdown", breakdown}});
  }
  return json{{"id", m.id}, {"timestamp", format_timestamp(m.timestamp)}, {"locations", locs}}.dump();
}

LocatedMessage located_from_jsonl(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object() || !j.contains("id") || !j.contains("timestamp") ||
      !j.contains("locations") || !j["locations"].is_array()) {
    throw std::invalid_argument("malformed located-message record");
  }
  LocatedMessage m;
  m.id = j["id"].get<std::string>();
  const auto ts = parse_timestamp(j["timestamp"].get<std::string>());
  if (!ts) throw std::invalid_argument("bad timestamp in located-message record");
  m.timestamp = *ts;
  for (const auto& l : j["locations"]) {
    InferredLocation loc;
    loc.shape = detail::geometry_from_json(l.at("geometry"));
    loc.weight_sum = l.at("weight_sum").is_null() ? std::numeric_limits<double>::infinity()
                                                  : l.at("weight_sum").get<double>();
    const auto src = l.value("source", "text_toponym");
    for (auto s : {LocationSource::Geotag, LocationSource::LocFieldGPS, LocationSource::LocFieldToponym,
                   LocationSource::TextToponym}) {
      if (gazetteer::to_string(s) == src) loc.source = s;
    }
    loc.matched_name = l.value("matched_name", "");
    m.locations.push_back(std::move(loc));
  }
  return m;
}

}  // namespace floodsense
