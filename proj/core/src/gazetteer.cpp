#include "floodsense/gazetteer.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <regex>
#include <sstream>

#include "floodsense/text.hpp"
#include "json_util.hpp"

namespace floodsense::gazetteer {
namespace {

using detail::json;

struct Token {
  std::size_t begin;
  std::size_t end;
  std::string lower;
};

// Word tokens with byte offsets; mirrors text::word_tokens.
std::vector<Token> tokens_with_offsets(std::string_view s) {
  std::vector<Token> out;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  auto close = [&](std::size_t end) {
    if (start == std::string_view::npos) return;
    out.push_back({start, end, text::ascii_lower(s.substr(start, end - start))});
    start = std::string_view::npos;
  };
  while (pos < s.size()) {
    const auto d = text::decode_utf8(s, pos);
    if (text::is_space(d.code_point) || text::is_punct(d.code_point)) {
      close(pos);
    } else if (start == std::string_view::npos) {
      start = pos;
    }
    pos += d.length;
  }
  close(s.size());
  return out;
}

geo::GeoShape candidate_shape(const GazetteerEntry& e) {
  if (geo::is_point(e.shape)) return e.shape;
  if (promotes_to_polygon(e.feature_class)) return e.shape;
  return geo::centroid(e.shape);
}

void merge_status(Resolution& r, const std::string& error) {
  r.status = BackendStatus::Unavailable;
  if (r.error.empty()) r.error = error;
}

}  // namespace

std::string_view to_string(FeatureClass fc) {
  switch (fc) {
    case FeatureClass::Region: return "region";
    case FeatureClass::Area: return "area";
    case FeatureClass::City: return "city";
    case FeatureClass::State: return "state";
    case FeatureClass::Town: return "town";
    case FeatureClass::Poi: return "poi";
  }
  return "poi";
}

std::optional<FeatureClass> parse_feature_class(std::string_view s) {
  const auto lower = text::ascii_lower(text::trim(s));
  for (auto fc : {FeatureClass::Region, FeatureClass::Area, FeatureClass::City, FeatureClass::State,
                  FeatureClass::Town, FeatureClass::Poi}) {
    if (lower == to_string(fc)) return fc;
  }
  return std::nullopt;
}

bool promotes_to_polygon(FeatureClass fc) {
  return fc == FeatureClass::Region || fc == FeatureClass::Area || fc == FeatureClass::City ||
         fc == FeatureClass::State;
}

std::string_view to_string(LocationSource s) {
  switch (s) {
    case LocationSource::Geotag: return "geotag";
    case LocationSource::LocFieldGPS: return "location_field_gps";
    case LocationSource::LocFieldToponym: return "location_field_toponym";
    case LocationSource::TextToponym: return "text_toponym";
  }
  return "text_toponym";
}

GazetteerEntry entry_from_json(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw GazetteerError("not a JSON object");
  GazetteerEntry e;
  if (!j.contains("name") || !j["name"].is_string() || text::trim(j["name"].get<std::string>()).empty()) {
    throw GazetteerError("missing or empty \"name\"");
  }
  e.name = j["name"].get<std::string>();
  if (j.contains("aliases")) {
    if (!j["aliases"].is_array()) throw GazetteerError("\"aliases\" must be an array");
    for (const auto& a : j["aliases"]) {
      if (!a.is_string() || text::trim(a.get<std::string>()).empty()) {
        throw GazetteerError("aliases must be nonempty strings");
      }
      e.aliases.push_back(a.get<std::string>());
    }
  }
  if (!j.contains("country") || !j["country"].is_string()) throw GazetteerError("missing \"country\"");
  e.country = j["country"].get<std::string>();
  if (!j.contains("feature_class") || !j["feature_class"].is_string()) {
    throw GazetteerError("missing \"feature_class\"");
  }
  const auto fc = parse_feature_class(j["feature_class"].get<std::string>());
  if (!fc) throw GazetteerError("unknown feature_class \"" + j["feature_class"].get<std::string>() + "\"");
  e.feature_class = *fc;
  if (!j.contains("geometry")) throw GazetteerError("missing \"geometry\"");
  try {
    e.shape = detail::geometry_from_json(j["geometry"]);
  } catch (const std::exception& ex) {
    throw GazetteerError(ex.what());
  }
  if (j.contains("default_score")) {
    if (!j["default_score"].is_number()) throw GazetteerError("\"default_score\" must be a number");
    e.default_score = j["default_score"].get<double>();
  }
  if (!(e.default_score > 0.0 && e.default_score <= 1.0)) throw GazetteerError("default_score must lie in (0, 1]");
  return e;
}

std::string entry_to_json(const GazetteerEntry& e) {
  return json{{"name", e.name},
              {"aliases", e.aliases},
              {"country", e.country},
              {"feature_class", std::string(to_string(e.feature_class))},
              {"geometry", detail::geometry_to_json_value(e.shape)},
              {"default_score", e.default_score}}
      .dump();
}

FixtureBackend::FixtureBackend(std::vector<GazetteerEntry> entries) {
  entries_.reserve(entries.size());
  for (auto& e : entries) {
    auto ptr = std::make_shared<const GazetteerEntry>(std::move(e));
    std::set<std::string> keys{text::normalize_name(ptr->name)};
    for (const auto& a : ptr->aliases) keys.insert(text::normalize_name(a));
    for (const auto& k : keys) {
      if (k.empty()) continue;
      by_name_[k].push_back(ptr);
      max_name_tokens_ = std::max<std::size_t>(max_name_tokens_, 1 + std::count(k.begin(), k.end(), ' '));
    }
    entries_.push_back(std::move(ptr));
  }
}

FixtureBackend FixtureBackend::parse(std::istream& in) {
  std::vector<GazetteerEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    try {
      entries.push_back(entry_from_json(line));
    } catch (const GazetteerError& e) {
      throw GazetteerError("gazetteer line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return FixtureBackend(std::move(entries));
}

FixtureBackend FixtureBackend::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw GazetteerError("cannot open gazetteer " + path.string());
  return parse(in);
}

LookupResult FixtureBackend::lookup(std::string_view query) const {
  LookupResult r;
  const auto it = by_name_.find(text::normalize_name(query));
  if (it == by_name_.end()) return r;
  r.status = BackendStatus::Ok;
  r.entries = it->second;
  return r;
}

AnnotateResult FixtureBackend::annotate(std::string_view input) const {
  AnnotateResult r;
  const auto tokens = tokens_with_offsets(input);
  std::string key;
  std::size_t i = 0;
  while (i < tokens.size()) {
    const std::size_t longest = std::min(max_name_tokens_, tokens.size() - i);
    bool matched = false;
    for (std::size_t len = longest; len >= 1; --len) {
      key.clear();
      for (std::size_t k = 0; k < len; ++k) {
        if (k) key.push_back(' ');
        key += tokens[i + k].lower;
      }
      const auto it = by_name_.find(key);
      if (it != by_name_.end()) {
        r.mentions.push_back({tokens[i].begin, tokens[i + len - 1].end, it->second});
        i += len;
        matched = true;
        break;
      }
    }
    if (!matched) ++i;
  }
  r.status = r.mentions.empty() ? BackendStatus::Miss : BackendStatus::Ok;
  return r;
}

CachingBackend::CachingBackend(std::shared_ptr<const Backend> inner, std::optional<std::filesystem::path> cache_file)
    : inner_(std::move(inner)), cache_file_(std::move(cache_file)) {
  if (!cache_file_ || !std::filesystem::exists(*cache_file_)) return;
  std::ifstream in(*cache_file_, std::ios::binary);
  if (!in) throw GazetteerError("cannot open cache " + cache_file_->string());
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("query") || !j.contains("entries") || !j["entries"].is_array()) {
      throw GazetteerError("cache line " + std::to_string(line_no) + ": malformed");
    }
    std::vector<EntryPtr> entries;
    for (const auto& e : j["entries"]) {
      entries.push_back(std::make_shared<const GazetteerEntry>(entry_from_json(e.dump())));
    }
    cache_[j["query"].get<std::string>()] = std::move(entries);
  }
}

LookupResult CachingBackend::lookup(std::string_view query) const {
  const std::string key = text::normalize_name(query);
  {
    std::lock_guard lock(mutex_);
    const auto it = cache_.find(key);
    if (it != cache_.end()) {
      LookupResult r;
      r.status = it->second.empty() ? BackendStatus::Miss : BackendStatus::Ok;
      r.entries = it->second;
      return r;
    }
  }
  LookupResult r = inner_->lookup(query);
  if (r.status != BackendStatus::Unavailable) {
    std::lock_guard lock(mutex_);
    cache_.emplace(key, r.entries);
  }
  return r;
}

void CachingBackend::flush() const {
  if (!cache_file_) return;
  std::lock_guard lock(mutex_);
  std::ofstream out(*cache_file_, std::ios::binary | std::ios::trunc);
  if (!out) throw GazetteerError("cannot write cache " + cache_file_->string());
  for (const auto& [query, entries] : cache_) {
    json arr = json::array();
    for (const auto& e : entries) arr.push_back(json::parse(entry_to_json(*e)));
    out << json{{"query", query}, {"entries", arr}}.dump() << '\n';
  }
}

std::size_t CachingBackend::cached_queries() const {
  std::lock_guard lock(mutex_);
  return cache_.size();
}

LookupResult RemoteServiceBackend::lookup(std::string_view) const {
  LookupResult r;
  r.status = BackendStatus::Unavailable;
  r.error = "no gazetteer client available for " + endpoints_.gazetteer_url;
  return r;
}

AnnotateResult RemoteServiceBackend::annotate(std::string_view) const {
  AnnotateResult r;
  r.status = BackendStatus::Unavailable;
  r.error = "no annotation client available for " + endpoints_.annotator_url;
  return r;
}

std::optional<geo::LatLon> parse_coordinates(std::string_view field) {
  static const std::regex kPair(R"((^|[^\d.\-])(-?\d{1,2}\.\d+)\s*,\s*(-?\d{1,3}\.\d+)(?![\d.]))");
  std::match_results<std::string_view::const_iterator> m;
  if (!std::regex_search(field.begin(), field.end(), m, kPair)) return std::nullopt;
  const double lat = std::stod(m[2].str());
  const double lon = std::stod(m[3].str());
  if (lat < -90.0 || lat > 90.0 || lon < -180.0 || lon > 180.0) return std::nullopt;
  return geo::LatLon{lat, lon};
}

Resolution parse_location_field(std::string_view field, const Backend& backend, const ResolveOptions& options) {
  Resolution r;
  field = text::trim(field);
  if (field.empty()) return r;

  if (const auto p = parse_coordinates(field)) {
    r.status = BackendStatus::Ok;
    r.raw_matches = 1;
    r.candidates.push_back({*p, 1.0, LocationSource::LocFieldGPS, std::string(field)});
    return r;
  }

  auto add = [&](const LookupResult& found) {
    r.raw_matches += found.entries.size();
    for (const auto& e : found.entries) {
      if (!options.countries.contains(e->country)) continue;
      r.candidates.push_back({candidate_shape(*e), e->default_score, LocationSource::LocFieldToponym, e->name});
    }
  };

  const LookupResult whole = backend.lookup(field);
  if (whole.status == BackendStatus::Unavailable) {
    merge_status(r, whole.error);
    return r;
  }
  if (whole.status == BackendStatus::Ok) {
    add(whole);
  } else {
    std::set<std::string> seen;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= field.size(); ++i) {
      if (i < field.size() && field[i] != ',' && field[i] != '/' && field[i] != '-') continue;
      const std::string_view part = text::trim(field.substr(start, i - start));
      start = i + 1;
      const std::string key = text::normalize_name(part);
      if (key.empty() || !seen.insert(key).second) continue;
      const LookupResult found = backend.lookup(part);
      if (found.status == BackendStatus::Unavailable) {
        merge_status(r, found.error);
      } else if (found.status == BackendStatus::Ok) {
        add(found);
      }
    }
  }
  if (r.status != BackendStatus::Unavailable) {
    r.status = r.candidates.empty() ? BackendStatus::Miss : BackendStatus::Ok;
  }
  return r;
}

Resolution extract_text_toponyms(std::string_view input, const Backend& backend, const ResolveOptions& options) {
  Resolution r;
  const AnnotateResult found = backend.annotate(input);
  if (found.status == BackendStatus::Unavailable) {
    merge_status(r, found.error);
    return r;
  }
  for (const auto& mention : found.mentions) {
    r.raw_matches += mention.entries.size();
    for (const auto& e : mention.entries) {
      if (!options.countries.contains(e->country)) continue;
      r.candidates.push_back({e->shape, e->default_score, LocationSource::TextToponym, e->name});
    }
  }
  r.status = r.candidates.empty() ? BackendStatus::Miss : BackendStatus::Ok;
  return r;
}

}  // namespace floodsense::gazetteer
