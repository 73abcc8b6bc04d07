#pragma once

// Place-name resolution behind a pluggable backend.
//
// A backend answers two questions: "which places are called X?" (lookup,
// the gazetteer role) and "which place names occur in this text?" (annotate,
// the entity-linking role). The bundled FixtureBackend answers both from a
// JSON-lines file; remote services are represented by RemoteServiceBackend,
// which has no network client compiled in.

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "floodsense/geo.hpp"

namespace floodsense::gazetteer {

class GazetteerError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class FeatureClass { Region, Area, City, State, Town, Poi };

std::string_view to_string(FeatureClass fc);
std::optional<FeatureClass> parse_feature_class(std::string_view s);

/// Classes whose polygon (when the backend has one) replaces the point.
bool promotes_to_polygon(FeatureClass fc);

struct GazetteerEntry {
  std::string name;
  std::vector<std::string> aliases;
  std::string country;  // ISO 3166 alpha-2
  FeatureClass feature_class = FeatureClass::Town;
  geo::GeoShape shape;
  double default_score = 1.0;  // (0, 1]
};

using EntryPtr = std::shared_ptr<const GazetteerEntry>;

/// One fixture line. Throws GazetteerError.
GazetteerEntry entry_from_json(std::string_view line);
std::string entry_to_json(const GazetteerEntry& entry);

enum class LocationSource { Geotag, LocFieldGPS, LocFieldToponym, TextToponym };

std::string_view to_string(LocationSource s);

struct LocationCandidate {
  geo::GeoShape shape;
  double quality = 1.0;  // (0, 1]
  LocationSource source = LocationSource::TextToponym;
  std::string matched_name;
};

enum class BackendStatus { Ok, Miss, Unavailable };

struct LookupResult {
  BackendStatus status = BackendStatus::Miss;
  std::vector<EntryPtr> entries;
  std::string error;
};

struct Mention {
  std::size_t begin = 0;  // byte offsets into the annotated text
  std::size_t end = 0;
  std::vector<EntryPtr> entries;
};

struct AnnotateResult {
  BackendStatus status = BackendStatus::Miss;
  std::vector<Mention> mentions;
  std::string error;
};

/// Implementations must tolerate concurrent calls.
class Backend {
 public:
  virtual ~Backend() = default;
  /// Case-insensitive exact name/alias lookup.
  virtual LookupResult lookup(std::string_view query) const = 0;
  /// Place-name mentions in free text.
  virtual AnnotateResult annotate(std::string_view text) const = 0;
};

/// Immutable after construction; lookups are lock-free.
class FixtureBackend final : public Backend {
 public:
  explicit FixtureBackend(std::vector<GazetteerEntry> entries);

  /// Throws GazetteerError naming the first malformed line.
  static FixtureBackend load(const std::filesystem::path& path);
  static FixtureBackend parse(std::istream& in);

  LookupResult lookup(std::string_view query) const override;
  /// Longest match first, left to right, on word-token boundaries.
  AnnotateResult annotate(std::string_view text) const override;

  std::size_t size() const { return entries_.size(); }
  const std::vector<EntryPtr>& entries() const { return entries_; }

 private:
  std::vector<EntryPtr> entries_;
  std::unordered_map<std::string, std::vector<EntryPtr>> by_name_;
  std::size_t max_name_tokens_ = 0;
};

/// Memoises lookups (hits and misses, never outages) and optionally persists
/// them as JSON lines keyed by the normalised query.
class CachingBackend final : public Backend {
 public:
  explicit CachingBackend(std::shared_ptr<const Backend> inner,
                          std::optional<std::filesystem::path> cache_file = std::nullopt);

  LookupResult lookup(std::string_view query) const override;
  AnnotateResult annotate(std::string_view text) const override { return inner_->annotate(text); }

  /// Writes the cache file, if one was configured.
  void flush() const;
  std::size_t cached_queries() const;

 private:
  std::shared_ptr<const Backend> inner_;
  std::optional<std::filesystem::path> cache_file_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::vector<EntryPtr>> cache_;
};

/// Placeholder for the hosted gazetteer and entity-linking services. No
/// network client ships with this library, so every call reports
/// Unavailable; callers exercise their outage handling against it.
class RemoteServiceBackend final : public Backend {
 public:
  struct Endpoints {
    std::string gazetteer_url;
    std::string annotator_url;
    std::string username;
  };
  explicit RemoteServiceBackend(Endpoints endpoints) : endpoints_(std::move(endpoints)) {}

  LookupResult lookup(std::string_view query) const override;
  AnnotateResult annotate(std::string_view text) const override;

 private:
  Endpoints endpoints_;
};

struct ResolveOptions {
  std::set<std::string> countries{"GB"};
};

struct Resolution {
  std::vector<LocationCandidate> candidates;
  BackendStatus status = BackendStatus::Miss;
  std::string error;
  /// Matches found before the country restriction was applied.
  std::size_t raw_matches = 0;
};

/// "lat, lon" with decimal points anywhere in the field, within WGS84 range.
std::optional<geo::LatLon> parse_coordinates(std::string_view field);

/// Location-field resolution: coordinate fast path, then the whole field,
/// then each piece split on ',', '/' or '-'. Only entries from the allowed
/// countries survive; region/area/city/state entries use their polygon.
Resolution parse_location_field(std::string_view field, const Backend& backend,
                                const ResolveOptions& options = {});

/// Text toponyms; one candidate per matching entry, quality = default_score.
Resolution extract_text_toponyms(std::string_view text, const Backend& backend,
                                 const ResolveOptions& options = {});

}  // namespace floodsense::gazetteer
