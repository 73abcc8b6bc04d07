#pragma once

// Message model and newline-delimited JSON ingestion.
//
// The accepted record layout is a minimal subset of the platform's tweet
// object; see docs/input-schema.md for the frozen field list.

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "floodsense/geo.hpp"

namespace floodsense {

using Timestamp = std::chrono::sys_seconds;
using Day = std::chrono::sys_days;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Message {
  std::string id;
  Timestamp timestamp{};
  std::string text;
  std::string author_id;
  std::optional<std::string> author_timezone;
  std::optional<std::string> author_location;
  std::optional<geo::LatLon> geotag;
  bool is_retweet = false;

  friend bool operator==(const Message&, const Message&) = default;
};

/// True when the text starts with the literal "RT @" (case-sensitive).
bool looks_like_retweet(std::string_view text);

struct IngestDiagnostic {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct IngestReport {
  std::size_t parsed = 0;
  std::size_t skipped = 0;
  std::vector<IngestDiagnostic> diagnostics;

  /// Single JSON object: {"parsed":..,"skipped":..,"diagnostics":[..]}.
  std::string to_json() const;
};

struct IngestResult {
  std::vector<Message> messages;
  IngestReport report;
};

/// Reads newline-delimited records. Malformed lines, invalid fields and
/// duplicate ids are skipped with a line-numbered diagnostic; blank lines are
/// ignored. Output order equals input order.
IngestResult ingest(std::istream& in);
IngestResult ingest_text(std::string_view text);

/// Throws IoError when the file cannot be opened or read.
IngestResult ingest_file(const std::filesystem::path& path);

/// Parses one record; throws std::invalid_argument describing the problem.
Message parse_record(std::string_view line);

/// Serialises a message in the ingest layout (one line, no newline).
std::string to_record(const Message& m);

/// "YYYY-MM-DDTHH:MM:SSZ".
std::string format_timestamp(Timestamp t);
/// "YYYY-MM-DD".
std::string format_day(Day d);
/// Accepts ISO 8601 UTC ("2015-10-28T10:15:00Z", optional fraction, "+00:00")
/// and the platform form "Wed Oct 28 10:15:00 +0000 2015".
std::optional<Timestamp> parse_timestamp(std::string_view s);
std::optional<Day> parse_day(std::string_view s);

inline Day day_of(Timestamp t) { return std::chrono::floor<std::chrono::days>(t); }

struct CorpusStats {
  std::size_t total_count = 0;
  std::map<Day, std::size_t> per_day_counts;
  std::map<std::string, std::size_t> per_author_counts;
};

/// Buckets by UTC calendar day and by author.
CorpusStats compute_stats(std::span<const Message> messages);

}  // namespace floodsense
