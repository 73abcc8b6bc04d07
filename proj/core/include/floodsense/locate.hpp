#pragma once

// Per-message location inference: geotag fast path, otherwise candidates
// from the location field and the message text are weighted by quality
// (text candidates additionally by r) and the candidate with the largest
// summed weight of intersecting candidates wins.

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "floodsense/corpus.hpp"
#include "floodsense/gazetteer.hpp"

namespace floodsense {

struct InferenceParams {
  double r = 1.0;          // text-candidate weight multiplier, >= 0
  bool keep_all = false;   // emit every positively weighted candidate

  void validate() const;
};

struct InferredLocation {
  geo::GeoShape shape;
  /// +infinity for geotags.
  double weight_sum = 0.0;
  gazetteer::LocationSource source = gazetteer::LocationSource::TextToponym;
  std::string matched_name;
  /// Candidates whose weights were summed (including the winner).
  std::vector<gazetteer::LocationCandidate> contributing;
};

double candidate_weight(const gazetteer::LocationCandidate& c, const InferenceParams& params);

/// Most likely location, or nothing when there is no candidate with positive
/// weight. Ties prefer the smaller area, then the lexicographically smaller
/// matched name.
std::optional<InferredLocation> infer(const Message& message,
                                      std::span<const gazetteer::LocationCandidate> candidates,
                                      const InferenceParams& params);

/// keep_all variant: every candidate with positive weight, scored the same
/// way, in descending score order.
std::vector<InferredLocation> infer_all(const Message& message,
                                        std::span<const gazetteer::LocationCandidate> candidates,
                                        const InferenceParams& params);

struct LocationStats {
  std::size_t messages = 0;
  std::size_t any_location_info = 0;
  std::size_t geotag = 0;
  std::size_t location_field_gps = 0;
  std::size_t location_field_toponym = 0;
  std::size_t text_toponym = 0;
  std::size_t located = 0;
  std::size_t backend_errors = 0;

  std::string to_json() const;
};

/// Candidate generation for one message. Geotagged messages skip the
/// gazetteer entirely.
struct CandidateSet {
  std::vector<gazetteer::LocationCandidate> candidates;
  bool backend_error = false;
};
CandidateSet gather_candidates(const Message& message, const gazetteer::Backend& backend,
                               const gazetteer::ResolveOptions& options = {});

struct LocatedMessage {
  std::string id;
  Timestamp timestamp{};
  std::vector<InferredLocation> locations;  // empty, one, or (keep_all) several
};

struct BatchLocation {
  std::vector<LocatedMessage> messages;  // input order
  LocationStats stats;
};

BatchLocation infer_batch(std::span<const Message> messages, const gazetteer::Backend& backend,
                          const InferenceParams& params, const gazetteer::ResolveOptions& options = {},
                          unsigned threads = 1);

/// Candidates already gathered (e.g. reused across a parameter sweep).
BatchLocation infer_gathered(std::span<const Message> messages, std::span<const CandidateSet> candidates,
                             const InferenceParams& params);

/// One JSON object per line: id, timestamp, geometry, weight_sum (null for
/// geotags), source, matched_name and a per-source breakdown.
std::string located_to_jsonl(const LocatedMessage& m);
LocatedMessage located_from_jsonl(std::string_view line);

}  // namespace floodsense
