#pragma once

// Deterministic pre-classifier filter cascade: timezone, bot, retweet and
// phrase blocklist, followed optionally by the relevance classifier.
//
// Every filter takes its input by value and returns the kept subset in input
// order; pass an rvalue to avoid copying the corpus.

#include <cstddef>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "floodsense/corpus.hpp"

namespace floodsense::relevance {
class NBModel;
}

namespace floodsense {

/// The curated phrase list used by default.
const std::vector<std::string>& default_blocklist();

struct FilterConfig {
  std::set<std::string> allowed_timezones{"London", "Edinburgh", "UTC"};
  double bot_threshold_fraction = 0.01;
  std::set<std::string> bot_denylist;
  std::vector<std::string> blocklist_phrases = default_blocklist();

  /// Throws std::invalid_argument when an invariant does not hold.
  void validate() const;
};

struct FilterStage {
  std::string name;
  std::size_t remaining = 0;

  friend bool operator==(const FilterStage&, const FilterStage&) = default;
};

/// Counts after each stage, starting with the unfiltered input ("all").
struct FilterTrace {
  std::vector<FilterStage> stages;

  std::string to_csv() const;
  std::string to_json() const;
};

std::vector<Message> timezone_filter(std::vector<Message> messages, const std::set<std::string>& allowed);

/// Authors whose message count strictly exceeds fraction * total.
std::set<std::string> detect_bots(std::span<const Message> messages, double threshold_fraction);

std::vector<Message> bot_filter(std::vector<Message> messages, const std::set<std::string>& authors);

std::vector<Message> retweet_filter(std::vector<Message> messages);

/// Case-insensitive substring matcher over raw text.
class Blocklist {
 public:
  explicit Blocklist(std::span<const std::string> phrases);
  bool matches(std::string_view text) const;

 private:
  std::vector<std::string> phrases_;
};

std::vector<Message> blocklist_filter(std::vector<Message> messages, std::span<const std::string> phrases);

/// Keeps messages the classifier labels Immediate.
std::vector<Message> relevance_filter(std::vector<Message> messages, const relevance::NBModel& model,
                                      unsigned threads = 1);

struct CascadeResult {
  std::vector<Message> messages;
  FilterTrace trace;
  std::set<std::string> flagged_bots;
};

/// timezone -> bot -> retweet -> blocklist [-> relevance when a model is
/// given]. Bots are detected from the volume of the whole input batch and
/// merged with the configured denylist.
CascadeResult run_cascade(std::vector<Message> messages, const FilterConfig& config,
                          const relevance::NBModel* classifier = nullptr, unsigned threads = 1);

}  // namespace floodsense
