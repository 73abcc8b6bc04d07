#include "floodsense/filters.hpp"

#include <algorithm>
#include <map>
#include <sstream>
#include <stdexcept>

#include "floodsense/parallel.hpp"
#include "floodsense/relevance.hpp"
#include "floodsense/text.hpp"
#include "json_util.hpp"

namespace floodsense {
namespace {

template <typename Pred>
std::vector<Message> keep_if(std::vector<Message> messages, Pred&& keep) {
  auto it = std::stable_partition(messages.begin(), messages.end(), keep);
  messages.erase(it, messages.end());
  return messages;
}

}  // namespace

const std::vector<std::string>& default_blocklist() {
  static const std::vector<std::string> phrases{
      "flood with", "flood of",  "flood in",  "flood it", "flooded with", "flooded by", "flooding back",
      "immigrant",  "migrant",   "migration", "market",   "tears",        "flood-hit"};
  return phrases;
}

void FilterConfig::validate() const {
  if (allowed_timezones.empty()) throw std::invalid_argument("allowed_timezones must not be empty");
  if (!(bot_threshold_fraction > 0.0 && bot_threshold_fraction <= 1.0)) {
    throw std::invalid_argument("bot_threshold_fraction must lie in (0, 1]");
  }
  for (const auto& p : blocklist_phrases) {
    if (p.empty()) throw std::invalid_argument("blocklist phrases must be nonempty");
  }
}

std::string FilterTrace::to_csv() const {
  std::ostringstream out;
  out << "stage,remaining\n";
  for (const auto& s : stages) out << s.name << ',' << s.remaining << '\n';
  return out.str();
}

std::string FilterTrace::to_json() const {
  detail::json arr = detail::json::array();
  for (const auto& s : stages) arr.push_back({{"stage", s.name}, {"remaining", s.remaining}});
  return detail::json{{"stages", arr}}.dump();
}

std::vector<Message> timezone_filter(std::vector<Message> messages, const std::set<std::string>& allowed) {
  return keep_if(std::move(messages), [&](const Message& m) {
    if (!m.author_timezone) return false;
    const std::string_view tz = text::trim(*m.author_timezone);
    return allowed.find(std::string(tz)) != allowed.end();
  });
}

std::set<std::string> detect_bots(std::span<const Message> messages, double threshold_fraction) {
  std::set<std::string> bots;
  if (messages.empty()) return bots;
  std::map<std::string_view, std::size_t> counts;
  for (const auto& m : messages) ++counts[m.author_id];
  const double limit = threshold_fraction * static_cast<double>(messages.size());
  for (const auto& [author, n] : counts) {
    if (static_cast<double>(n) > limit) bots.emplace(author);
  }
  return bots;
}

std::vector<Message> bot_filter(std::vector<Message> messages, const std::set<std::string>& authors) {
  if (authors.empty()) return messages;
  return keep_if(std::move(messages), [&](const Message& m) { return authors.find(m.author_id) == authors.end(); });
}

std::vector<Message> retweet_filter(std::vector<Message> messages) {
  return keep_if(std::move(messages),
                 [](const Message& m) { return !m.is_retweet && !looks_like_retweet(m.text); });
}

Blocklist::Blocklist(std::span<const std::string> phrases) {
  phrases_.reserve(phrases.size());
  for (const auto& p : phrases) phrases_.push_back(text::ascii_lower(p));
}

bool Blocklist::matches(std::string_view message_text) const {
  const std::string lower = text::ascii_lower(message_text);
  return std::any_of(phrases_.begin(), phrases_.end(),
                     [&](const std::string& p) { return lower.find(p) != std::string::npos; });
}

std::vector<Message> blocklist_filter(std::vector<Message> messages, std::span<const std::string> phrases) {
  const Blocklist blocklist(phrases);
  return keep_if(std::move(messages), [&](const Message& m) { return !blocklist.matches(m.text); });
}

std::vector<Message> relevance_filter(std::vector<Message> messages, const relevance::NBModel& model,
                                      unsigned threads) {
  std::vector<std::uint8_t> keep(messages.size(), 0);
  parallel_chunks(messages.size(), 4096, threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) keep[i] = model.is_relevant(messages[i].text) ? 1 : 0;
  });
  std::vector<Message> out;
  out.reserve(static_cast<std::size_t>(std::count(keep.begin(), keep.end(), 1)));
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (keep[i]) out.push_back(std::move(messages[i]));
  }
  return out;
}

CascadeResult run_cascade(std::vector<Message> messages, const FilterConfig& config,
                          const relevance::NBModel* classifier, unsigned threads) {
  config.validate();
  CascadeResult result;
  auto& stages = result.trace.stages;
  stages.push_back({"all", messages.size()});

  result.flagged_bots = detect_bots(messages, config.bot_threshold_fraction);
  std::set<std::string> excluded = result.flagged_bots;
  excluded.insert(config.bot_denylist.begin(), config.bot_denylist.end());

  messages = timezone_filter(std::move(messages), config.allowed_timezones);
  stages.push_back({"timezone", messages.size()});
  messages = bot_filter(std::move(messages), excluded);
  stages.push_back({"bot", messages.size()});
  messages = retweet_filter(std::move(messages));
  stages.push_back({"retweet", messages.size()});
  messages = blocklist_filter(std::move(messages), config.blocklist_phrases);
  stages.push_back({"blocklist", messages.size()});
  if (classifier != nullptr) {
    messages = relevance_filter(std::move(messages), *classifier, threads);
    stages.push_back({"relevance", messages.size()});
  }
  result.messages = std::move(messages);
  return result;
}

}  // namespace floodsense
