#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "floodsense/filters.hpp"
#include "floodsense/relevance.hpp"

using namespace floodsense;
using fixtures::msg;

namespace {

std::vector<std::string> ids(const std::vector<Message>& ms) {
  std::vector<std::string> out;
  for (const auto& m : ms) out.push_back(m.id);
  return out;
}

}  // namespace

TEST(Filters, DefaultBlocklistIsTheCuratedList) {
  const std::vector<std::string> expected{"flood with",    "flood of",      "flood in", "flood it",
                                          "flooded with",  "flooded by",    "flooding back", "immigrant",
                                          "migrant",       "migration",     "market",   "tears",
                                          "flood-hit"};
  auto got = default_blocklist();
  auto want = expected;
  std::sort(got.begin(), got.end());
  std::sort(want.begin(), want.end());
  EXPECT_EQ(got, want);
}

TEST(Filters, Timezone) {
  const std::set<std::string> allowed{"London", "Edinburgh", "UTC"};
  std::vector<Message> ms{msg("1", "a", "u", "London"), msg("2", "a", "u", std::nullopt),
                          msg("3", "a", "u", "Casablanca"), msg("4", "a", "u", "  Edinburgh ")};
  EXPECT_EQ(ids(timezone_filter(ms, allowed)), (std::vector<std::string>{"1", "4"}));
}

TEST(Filters, DetectBots) {
  std::vector<Message> ms;
  for (int i = 0; i < 15; ++i) ms.push_back(msg("b" + std::to_string(i), "t", "bot"));
  for (int i = 0; i < 985; ++i) ms.push_back(msg("h" + std::to_string(i), "t", "h" + std::to_string(i % 200)));
  EXPECT_EQ(detect_bots(ms, 0.01), (std::set<std::string>{"bot"}));
  // exactly at the threshold is not a bot: 10 of 1000
  ms.erase(ms.begin(), ms.begin() + 5);
  ms.push_back(msg("x", "t", "filler"));
  ms.push_back(msg("y", "t", "filler2"));
  ms.push_back(msg("z", "t", "filler3"));
  ms.push_back(msg("w", "t", "filler4"));
  ms.push_back(msg("v", "t", "filler5"));
  ASSERT_EQ(ms.size(), 1000u);
  EXPECT_TRUE(detect_bots(ms, 0.01).empty());
  EXPECT_TRUE(detect_bots({}, 0.01).empty());
}

TEST(Filters, BotFilterUnion) {
  std::vector<Message> ms{msg("1", "t", "a"), msg("2", "t", "b"), msg("3", "t", "a"), msg("4", "t", "c")};
  EXPECT_EQ(ids(bot_filter(ms, {"a"})), (std::vector<std::string>{"2", "4"}));
  EXPECT_EQ(ids(bot_filter(ms, {})), ids(ms));
  FilterConfig cfg;
  cfg.allowed_timezones = {"London"};
  cfg.bot_threshold_fraction = 0.4;  // a has 2 of 4 > 1.6
  cfg.bot_denylist = {"a", "c"};
  cfg.blocklist_phrases = {"zzz"};
  const auto r = run_cascade(ms, cfg);
  EXPECT_EQ(ids(r.messages), (std::vector<std::string>{"2"}));
  EXPECT_EQ(r.flagged_bots, (std::set<std::string>{"a"}));
}

TEST(Filters, Retweets) {
  auto rt = msg("1", "anything");
  rt.is_retweet = true;
  std::vector<Message> ms{rt, msg("2", "RT @x: flooded"), msg("3", "original")};
  EXPECT_EQ(ids(retweet_filter(ms)), (std::vector<std::string>{"3"}));
}

TEST(Filters, BlocklistExamples) {
  std::vector<Message> ms{msg("1", "I was in floods of tears"), msg("2", "The market was flooded with copies."),
                          msg("3", "It is flooded outside.")};
  EXPECT_EQ(ids(blocklist_filter(ms, default_blocklist())), (std::vector<std::string>{"3"}));
  const Blocklist b(default_blocklist());
  EXPECT_TRUE(b.matches("FLOOD-HIT town"));
  EXPECT_TRUE(b.matches("Migrants"));
  EXPECT_FALSE(b.matches("flooding on the A66"));
}

TEST(Filters, BlocklistCaseInvariance) {
  std::vector<std::string> upper;
  for (auto p : default_blocklist()) {
    std::transform(p.begin(), p.end(), p.begin(), [](unsigned char c) { return std::toupper(c); });
    upper.push_back(p);
  }
  std::vector<Message> ms{msg("1", "Flood In the valley"), msg("2", "flooded road"), msg("3", "TEARS"),
                          msg("4", "roads flooded by rain")};
  EXPECT_EQ(ids(blocklist_filter(ms, upper)), ids(blocklist_filter(ms, default_blocklist())));
}

TEST(Filters, ConfigValidation) {
  FilterConfig c;
  EXPECT_NO_THROW(c.validate());
  c.allowed_timezones.clear();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FilterConfig{};
  c.bot_threshold_fraction = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c.bot_threshold_fraction = 1.5;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = FilterConfig{};
  c.blocklist_phrases.push_back("");
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Filters, EmptyCascadeHasZeroTrace) {
  const auto r = run_cascade({}, FilterConfig{});
  ASSERT_EQ(r.trace.stages.size(), 5u);
  for (const auto& s : r.trace.stages) EXPECT_EQ(s.remaining, 0u);
  EXPECT_EQ(r.trace.stages[0].name, "all");
}

// 100 messages of known composition, counted by hand:
//   10 unset timezone, 10 foreign timezone           -> 80 after timezone
//   bot "spam" writes 12 of the 100 (> 1%), all UK  -> 68 after bot
//   8 retweets (4 flagged, 4 by "RT @" prefix)      -> 60 after retweet
//   9 blocklisted texts                              -> 51 after blocklist
TEST(Filters, HundredMessageFixture) {
  std::vector<Message> ms;
  int n = 0;
  auto add = [&](std::string text, std::string author, std::optional<std::string> tz, bool rt = false) {
    auto m = msg("m" + std::to_string(n++), std::move(text), std::move(author), std::move(tz));
    m.is_retweet = rt;
    ms.push_back(m);
  };
  for (int i = 0; i < 10; ++i) add("flooded street", "p" + std::to_string(i), std::nullopt);
  for (int i = 0; i < 10; ++i) add("flooded street", "q" + std::to_string(i), "Casablanca");
  for (int i = 0; i < 12; ++i) add("River level alert", "spam", "UTC");
  for (int i = 0; i < 4; ++i) add("flooded street", "r" + std::to_string(i), "London", true);
  for (int i = 0; i < 4; ++i) add("RT @someone: flooded street", "s" + std::to_string(i), "London");
  for (int i = 0; i < 9; ++i) add("a flood of tears " + std::to_string(i), "t" + std::to_string(i), "Edinburgh");
  for (int i = 0; i < 51; ++i) add("it is flooded outside", "v" + std::to_string(i), "London");
  ASSERT_EQ(ms.size(), 100u);
  std::mt19937_64 rng(3);
  std::shuffle(ms.begin(), ms.end(), rng);
  const auto r = run_cascade(ms, FilterConfig{});
  std::vector<std::size_t> counts;
  for (const auto& s : r.trace.stages) counts.push_back(s.remaining);
  EXPECT_EQ(counts, (std::vector<std::size_t>{100, 80, 68, 60, 51}));
  EXPECT_EQ(r.flagged_bots, (std::set<std::string>{"spam"}));
  EXPECT_EQ(r.trace.to_csv(), "stage,remaining\nall,100\ntimezone,80\nbot,68\nretweet,60\nblocklist,51\n");
  // subset operation preserving input order
  std::size_t pos = 0;
  for (const auto& kept : r.messages) {
    while (pos < ms.size() && ms[pos].id != kept.id) ++pos;
    ASSERT_LT(pos, ms.size());
  }
}

TEST(Filters, IdempotentAndOrderPreserving) {
  std::mt19937_64 rng(11);
  const std::vector<std::string> texts{"flooded outside", "flood of tears", "RT @a: x", "market day", "rain"};
  const std::vector<std::optional<std::string>> tzs{"London", std::nullopt, "UTC", "Paris"};
  std::vector<Message> ms;
  for (int i = 0; i < 400; ++i) {
    auto m = msg(std::to_string(i), texts[rng() % texts.size()], "a" + std::to_string(rng() % 5), tzs[rng() % 4]);
    m.is_retweet = rng() % 10 == 0;
    ms.push_back(m);
  }
  const std::set<std::string> allowed{"London", "UTC"};
  const std::set<std::string> bots{"a1"};
  const auto tz = timezone_filter(ms, allowed);
  EXPECT_EQ(timezone_filter(tz, allowed), tz);
  const auto bf = bot_filter(ms, bots);
  EXPECT_EQ(bot_filter(bf, bots), bf);
  const auto rf = retweet_filter(ms);
  EXPECT_EQ(retweet_filter(rf), rf);
  const auto bl = blocklist_filter(ms, default_blocklist());
  EXPECT_EQ(blocklist_filter(bl, default_blocklist()), bl);
  for (const auto* out : {&tz, &bf, &rf, &bl}) {
    EXPECT_TRUE(std::is_sorted(out->begin(), out->end(),
                               [](const Message& a, const Message& b) { return std::stoi(a.id) < std::stoi(b.id); }));
  }
  const auto c = run_cascade(ms, FilterConfig{});
  for (std::size_t i = 1; i < c.trace.stages.size(); ++i) {
    EXPECT_LE(c.trace.stages[i].remaining, c.trace.stages[i - 1].remaining);
  }
}

TEST(Filters, PartitionParallelMatchesWhole) {
  std::vector<Message> ms;
  std::mt19937_64 rng(5);
  const std::vector<std::string> texts{"flooded outside", "flood in town", "RT @a: x", "migrant boat", "rain"};
  for (int i = 0; i < 1000; ++i) {
    ms.push_back(msg(std::to_string(i), texts[rng() % texts.size()], "a" + std::to_string(rng() % 50),
                     rng() % 4 ? std::optional<std::string>("London") : std::nullopt));
  }
  const auto bots = detect_bots(ms, 0.01);
  auto stage = [&](std::vector<Message> v) {
    return blocklist_filter(retweet_filter(bot_filter(timezone_filter(std::move(v), {"London"}), bots)),
                            default_blocklist());
  };
  const auto whole = stage(ms);
  std::vector<Message> joined;
  for (std::size_t lo = 0; lo < ms.size(); lo += 137) {
    std::vector<Message> part(ms.begin() + static_cast<std::ptrdiff_t>(lo),
                              ms.begin() + static_cast<std::ptrdiff_t>(std::min(ms.size(), lo + 137)));
    auto out = stage(std::move(part));
    joined.insert(joined.end(), out.begin(), out.end());
  }
  EXPECT_EQ(joined, whole);
}

TEST(Filters, RelevanceStageAndThreads) {
  std::vector<relevance::LabeledExample> train{{"flooded street outside now", relevance::Label::Immediate},
                                              {"water everywhere flooded road", relevance::Label::Immediate},
                                              {"nice weather today", relevance::Label::Other},
                                              {"watching football tonight", relevance::Label::Other}};
  const auto model = relevance::NBModel::train(train);
  std::vector<Message> ms;
  for (int i = 0; i < 3000; ++i) {
    ms.push_back(msg(std::to_string(i), i % 3 ? "flooded road outside" : "football weather tonight", "u" + std::to_string(i)));
  }
  const auto one = relevance_filter(ms, model, 1);
  const auto four = relevance_filter(ms, model, 4);
  EXPECT_EQ(one, four);
  EXPECT_EQ(one.size(), 2000u);
  const auto r = run_cascade(ms, FilterConfig{}, &model, 3);
  ASSERT_EQ(r.trace.stages.size(), 6u);
  EXPECT_EQ(r.trace.stages.back().name, "relevance");
  EXPECT_EQ(r.trace.stages.back().remaining, 2000u);
}
