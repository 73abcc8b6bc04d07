#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "fixtures.hpp"
#include "floodsense/corpus.hpp"

using namespace floodsense;
using fixtures::at;

namespace {

std::string line(const std::string& id, const std::string& created, const std::string& text,
                 const std::string& extra_user = "", const std::string& extra = "") {
  return R"({"id_str":")" + id + R"(","created_at":")" + created + R"(","text":")" + text +
         R"(","user":{"screen_name":"alice")" + extra_user + "}" + extra + "}";
}

}  // namespace

TEST(Corpus, SingleGeotaggedLine) {
  const auto r = ingest_text(line("1", "2015-10-28T10:15:00Z", "flooded outside", "",
                                  R"(,"coordinates":{"type":"Point","coordinates":[-2.93,54.89]})") +
                             "\n");
  ASSERT_EQ(r.messages.size(), 1u);
  EXPECT_EQ(r.report.parsed, 1u);
  EXPECT_EQ(r.report.skipped, 0u);
  const auto& m = r.messages[0];
  EXPECT_EQ(m.text, "flooded outside");
  ASSERT_TRUE(m.geotag.has_value());
  EXPECT_DOUBLE_EQ(m.geotag->lat, 54.89);
  EXPECT_DOUBLE_EQ(m.geotag->lon, -2.93);
  EXPECT_EQ(m.author_id, "alice");
  EXPECT_EQ(m.timestamp, at(2015, 10, 28, 10, 15));
}

TEST(Corpus, EmptyInput) {
  const auto r = ingest_text("");
  EXPECT_TRUE(r.messages.empty());
  EXPECT_EQ(r.report.parsed, 0u);
  EXPECT_EQ(r.report.skipped, 0u);
}

TEST(Corpus, TruncatedLineIsSkippedWithLineNumber) {
  std::string in = line("1", "2015-10-28T10:00:00Z", "a") + "\n" + R"({"id_str":"2","created_at":)" + "\n" +
                   line("3", "2015-10-28T11:00:00Z", "c") + "\n";
  const auto r = ingest_text(in);
  ASSERT_EQ(r.messages.size(), 2u);
  EXPECT_EQ(r.messages[0].id, "1");
  EXPECT_EQ(r.messages[1].id, "3");
  EXPECT_EQ(r.report.skipped, 1u);
  ASSERT_EQ(r.report.diagnostics.size(), 1u);
  EXPECT_EQ(r.report.diagnostics[0].line, 2u);
}

TEST(Corpus, InvalidFieldsAndDuplicatesAreSkipped) {
  std::string in;
  in += line("1", "2015-10-28T10:00:00Z", "ok") + "\n";
  in += line("1", "2015-10-28T10:00:00Z", "dup") + "\n";
  in += line("2", "not a time", "x") + "\n";
  in += line("3", "2015-10-28T10:00:00Z", "bad geo", "",
             R"(,"coordinates":{"type":"Point","coordinates":[10,95]})") + "\n";
  in += R"({"created_at":"2015-10-28T10:00:00Z","text":"no id","user":{"screen_name":"a"}})" "\n";
  in += "\n";
  in += "[1,2]\n";
  const auto r = ingest_text(in);
  EXPECT_EQ(r.messages.size(), 1u);
  EXPECT_EQ(r.report.parsed, 1u);
  EXPECT_EQ(r.report.skipped, 5u);
  const auto json = r.report.to_json();
  EXPECT_NE(json.find("\"skipped\":5"), std::string::npos);
}

TEST(Corpus, UnreadableFileIsAnIoError) {
  EXPECT_THROW(ingest_file("/nonexistent/floodsense/corpus.jsonl"), IoError);
}

TEST(Corpus, UnknownKeysIgnoredAndOptionalFields) {
  const auto r = ingest_text(line("9", "Wed Oct 28 10:15:00 +0000 2015", "hi",
                                  R"(,"time_zone":"London","location":"Cumbria / London","followers":3)",
                                  R"(,"lang":"en","entities":{})") + "\n");
  ASSERT_EQ(r.messages.size(), 1u);
  const auto& m = r.messages[0];
  EXPECT_EQ(m.timestamp, at(2015, 10, 28, 10, 15));
  EXPECT_EQ(m.author_timezone, "London");
  EXPECT_EQ(m.author_location, "Cumbria / London");
  EXPECT_FALSE(m.geotag.has_value());
}

TEST(Corpus, RetweetMarkersAndPrefix) {
  EXPECT_TRUE(looks_like_retweet("RT @x: flooded"));
  EXPECT_FALSE(looks_like_retweet("rt @x: flooded"));
  EXPECT_FALSE(looks_like_retweet("RT this"));
  std::string in = line("1", "2015-10-28T10:00:00Z", "RT @x: flooded") + "\n" +
                   line("2", "2015-10-28T10:00:00Z", "plain", "", R"(,"retweeted_status":{"id":1})") + "\n" +
                   line("3", "2015-10-28T10:00:00Z", "plain", "", R"(,"retweeted":true)") + "\n" +
                   line("4", "2015-10-28T10:00:00Z", "plain") + "\n";
  const auto r = ingest_text(in);
  ASSERT_EQ(r.messages.size(), 4u);
  EXPECT_TRUE(r.messages[0].is_retweet);
  EXPECT_TRUE(r.messages[1].is_retweet);
  EXPECT_TRUE(r.messages[2].is_retweet);
  EXPECT_FALSE(r.messages[3].is_retweet);
}

TEST(Corpus, TimestampFormats) {
  EXPECT_EQ(parse_timestamp("2015-10-28T10:15:00Z"), at(2015, 10, 28, 10, 15));
  EXPECT_EQ(parse_timestamp("2015-10-28T10:15:00.123Z"), at(2015, 10, 28, 10, 15));
  EXPECT_EQ(parse_timestamp("2015-10-28T10:15:00+00:00"), at(2015, 10, 28, 10, 15));
  EXPECT_EQ(parse_timestamp("Wed Oct 28 10:15:00 +0000 2015"), at(2015, 10, 28, 10, 15));
  EXPECT_FALSE(parse_timestamp("2015-13-28T10:15:00Z"));
  EXPECT_FALSE(parse_timestamp("yesterday"));
  EXPECT_EQ(format_timestamp(at(2015, 1, 2, 3, 4, 5)), "2015-01-02T03:04:05Z");
  EXPECT_EQ(format_day(fixtures::day(2015, 12, 5)), "2015-12-05");
  EXPECT_EQ(parse_day("2015-12-05"), fixtures::day(2015, 12, 5));
}

TEST(Corpus, RoundTripIsIdempotent) {
  std::vector<Message> ms;
  auto a = fixtures::msg("a1", "Flooding \"here\" \xE2\x80\x94 Carlisle\n");
  a.geotag = geo::LatLon{54.89, -2.93};
  a.author_location = "Cumbria";
  ms.push_back(a);
  auto b = fixtures::msg("b2", "RT @x: hi", "bob", std::nullopt);
  b.is_retweet = true;
  ms.push_back(b);
  std::string text;
  for (const auto& m : ms) text += to_record(m) + "\n";
  const auto first = ingest_text(text);
  ASSERT_EQ(first.messages, ms);
  std::string again;
  for (const auto& m : first.messages) again += to_record(m) + "\n";
  EXPECT_EQ(again, text);
  EXPECT_EQ(ingest_text(again).messages, ms);
}

TEST(Corpus, StatsEmptyAndSingleBucket) {
  EXPECT_EQ(compute_stats({}).total_count, 0u);
  std::vector<Message> ms(5, fixtures::msg("x", "t", "a"));
  const auto s = compute_stats(ms);
  EXPECT_EQ(s.total_count, 5u);
  ASSERT_EQ(s.per_day_counts.size(), 1u);
  EXPECT_EQ(s.per_day_counts.begin()->second, 5u);
  EXPECT_EQ(s.per_author_counts.at("a"), 5u);
}

TEST(Corpus, StatsSplitAtUtcMidnight) {
  auto a = fixtures::msg("1", "t");
  a.timestamp = at(2015, 10, 28, 23, 59);
  auto b = fixtures::msg("2", "t");
  b.timestamp = at(2015, 10, 29, 0, 1);
  const std::vector<Message> ms{a, b};
  const auto s = compute_stats(ms);
  ASSERT_EQ(s.per_day_counts.size(), 2u);
  EXPECT_EQ(s.per_day_counts.at(fixtures::day(2015, 10, 28)), 1u);
  EXPECT_EQ(s.per_day_counts.at(fixtures::day(2015, 10, 29)), 1u);
}

TEST(Corpus, StatsTotalsAndPermutationInvariance) {
  std::mt19937_64 rng(7);
  std::vector<Message> ms;
  for (int i = 0; i < 300; ++i) {
    auto m = fixtures::msg(std::to_string(i), "t", "u" + std::to_string(rng() % 13));
    m.timestamp = at(2015, 10, 20, 0) + std::chrono::seconds(rng() % (10 * 86400));
    ms.push_back(m);
  }
  const auto s = compute_stats(ms);
  std::size_t days = 0, authors = 0;
  for (const auto& [d, n] : s.per_day_counts) days += n;
  for (const auto& [a, n] : s.per_author_counts) authors += n;
  EXPECT_EQ(days, ms.size());
  EXPECT_EQ(authors, ms.size());
  std::shuffle(ms.begin(), ms.end(), rng);
  const auto t = compute_stats(ms);
  EXPECT_EQ(t.per_day_counts, s.per_day_counts);
  EXPECT_EQ(t.per_author_counts, s.per_author_counts);
}
