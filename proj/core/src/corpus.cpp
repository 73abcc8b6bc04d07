#include "floodsense/corpus.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "floodsense/text.hpp"
#include "json_util.hpp"

namespace floodsense {
namespace {

using detail::json;
using namespace std::chrono;

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

std::optional<Timestamp> make_time(int y, int mo, int d, int h, int mi, int s, int offset_minutes) {
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h < 0 || h > 23 || mi < 0 || mi > 59 || s < 0 || s > 60) return std::nullopt;
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{s} - minutes{offset_minutes};
}

// "+0000", "+00:00", "Z" or empty (UTC).
std::optional<int> parse_offset(std::string_view z) {
  if (z.empty() || z == "Z" || z == "z") return 0;
  if (z.size() != 5 && z.size() != 6) return std::nullopt;
  if (z[0] != '+' && z[0] != '-') return std::nullopt;
  int hh = 0, mm = 0;
  if (!parse_int(z.substr(1, 2), hh)) return std::nullopt;
  const std::string_view rest = z.size() == 6 ? z.substr(4, 2) : z.substr(3, 2);
  if (z.size() == 6 && z[3] != ':') return std::nullopt;
  if (!parse_int(rest, mm) || hh > 23 || mm > 59) return std::nullopt;
  const int total = hh * 60 + mm;
  return z[0] == '-' ? -total : total;
}

std::optional<Timestamp> parse_iso(std::string_view s) {
  // YYYY-MM-DDTHH:MM:SS[.fff][zone]
  if (s.size() < 19 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  int y, mo, d, h, mi, sec;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d) ||
      !parse_int(s.substr(11, 2), h) || !parse_int(s.substr(14, 2), mi) || !parse_int(s.substr(17, 2), sec)) {
    return std::nullopt;
  }
  std::string_view rest = s.substr(19);
  if (!rest.empty() && rest[0] == '.') {
    std::size_t i = 1;
    while (i < rest.size() && rest[i] >= '0' && rest[i] <= '9') ++i;
    if (i == 1) return std::nullopt;
    rest = rest.substr(i);
  }
  const auto offset = parse_offset(rest);
  if (!offset) return std::nullopt;
  return make_time(y, mo, d, h, mi, sec, *offset);
}

std::optional<Timestamp> parse_platform(std::string_view s) {
  // Www Mmm DD HH:MM:SS +ZZZZ YYYY
  static constexpr std::array<std::string_view, 12> kMonths{"Jan", "Feb", "Mar", "Apr", "May", "Jun",
                                                            "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"};
  std::istringstream in{std::string(s)};
  std::string wday, mon, dd, clock, zone, yyyy, extra;
  if (!(in >> wday >> mon >> dd >> clock >> zone >> yyyy) || (in >> extra)) return std::nullopt;
  int mo = 0;
  for (std::size_t i = 0; i < kMonths.size(); ++i) {
    if (kMonths[i] == mon) mo = static_cast<int>(i) + 1;
  }
  int d, y, h, mi, sec;
  if (mo == 0 || !parse_int(dd, d) || !parse_int(yyyy, y) || clock.size() != 8 || clock[2] != ':' ||
      clock[5] != ':') {
    return std::nullopt;
  }
  const std::string_view c = clock;
  if (!parse_int(c.substr(0, 2), h) || !parse_int(c.substr(3, 2), mi) || !parse_int(c.substr(6, 2), sec)) {
    return std::nullopt;
  }
  const auto offset = parse_offset(zone);
  if (!offset) return std::nullopt;
  return make_time(y, mo, d, h, mi, sec, *offset);
}

std::string id_field(const json& obj, const char* str_key, const char* num_key) {
  if (obj.contains(str_key) && obj[str_key].is_string()) return obj[str_key].get<std::string>();
  if (obj.contains(num_key)) {
    const auto& v = obj[num_key];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return v.dump();
  }
  return {};
}

std::optional<std::string> optional_string(const json& obj, const char* key) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_string()) throw std::invalid_argument(std::string("\"") + key + "\" must be a string");
  auto v = obj[key].get<std::string>();
  if (v.empty()) return std::nullopt;
  return v;
}

}  // namespace

bool looks_like_retweet(std::string_view text) { return text.starts_with("RT @"); }

std::string format_timestamp(Timestamp t) {
  const auto d = floor<days>(t);
  const year_month_day ymd{d};
  const hh_mm_ss hms{t - d};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

std::string format_day(Day d) {
  const year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  s = text::trim(s);
  if (auto t = parse_iso(s)) return t;
  return parse_platform(s);
}

std::optional<Day> parse_day(std::string_view s) {
  s = text::trim(s);
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y, mo, d;
  if (!parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d)) {
    return std::nullopt;
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  return sys_days{ymd};
}

Message parse_record(std::string_view line) {
  const json j = json::parse(line, nullptr, false);
  if (j.is_discarded()) throw std::invalid_argument("malformed JSON");
  if (!j.is_object()) throw std::invalid_argument("record is not a JSON object");

  Message m;
  m.id = id_field(j, "id_str", "id");
  if (m.id.empty()) throw std::invalid_argument("missing id");

  if (!j.contains("created_at") || !j["created_at"].is_string()) {
    throw std::invalid_argument("missing created_at");
  }
  const auto ts = parse_timestamp(j["created_at"].get<std::string>());
  if (!ts) throw std::invalid_argument("unparseable created_at");
  m.timestamp = *ts;

  if (j.contains("extended_tweet") && j["extended_tweet"].is_object() &&
      j["extended_tweet"].contains("full_text") && j["extended_tweet"]["full_text"].is_string()) {
    m.text = j["extended_tweet"]["full_text"].get<std::string>();
  } else if (j.contains("full_text") && j["full_text"].is_string()) {
    m.text = j["full_text"].get<std::string>();
  } else if (j.contains("text") && j["text"].is_string()) {
    m.text = j["text"].get<std::string>();
  } else {
    throw std::invalid_argument("missing text");
  }

  if (!j.contains("user") || !j["user"].is_object()) throw std::invalid_argument("missing user");
  const json& user = j["user"];
  if (user.contains("screen_name") && user["screen_name"].is_string()) {
    m.author_id = user["screen_name"].get<std::string>();
  } else {
    m.author_id = id_field(user, "id_str", "id");
  }
  if (m.author_id.empty()) throw std::invalid_argument("missing user.screen_name / user.id");
  m.author_timezone = optional_string(user, "time_zone");
  m.author_location = optional_string(user, "location");

  if (j.contains("coordinates") && !j["coordinates"].is_null()) {
    const json& c = j["coordinates"];
    if (!c.is_object() || c.value("type", "") != "Point" || !c.contains("coordinates") ||
        !c["coordinates"].is_array() || c["coordinates"].size() != 2 || !c["coordinates"][0].is_number() ||
        !c["coordinates"][1].is_number()) {
      throw std::invalid_argument("coordinates must be a GeoJSON Point");
    }
    const geo::LatLon p{c["coordinates"][1].get<double>(), c["coordinates"][0].get<double>()};
    if (!(p.lat >= -90.0 && p.lat <= 90.0 && p.lon >= -180.0 && p.lon <= 180.0)) {
      throw std::invalid_argument("geotag outside WGS84 bounds");
    }
    m.geotag = p;
  }

  const bool marker = (j.contains("retweeted_status") && !j["retweeted_status"].is_null()) ||
                      (j.contains("retweeted") && j["retweeted"].is_boolean() && j["retweeted"].get<bool>());
  m.is_retweet = marker || looks_like_retweet(m.text);
  return m;
}

std::string to_record(const Message& m) {
  json user = {{"screen_name", m.author_id}};
  if (m.author_timezone) user["time_zone"] = *m.author_timezone;
  if (m.author_location) user["location"] = *m.author_location;
  json j = {{"id_str", m.id},
            {"created_at", format_timestamp(m.timestamp)},
            {"text", m.text},
            {"user", user},
            {"retweeted", m.is_retweet}};
  if (m.geotag) {
    j["coordinates"] = {{"type", "Point"}, {"coordinates", json::array({m.geotag->lon, m.geotag->lat})}};
  }
  return j.dump();
}

std::string IngestReport::to_json() const {
  json diags = json::array();
  for (const auto& d : diagnostics) diags.push_back({{"line", d.line}, {"reason", d.reason}});
  return json{{"parsed", parsed}, {"skipped", skipped}, {"diagnostics", diags}}.dump();
}

IngestResult ingest(std::istream& in) {
  IngestResult result;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::trim(line).empty()) continue;
    try {
      Message m = parse_record(line);
      if (!seen.insert(m.id).second) {
        ++result.report.skipped;
        result.report.diagnostics.push_back({line_no, "duplicate id " + m.id});
        continue;
      }
      result.messages.push_back(std::move(m));
      ++result.report.parsed;
    } catch (const std::invalid_argument& e) {
      ++result.report.skipped;
      result.report.diagnostics.push_back({line_no, e.what()});
    }
  }
  if (in.bad()) throw IoError("read error after line " + std::to_string(line_no));
  return result;
}

IngestResult ingest_text(std::string_view text) {
  std::istringstream in{std::string(text)};
  return ingest(in);
}

IngestResult ingest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input " + path.string());
  return ingest(in);
}

CorpusStats compute_stats(std::span<const Message> messages) {
  CorpusStats s;
  s.total_count = messages.size();
  for (const auto& m : messages) {
    ++s.per_day_counts[day_of(m.timestamp)];
    ++s.per_author_counts[m.author_id];
  }
  return s;
}

}  // namespace floodsense
