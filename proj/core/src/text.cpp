#include "floodsense/text.hpp"

#include <algorithm>

namespace floodsense::text {

Decoded decode_utf8(std::string_view s, std::size_t pos) {
  const auto b0 = static_cast<unsigned char>(s[pos]);
  if (b0 < 0x80) return {b0, 1};

  std::size_t len = 0;
  char32_t cp = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2;
    cp = b0 & 0x1F;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3;
    cp = b0 & 0x0F;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4;
    cp = b0 & 0x07;
  } else {
    return {0xFFFD, 1};
  }
  if (pos + len > s.size()) return {0xFFFD, 1};
  for (std::size_t i = 1; i < len; ++i) {
    const auto b = static_cast<unsigned char>(s[pos + i]);
    if ((b & 0xC0) != 0x80) return {0xFFFD, 1};
    cp = (cp << 6) | (b & 0x3F);
  }
  return {cp, len};
}

bool is_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  switch (cp) {
    case 0xA1: case 0xAB: case 0xBB: case 0xBF:
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014:
    case 0x2015: case 0x2018: case 0x2019: case 0x201C: case 0x201D:
    case 0x2026:
      return true;
    default:
      return false;
  }
}

std::string ascii_lower(std::string_view s) {
  std::string out(s);
  ascii_lower_inplace(out);
  return out;
}

void ascii_lower_inplace(std::string& s) {
  for (char& c : s) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
}

std::string_view trim(std::string_view s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end) {
    const auto d = decode_utf8(s, begin);
    if (!is_space(d.code_point)) break;
    begin += d.length;
  }
  while (end > begin) {
    // Walk back to the start of the last code point.
    std::size_t start = end - 1;
    while (start > begin && (static_cast<unsigned char>(s[start]) & 0xC0) == 0x80) --start;
    if (!is_space(decode_utf8(s, start).code_point)) break;
    end = start;
  }
  return s.substr(begin, end - begin);
}

std::vector<std::string_view> split_whitespace(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  std::size_t start = std::string_view::npos;
  while (pos < s.size()) {
    const auto d = decode_utf8(s, pos);
    if (is_space(d.code_point)) {
      if (start != std::string_view::npos) {
        out.push_back(s.substr(start, pos - start));
        start = std::string_view::npos;
      }
    } else if (start == std::string_view::npos) {
      start = pos;
    }
    pos += d.length;
  }
  if (start != std::string_view::npos) out.push_back(s.substr(start));
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string current;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto d = decode_utf8(s, pos);
    if (is_space(d.code_point) || is_punct(d.code_point)) {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.append(s.substr(pos, d.length));
    }
    pos += d.length;
  }
  if (!current.empty()) out.push_back(std::move(current));
  for (auto& t : out) ascii_lower_inplace(t);
  return out;
}

std::string normalize_name(std::string_view s) {
  std::string out;
  for (const auto& token : word_tokens(s)) {
    if (!out.empty()) out.push_back(' ');
    out += token;
  }
  return out;
}

}  // namespace floodsense::text
