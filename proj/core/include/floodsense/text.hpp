#pragma once

// Small UTF-8 aware string helpers shared by the tokenizers, the blocklist
// and the gazetteer. Case folding is ASCII-only; other code points pass
// through unchanged.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace floodsense::text {

/// Decodes one code point starting at `pos`. Invalid sequences decode as a
/// single byte (returned as U+FFFD) so scanning always makes progress.
struct Decoded {
  char32_t code_point;
  std::size_t length;
};
Decoded decode_utf8(std::string_view s, std::size_t pos);

bool is_space(char32_t cp);

/// True for ASCII punctuation and the common Unicode quotes/dashes.
bool is_punct(char32_t cp);

std::string ascii_lower(std::string_view s);
void ascii_lower_inplace(std::string& s);

std::string_view trim(std::string_view s);

/// Splits on Unicode whitespace; empty pieces are dropped.
std::vector<std::string_view> split_whitespace(std::string_view s);

/// Lowercased runs of word characters (anything that is neither space nor
/// punctuation). Used to normalise place names and gazetteer queries.
std::vector<std::string> word_tokens(std::string_view s);

/// `word_tokens` joined by single spaces.
std::string normalize_name(std::string_view s);

}  // namespace floodsense::text
