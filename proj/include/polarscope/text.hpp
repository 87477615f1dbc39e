#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace polarscope::text {

// UTF-8 <-> codepoints; invalid bytes are dropped on decode.
std::vector<uint32_t> decode_utf8(const std::string& s);
void append_utf8(std::string& out, uint32_t cp);
std::string encode_utf8(const std::vector<uint32_t>& cps);

// Composes Spanish combining sequences (a + U+0301 -> á, n + U+0303 -> ñ, u + U+0308 -> ü).
// Other combining marks are left untouched.
std::string normalize(const std::string& s);

bool is_space(uint32_t cp);
bool is_strippable(uint32_t cp);  // punctuation (incl. ¡ ¿), symbols, emoji
uint32_t to_lower(uint32_t cp);
std::string lower(const std::string& s);

// Pipeline: normalize, split on whitespace, drop URL and @-mention tokens,
// strip punctuation/emoji, lowercase. '#' is stripped, the tag word survives.
std::vector<std::string> tokenize(const std::string& raw);

// Hashtags appearing in raw text, lowercase, without '#'.
std::vector<std::string> extract_hashtags(const std::string& raw);

bool is_url_token(const std::string& token);

}  // namespace polarscope::text
