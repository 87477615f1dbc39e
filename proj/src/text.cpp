#include "polarscope/text.hpp"

#include <algorithm>

namespace polarscope::text {

std::vector<uint32_t> decode_utf8(const std::string& s) {
  std::vector<uint32_t> cps;
  cps.reserve(s.size());
  size_t i = 0;
  while (i < s.size()) {
    unsigned char c = s[i];
    uint32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c >> 5) == 0x6) {
      cp = c & 0x1f;
      extra = 1;
    } else if ((c >> 4) == 0xe) {
      cp = c & 0x0f;
      extra = 2;
    } else if ((c >> 3) == 0x1e) {
      cp = c & 0x07;
      extra = 3;
    } else {
      ++i;  // stray continuation or invalid lead byte
      continue;
    }
    if (i + extra >= s.size()) break;
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      unsigned char cc = s[i + k];
      if ((cc >> 6) != 0x2) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3f);
    }
    if (!ok) {
      ++i;
      continue;
    }
    cps.push_back(cp);
    i += extra + 1;
  }
  return cps;
}

void append_utf8(std::string& out, uint32_t cp) {
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xc0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xe0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  } else {
    out += static_cast<char>(0xf0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3f));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3f));
    out += static_cast<char>(0x80 | (cp & 0x3f));
  }
}

std::string encode_utf8(const std::vector<uint32_t>& cps) {
  std::string out;
  out.reserve(cps.size());
  for (uint32_t cp : cps) append_utf8(out, cp);
  return out;
}

namespace {

// base letter + combining mark -> precomposed
uint32_t compose(uint32_t base, uint32_t mark) {
  if (mark == 0x0301) {  // acute
    switch (base) {
      case 'a': return 0xE1; case 'e': return 0xE9; case 'i': return 0xED;
      case 'o': return 0xF3; case 'u': return 0xFA;
      case 'A': return 0xC1; case 'E': return 0xC9; case 'I': return 0xCD;
      case 'O': return 0xD3; case 'U': return 0xDA;
    }
  } else if (mark == 0x0303) {  // tilde
    switch (base) {
      case 'n': return 0xF1; case 'N': return 0xD1;
      case 'a': return 0xE3; case 'o': return 0xF5;
      case 'A': return 0xC3; case 'O': return 0xD5;
    }
  } else if (mark == 0x0308) {  // diaeresis
    switch (base) {
      case 'u': return 0xFC; case 'U': return 0xDC;
    }
  }
  return 0;
}

}  // namespace

std::string normalize(const std::string& s) {
  std::vector<uint32_t> cps = decode_utf8(s);
  std::vector<uint32_t> out;
  out.reserve(cps.size());
  for (uint32_t cp : cps) {
    if (!out.empty() && cp >= 0x0300 && cp <= 0x036F) {
      uint32_t composed = compose(out.back(), cp);
      if (composed) {
        out.back() = composed;
        continue;
      }
    }
    out.push_back(cp);
  }
  return encode_utf8(out);
}

bool is_space(uint32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0xA0: case 0x1680: case 0x2028: case 0x2029: case 0x202F:
    case 0x205F: case 0x3000:
      return true;
  }
  return cp >= 0x2000 && cp <= 0x200A;
}

bool is_strippable(uint32_t cp) {
  if (cp < 0x80) {
    return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
           (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
  }
  // Latin-1 punctuation and symbols; ª (0xAA) and º (0xBA) are letters
  if (cp >= 0xA1 && cp <= 0xBF) return cp != 0xAA && cp != 0xBA;
  if (cp == 0xD7 || cp == 0xF7) return true;
  if (cp >= 0x2000 && cp <= 0x206F) return true;   // general punctuation
  if (cp >= 0x20A0 && cp <= 0x20CF) return true;   // currency signs
  if (cp >= 0x2100 && cp <= 0x214F) return true;   // letterlike symbols
  if (cp >= 0x2190 && cp <= 0x2BFF) return true;   // arrows, math, misc symbols
  if (cp >= 0x3000 && cp <= 0x303F) return true;   // CJK punctuation
  if (cp >= 0xFE00 && cp <= 0xFE0F) return true;   // variation selectors
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return true; // emoji planes
  return false;
}

uint32_t to_lower(uint32_t cp) {
  if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
  if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
  return cp;
}

std::string lower(const std::string& s) {
  std::vector<uint32_t> cps = decode_utf8(s);
  for (auto& cp : cps) cp = to_lower(cp);
  return encode_utf8(cps);
}

bool is_url_token(const std::string& token) {
  std::string t = lower(token);
  return t.rfind("http://", 0) == 0 || t.rfind("https://", 0) == 0 ||
         t.rfind("www.", 0) == 0;
}

std::vector<std::string> tokenize(const std::string& raw) {
  std::vector<uint32_t> cps = decode_utf8(normalize(raw));
  std::vector<std::string> out;
  size_t i = 0;
  while (i < cps.size()) {
    while (i < cps.size() && is_space(cps[i])) ++i;
    size_t start = i;
    while (i < cps.size() && !is_space(cps[i])) ++i;
    if (i == start) continue;
    std::vector<uint32_t> rawtok(cps.begin() + start, cps.begin() + i);
    std::string rawstr = encode_utf8(rawtok);
    if (rawtok[0] == '@') continue;
    if (is_url_token(rawstr)) continue;
    std::vector<uint32_t> cleaned;
    cleaned.reserve(rawtok.size());
    for (uint32_t cp : rawtok) {
      if (is_strippable(cp)) continue;
      cleaned.push_back(to_lower(cp));
    }
    if (!cleaned.empty()) out.push_back(encode_utf8(cleaned));
  }
  return out;
}

namespace {

bool is_tag_char(uint32_t cp) {
  if (cp == '_') return true;
  if (cp >= '0' && cp <= '9') return true;
  if (cp >= 'a' && cp <= 'z') return true;
  if (cp >= 'A' && cp <= 'Z') return true;
  if (cp >= 0xC0 && cp <= 0xFF && cp != 0xD7 && cp != 0xF7) return true;
  return false;
}

}  // namespace

std::vector<std::string> extract_hashtags(const std::string& raw) {
  std::vector<uint32_t> cps = decode_utf8(normalize(raw));
  std::vector<std::string> tags;
  for (size_t i = 0; i < cps.size(); ++i) {
    if (cps[i] != '#') continue;
    std::vector<uint32_t> tag;
    size_t j = i + 1;
    while (j < cps.size() && is_tag_char(cps[j])) {
      tag.push_back(to_lower(cps[j]));
      ++j;
    }
    if (!tag.empty()) tags.push_back(encode_utf8(tag));
    i = j - 1;
  }
  return tags;
}

}  // namespace polarscope::text
