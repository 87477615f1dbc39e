#include <doctest.h>

#include "polarscope/text.hpp"

using namespace polarscope;

TEST_CASE("utf8 round trip and bad byte handling") {
  std::string s = "añío úü Ñ";
  CHECK(text::encode_utf8(text::decode_utf8(s)) == s);

  std::string bad = "ok\xff\xfe pues";  // stray continuation-less bytes
  auto cps = text::decode_utf8(bad);
  CHECK(text::encode_utf8(cps) == "ok pues");
}

TEST_CASE("combining marks compose to spanish letters") {
  // "niño" -> niño, "perú" -> perú, "ü" -> ü
  CHECK(text::normalize("nin\xcc\x83o") == "ni\xc3\xb1o");
  CHECK(text::normalize("peru\xcc\x81") == "per\xc3\xba");
  CHECK(text::normalize("u\xcc\x88") == "\xc3\xbc");
  // non-Spanish base letter keeps its mark untouched
  CHECK(text::normalize("x\xcc\x83") == "x\xcc\x83");
}

TEST_CASE("lowercasing covers latin-1 letters") {
  CHECK(text::lower("CRISIS") == "crisis");
  CHECK(text::lower("\xc3\x91O\xc3\x91O") == "\xc3\xb1o\xc3\xb1o");  // ÑOÑO
  CHECK(text::lower("PER\xc3\x9a") == "per\xc3\xba");                // PERÚ
  CHECK(text::to_lower(U'\x00D7') == U'\x00D7');                     // × is not a letter
}

TEST_CASE("tokenize drops mentions urls and punctuation") {
  auto toks = text::tokenize(
      "RT @user: \xc2\xa1" "Fuera! el r\xc3\xa9gimen, ya. http://t.co/abc #Protesta");
  REQUIRE(toks.size() == 6);
  CHECK(toks[0] == "rt");
  CHECK(toks[1] == "fuera");
  CHECK(toks[2] == "el");
  CHECK(toks[3] == "r\xc3\xa9gimen");
  CHECK(toks[4] == "ya");
  CHECK(toks[5] == "protesta");
}

TEST_CASE("tokenize handles urls and empty leftovers") {
  CHECK(text::is_url_token("https://example.com/a"));
  CHECK(text::is_url_token("WWW.site.org"));
  CHECK(!text::is_url_token("word"));

  auto toks = text::tokenize("... \xe2\x80\x94 !!! www.x.com @a");
  CHECK(toks.empty());  // everything strips away

  auto emoji = text::tokenize("bravo \xf0\x9f\x91\x8f\xf0\x9f\x91\x8f si");
  REQUIRE(emoji.size() == 2);
  CHECK(emoji[0] == "bravo");
  CHECK(emoji[1] == "si");
}

TEST_CASE("tokenize splits on unicode spaces") {
  // U+00A0 no-break space and U+2003 em space both separate tokens
  auto toks = text::tokenize("uno\xc2\xa0" "dos\xe2\x80\x83tres");
  REQUIRE(toks.size() == 3);
  CHECK(toks[0] == "uno");
  CHECK(toks[2] == "tres");
}

TEST_CASE("hashtag extraction") {
  auto tags = text::extract_hashtags("Vamos #FueraMaduro y #Resiste2019, no #\xc3\xb1");
  REQUIRE(tags.size() == 3);
  CHECK(tags[0] == "fueramaduro");
  CHECK(tags[1] == "resiste2019");
  CHECK(tags[2] == "\xc3\xb1");

  CHECK(text::extract_hashtags("sin etiquetas # suelto").empty());
  auto under = text::extract_hashtags("#con_guion_bajo");
  REQUIRE(under.size() == 1);
  CHECK(under[0] == "con_guion_bajo");
}
