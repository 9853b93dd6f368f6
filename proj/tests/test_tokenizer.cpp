#include <doctest.h>

#include <set>

#include "colloc/error.hpp"
#include "colloc/grammar.hpp"
#include "colloc/tokenizer.hpp"
#include "colloc/util.hpp"

using namespace colloc;

TEST_CASE("vocabulary layout") {
  const TokenVocab v;
  CHECK(v.size() == 166);
  CHECK(TokenVocab::kPad == 0);
  CHECK(v.word(TokenVocab::kPad) != v.word(TokenVocab::kBos));
  // Specials first, then lexicon file order.
  CHECK(v.id("singer") == 3);
  CHECK(v.id("singers") == 4);
  CHECK(v.id("sings") == 5);
  CHECK(v.id("sing") == 6);
  std::set<std::string> words;
  for (TokenId i = 0; i < static_cast<TokenId>(v.size()); ++i) words.insert(v.word(i));
  CHECK(words.size() == v.size());
}

TEST_CASE("encode and decode") {
  const TokenVocab v;
  const auto ids = v.encode_line("the twirler twirls");
  CHECK(ids == std::vector<TokenId>{TokenVocab::kBos, v.id("the"), v.id("twirler"), v.id("twirls"), TokenVocab::kEos});
  CHECK(join(v.decode(ids), " ") == "the twirler twirls");
  CHECK_THROWS_AS(v.encode_line("the xylophone sings"), Error);
  try {
    v.word(999);
    FAIL("expected UnknownId");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownId);
  }
  try {
    v.id("xylophone");
    FAIL("expected UnknownWord");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownWord);
  }
}

TEST_CASE("round trip on every sentence of a dataset") {
  const TokenVocab v;
  const Dataset d = generate_dataset(1.5, 21);
  for (const auto& s : d.valid) {
    const auto words = render(s);
    const auto ids = v.encode(words);
    CHECK(ids.size() == words.size() + 2);
    CHECK(v.decode(ids) == words);
  }
}
