#include "colloc/tokenizer.hpp"

#include "colloc/error.hpp"
#include "colloc/util.hpp"

namespace colloc {

TokenVocab::TokenVocab(const Lexicon& lex) {
  words_ = {"<pad>", "<bos>", "<eos>"};
  for (const auto& e : lex.entries()) {
    words_.push_back(e.noun_sg);
    words_.push_back(e.noun_pl);
    words_.push_back(e.verb_sg);
    words_.push_back(e.verb_pl);
  }
  words_.push_back(lex.determiner());
  for (const auto& p : lex.prepositions()) words_.push_back(p);
  for (std::size_t i = 0; i < words_.size(); ++i) {
    ids_.emplace(words_[i], static_cast<TokenId>(i));
  }
}

TokenId TokenVocab::id(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end() || is_special(it->second)) {
    fail(ErrorCode::UnknownWord, "unknown word: " + std::string(word));
  }
  return it->second;
}

const std::string& TokenVocab::word(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    fail(ErrorCode::UnknownId, "unknown token id " + std::to_string(id));
  }
  return words_[static_cast<std::size_t>(id)];
}

std::vector<TokenId> TokenVocab::encode(std::span<const std::string> words) const {
  std::vector<TokenId> out;
  out.reserve(words.size() + 2);
  out.push_back(kBos);
  for (const auto& w : words) out.push_back(id(w));
  out.push_back(kEos);
  return out;
}

std::vector<TokenId> TokenVocab::encode_line(std::string_view line) const {
  auto words = split_whitespace(line);
  return encode(words);
}

std::vector<std::string> TokenVocab::decode(std::span<const TokenId> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (TokenId t : ids) {
    const std::string& w = word(t);
    if (!is_special(t)) out.push_back(w);
  }
  return out;
}

}  // namespace colloc
