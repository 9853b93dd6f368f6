#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "colloc/grammar.hpp"

namespace colloc {

using TokenId = std::int32_t;

/// Word-level vocabulary: PAD, BOS, EOS, then every lexicon surface form in
/// file order (noun_sg, noun_pl, verb_sg, verb_pl per stem), then the
/// determiner and prepositions.
class TokenVocab {
 public:
  static constexpr TokenId kPad = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;

  explicit TokenVocab(const Lexicon& lex = Lexicon::builtin());

  std::size_t size() const noexcept { return words_.size(); }
  TokenId id(std::string_view word) const;  // throws UnknownWord
  const std::string& word(TokenId id) const;  // throws UnknownId
  bool is_special(TokenId id) const noexcept { return id == kPad || id == kBos || id == kEos; }

  // BOS + words + EOS.
  std::vector<TokenId> encode(std::span<const std::string> words) const;
  std::vector<TokenId> encode_line(std::string_view line) const;
  // Specials are dropped.
  std::vector<std::string> decode(std::span<const TokenId> ids) const;

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> ids_;
};

}  // namespace colloc
