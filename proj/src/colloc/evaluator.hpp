#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "colloc/grammar.hpp"
#include "colloc/model.hpp"

namespace colloc {

enum class Lexicality : std::uint8_t { Seen, Unseen };
enum class Attractor : std::uint8_t { Match, Mismatch };

struct EvalCondition {
  Lexicality lexical = Lexicality::Seen;
  Attractor attractor = Attractor::Match;

  bool operator==(const EvalCondition&) const = default;
  std::string name() const;  // e.g. "UNSEEN-MISMATCH"
  static EvalCondition parse(std::string_view name);
  int index() const noexcept;  // position in kAllConditions
};

inline constexpr std::array<EvalCondition, 4> kAllConditions{{
    {Lexicality::Seen, Attractor::Match},
    {Lexicality::Unseen, Attractor::Match},
    {Lexicality::Seen, Attractor::Mismatch},
    {Lexicality::Unseen, Attractor::Mismatch},
}};

/// Both members use the PP-N-PP-V template and differ only in verb number.
struct MinimalPair {
  Sentence grammatical;
  Sentence ungrammatical;
  EvalCondition condition;
};

/// Draws n distinct pairs for one condition. Verb form is uniform over the 80
/// inflected verbs; subject and both PP objects are uniform over the
/// condition's eligible stems (licensed for SEEN, withheld for UNSEEN), the two
/// PP objects are distinct stems, and MISMATCH gives both PP objects the
/// number opposite to the subject's.
std::vector<MinimalPair> generate_pairs(EvalCondition condition, const DatasetManifest& manifest,
                                        std::size_t n = 1000, std::uint64_t seed = 0);

// Per-condition suite seed derived from a base seed.
std::uint64_t suite_seed(std::uint64_t base_seed, EvalCondition condition);

// Exact ties count as incorrect.
constexpr bool score_pair(double grammatical_logprob, double ungrammatical_logprob) noexcept {
  return grammatical_logprob > ungrammatical_logprob;
}

struct SuiteScore {
  std::size_t n = 0;
  std::size_t n_correct = 0;
  double accuracy() const { return n ? static_cast<double>(n_correct) / static_cast<double>(n) : 0.0; }
};

// Scores from precomputed (grammatical, ungrammatical) log-probabilities.
SuiteScore accuracy_from_logprobs(std::span<const std::pair<double, double>> logprobs);

SuiteScore score_suite(const Parameters<float>& params, std::span<const MinimalPair> pairs,
                       const TokenVocab& vocab = TokenVocab(), const Lexicon& lex = Lexicon::builtin());

// Suite file: tab-separated (condition, grammatical sentence, ungrammatical sentence).
void write_suite(std::span<const MinimalPair> pairs, const std::filesystem::path& path,
                 const Lexicon& lex = Lexicon::builtin());
std::vector<MinimalPair> read_suite(const std::filesystem::path& path, const Lexicon& lex = Lexicon::builtin());

struct ConditionResult {
  EvalCondition condition;
  SuiteScore score;
};

// Scores every condition present in the suite, in kAllConditions order.
std::vector<ConditionResult> evaluate_suite(const Parameters<float>& params, std::span<const MinimalPair> pairs);
// CSV columns: condition, n, n_correct, accuracy.
void write_results(const std::vector<ConditionResult>& results, const std::filesystem::path& path);

}  // namespace colloc
