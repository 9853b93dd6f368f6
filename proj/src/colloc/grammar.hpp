#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace colloc {

inline constexpr int kStemCount = 40;
inline constexpr int kDefaultCutoff = 30;
inline constexpr double kInfiniteAlpha = std::numeric_limits<double>::infinity();

using Rng = std::mt19937_64;

enum class Number : std::uint8_t { Singular = 0, Plural = 1 };

constexpr Number opposite(Number n) noexcept {
  return n == Number::Singular ? Number::Plural : Number::Singular;
}

struct LexEntry {
  std::string noun_sg;
  std::string noun_pl;
  std::string verb_sg;
  std::string verb_pl;

  bool operator==(const LexEntry&) const = default;
};

/// The synthetic vocabulary: 40 noun stems index-aligned with the 40 verb
/// stems they derive from, one determiner and two prepositions. Every surface
/// form is distinct.
class Lexicon {
 public:
  enum class WordKind : std::uint8_t { Noun, Verb, Determiner, Preposition };

  struct WordInfo {
    WordKind kind;
    int index;  // stem index for nouns/verbs, preposition index otherwise
    Number number;
  };

  explicit Lexicon(std::vector<LexEntry> entries);

  static const Lexicon& builtin();
  // lexicon.txt: 40 lines of noun_sg, noun_pl, verb_sg, verb_pl separated by tabs.
  static Lexicon load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  const std::vector<LexEntry>& entries() const noexcept { return entries_; }
  const std::string& noun(int stem, Number n) const;
  const std::string& verb(int stem, Number n) const;
  const std::string& determiner() const noexcept { return determiner_; }
  const std::array<std::string, 2>& prepositions() const noexcept { return prepositions_; }

  std::optional<WordInfo> lookup(std::string_view word) const;

 private:
  std::vector<LexEntry> entries_;
  std::string determiner_ = "the";
  std::array<std::string, 2> prepositions_{"by", "near"};
  std::unordered_map<std::string, WordInfo> index_;
};

struct ZipfParams {
  double alpha = 0.0;  // kInfiniteAlpha puts all mass on offset 0
  int cutoff = kDefaultCutoff;
  int support = kStemCount;

  bool infinite() const noexcept { return alpha == kInfiniteAlpha; }
  void validate() const;
};

// (j - i) mod support, in [0, support).
constexpr int stem_offset(int stem, int verb_stem, int support = kStemCount) noexcept {
  return ((stem - verb_stem) % support + support) % support;
}

std::vector<double> subject_distribution(int verb_stem, const ZipfParams& params);
// Stems j with offset in [cutoff, support), listed by increasing offset.
std::vector<int> withheld_stems(int verb_stem, const ZipfParams& params = {});
bool is_licensed(int stem, int verb_stem, const ZipfParams& params = {});

enum class Template : std::uint8_t { NV = 0, NPPV = 1, PPNV = 2, PPNPPV = 3 };
inline constexpr std::array<Template, 4> kAllTemplates{Template::NV, Template::NPPV,
                                                       Template::PPNV, Template::PPNPPV};
const char* template_name(Template t) noexcept;
Template parse_template(std::string_view name);
constexpr bool has_pre_pp(Template t) noexcept { return t == Template::PPNV || t == Template::PPNPPV; }
constexpr bool has_post_pp(Template t) noexcept { return t == Template::NPPV || t == Template::PPNPPV; }

struct PrepPhrase {
  int preposition = 0;  // index into Lexicon::prepositions()
  int stem = 0;
  Number number = Number::Singular;

  bool operator==(const PrepPhrase&) const = default;
};

struct Sentence {
  Template tmpl = Template::NV;
  int subject = 0;
  Number subject_number = Number::Singular;
  int verb = 0;
  Number verb_number = Number::Singular;
  std::optional<PrepPhrase> pre;   // before the subject
  std::optional<PrepPhrase> post;  // between subject and verb

  bool operator==(const Sentence&) const = default;

  // All nouns share one number and the verb agrees with it.
  bool uniform_number() const noexcept;
  bool agrees() const noexcept { return verb_number == subject_number; }
  std::vector<int> pp_stems() const;
};

std::vector<std::string> render(const Sentence& s, const Lexicon& lex = Lexicon::builtin());
std::string render_line(const Sentence& s, const Lexicon& lex = Lexicon::builtin());
// Inverse of render; throws SchemaMismatch if the words do not form a template.
Sentence parse_sentence(const std::vector<std::string>& words, const Lexicon& lex = Lexicon::builtin());
Sentence parse_sentence_line(std::string_view line, const Lexicon& lex = Lexicon::builtin());

struct TemplateWeights {
  std::array<double, 4> weights{0.25, 0.25, 0.25, 0.25};
};

/// Draws one training sentence: verb uniformly over the 80 inflected forms,
/// a template by weight, the subject from subject_distribution, and each
/// prepositional object uniformly over the verb's licensed stems.
class SentenceSampler {
 public:
  explicit SentenceSampler(const ZipfParams& params, TemplateWeights weights = {});

  Sentence operator()(Rng& rng) const;

  const ZipfParams& params() const noexcept { return params_; }

 private:
  ZipfParams params_;
  TemplateWeights weights_;
  std::vector<std::vector<double>> subject_cdf_;  // per verb stem
  std::array<double, 4> template_cdf_{};
};

struct DatasetConfig {
  int n_sentences = 12000;
  double train_fraction = 0.8;
  double valid_fraction = 0.1;
  // Rejection sampling gives up after attempt_budget_factor * n_sentences draws.
  std::uint64_t attempt_budget_factor = 10000;
  TemplateWeights template_weights{};
  int cutoff = kDefaultCutoff;
};

struct Dataset {
  ZipfParams params;
  std::uint64_t seed = 0;
  DatasetConfig config;
  std::vector<Sentence> train;
  std::vector<Sentence> valid;
  std::vector<Sentence> test;

  std::size_t size() const noexcept { return train.size() + valid.size() + test.size(); }
};

Dataset generate_dataset(double alpha, std::uint64_t seed, const DatasetConfig& config = {});

/// Sidecar metadata written next to the split files.
struct DatasetManifest {
  double alpha = 0.0;
  std::uint64_t seed = 0;
  int cutoff = kDefaultCutoff;
  int support = kStemCount;
  std::size_t n_train = 0, n_valid = 0, n_test = 0;
  TemplateWeights template_weights{};
  std::vector<std::vector<int>> withheld;  // per verb stem

  static DatasetManifest from_dataset(const Dataset& d);
  ZipfParams zipf() const { return ZipfParams{alpha, cutoff, support}; }
};

inline constexpr const char* kManifestFile = "manifest.json";

std::string dataset_dir_name(double alpha, std::uint64_t seed);  // data_<alpha>_<seed>
void write_dataset(const Dataset& d, const std::filesystem::path& dir,
                   const Lexicon& lex = Lexicon::builtin());
Dataset read_dataset(const std::filesystem::path& dir, const Lexicon& lex = Lexicon::builtin());
void write_manifest(const DatasetManifest& m, const std::filesystem::path& path);
DatasetManifest read_manifest(const std::filesystem::path& path);

}  // namespace colloc
