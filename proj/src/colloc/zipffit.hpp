#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace colloc::zipf {

struct SubjectVerbRecord {
  std::string subject;
  std::string verb;
  std::optional<int> age_months;
};

struct LoadStats {
  std::size_t rows = 0;
  std::size_t kept = 0;
  std::size_t rejected_age = 0;
  std::size_t rejected_non_ascii = 0;
};

inline constexpr int kMaxAgeMonths = 96;

/// TSV with a header row; columns subject_lemma, verb_lemma and optionally
/// age_months. Lemmas are lowercased. Rows whose verb lemma is not ASCII or
/// whose age exceeds 96 months are dropped and tallied in stats.
std::vector<SubjectVerbRecord> load_pairs(const std::filesystem::path& path, LoadStats* stats = nullptr);

/// verb -> subject -> count
class PairCounts {
 public:
  PairCounts() = default;
  explicit PairCounts(const std::vector<SubjectVerbRecord>& records);

  void add(const std::string& verb, const std::string& subject, std::uint64_t count = 1);
  std::uint64_t verb_total(const std::string& verb) const;
  const std::map<std::string, std::map<std::string, std::uint64_t>>& table() const noexcept { return table_; }
  std::size_t n_pairs() const noexcept { return n_pairs_; }
  std::size_t n_verbs() const noexcept { return table_.size(); }
  std::size_t n_subjects() const;

 private:
  std::map<std::string, std::map<std::string, std::uint64_t>> table_;
  std::size_t n_pairs_ = 0;
};

// Top-k verbs by pair count, ties broken lexicographically. Throws TooFewVerbs.
std::vector<std::string> top_verbs(const PairCounts& counts, std::size_t k = 100);
std::vector<std::string> top_verbs(const std::vector<SubjectVerbRecord>& records, std::size_t k = 100);

struct RankProfile {
  std::vector<double> f;  // f[r-1], r = 1..R
  std::vector<std::string> verbs;
  std::vector<std::uint64_t> verb_counts;
  std::size_t ranks() const noexcept { return f.size(); }
};

/// Average over verbs of the proportion of each verb's r-th most frequent
/// subject; verbs with fewer than r subjects contribute 0 at rank r.
/// R is the largest subject inventory among the verbs, optionally capped.
RankProfile empirical_rank_frequencies(const PairCounts& counts, const std::vector<std::string>& verbs,
                                       std::optional<std::size_t> max_rank = std::nullopt);

// K / r^alpha over r = 1..R with K normalizing the R values to sum to 1.
std::vector<double> theoretical_profile(double alpha, std::size_t ranks);
double mse(const std::vector<double>& empirical, const std::vector<double>& theoretical);

struct AlphaGrid {
  double start = 0.0;
  double stop = 3.0;
  double step = 0.01;

  std::size_t size() const;
  double at(std::size_t i) const;
  static AlphaGrid parse(const std::string& spec);  // "start:stop:step"
};

struct FitResult {
  double alpha_hat = 0.0;
  double mse = 0.0;
  double k = 0.0;  // normalizing constant at alpha_hat
  std::size_t ranks = 0;
  AlphaGrid grid{};
};

// Grid argmin of MSE(alpha); ties go to the smaller alpha.
FitResult fit_alpha(const RankProfile& profile, const AlphaGrid& grid = {});

struct BinFit {
  std::string label;  // "0-12", ..., "84-96", or "all"
  int age_lo = 0;
  int age_hi = 0;
  std::size_t n_pairs = 0;
  std::size_t n_unique_verbs = 0;
  std::size_t n_unique_subjects = 0;
  bool fitted = false;
  std::string status;  // "ok" or the reason the bin was not fit
  FitResult fit{};
};

struct FitOptions {
  std::size_t top_k = 100;
  AlphaGrid grid{};
  std::optional<std::size_t> max_rank;
  int bin_width = 12;
};

BinFit fit_overall(const std::vector<SubjectVerbRecord>& records, const FitOptions& options = {});

/// Bins [0,12), [12,24), ..., [84,96]; the last bin includes 96. A bin with
/// fewer than top_k distinct verbs is reported unfit (BinTooSmall) rather than
/// aborting the whole analysis.
std::vector<BinFit> fit_by_age(const std::vector<SubjectVerbRecord>& records, const FitOptions& options = {});

// CSV columns: bin, n_pairs, n_unique_verbs, n_unique_subjects, alpha_hat, mse.
void write_fit_csv(const std::vector<BinFit>& fits, const std::filesystem::path& path);
std::vector<BinFit> read_fit_csv(const std::filesystem::path& path);

// CSV columns: rank, empirical, theoretical.
void write_profile_csv(const RankProfile& profile, const FitResult& fit, const std::filesystem::path& path);

}  // namespace colloc::zipf
