#include "colloc/zipffit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "colloc/error.hpp"
#include "colloc/util.hpp"

namespace colloc::zipf {

std::vector<SubjectVerbRecord> load_pairs(const std::filesystem::path& path, LoadStats* stats) {
  const auto lines = read_lines(path);
  LoadStats local;
  LoadStats& st = stats ? *stats : local;
  st = {};
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) fail(ErrorCode::EmptyCorpus, path.string() + ": file is empty");

  auto header = split(lines[first], '\t');
  for (auto& h : header) h = to_lower(trim(h));
  const bool has_age = header.size() == 3;
  if (!(header.size() == 2 || has_age) || header[0] != "subject_lemma" || header[1] != "verb_lemma" ||
      (has_age && header[2] != "age_months")) {
    fail(ErrorCode::MalformedRow, path.string() + ":" + std::to_string(first + 1) +
                                      ": header must be subject_lemma, verb_lemma[, age_months]");
  }

  std::vector<SubjectVerbRecord> out;
  for (std::size_t i = first + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    auto cols = split(lines[i], '\t');
    if (cols.size() != header.size()) {
      fail(ErrorCode::MalformedRow, where + ": expected " + std::to_string(header.size()) + " columns, got " +
                                        std::to_string(cols.size()));
    }
    ++st.rows;
    SubjectVerbRecord r;
    r.subject = to_lower(trim(cols[0]));
    r.verb = to_lower(trim(cols[1]));
    if (r.subject.empty() || r.verb.empty()) fail(ErrorCode::MalformedRow, where + ": empty lemma");
    if (has_age && !trim(cols[2]).empty()) {
      double age = 0.0;
      try {
        age = parse_double(cols[2]);
      } catch (const Error&) {
        fail(ErrorCode::MalformedRow, where + ": age is not a number");
      }
      if (!std::isfinite(age) || age < 0.0) fail(ErrorCode::MalformedRow, where + ": invalid age");
      if (age > kMaxAgeMonths) {
        ++st.rejected_age;
        continue;
      }
      r.age_months = static_cast<int>(std::floor(age));
    }
    if (!is_ascii(r.verb)) {
      ++st.rejected_non_ascii;
      continue;
    }
    out.push_back(std::move(r));
  }
  st.kept = out.size();
  if (out.empty()) fail(ErrorCode::EmptyCorpus, path.string() + ": no usable subject-verb pairs");
  return out;
}

PairCounts::PairCounts(const std::vector<SubjectVerbRecord>& records) {
  for (const auto& r : records) add(r.verb, r.subject);
}

void PairCounts::add(const std::string& verb, const std::string& subject, std::uint64_t count) {
  table_[verb][subject] += count;
  n_pairs_ += count;
}

std::uint64_t PairCounts::verb_total(const std::string& verb) const {
  auto it = table_.find(verb);
  if (it == table_.end()) return 0;
  std::uint64_t total = 0;
  for (const auto& [s, c] : it->second) total += c;
  return total;
}

std::size_t PairCounts::n_subjects() const {
  std::set<std::string_view> subjects;
  for (const auto& [v, row] : table_) {
    for (const auto& [s, c] : row) subjects.insert(s);
  }
  return subjects.size();
}

std::vector<std::string> top_verbs(const PairCounts& counts, std::size_t k) {
  if (counts.n_verbs() < k) {
    fail(ErrorCode::TooFewVerbs, "need " + std::to_string(k) + " distinct verbs, corpus has " +
                                     std::to_string(counts.n_verbs()));
  }
  std::vector<std::pair<std::uint64_t, std::string>> ranked;
  ranked.reserve(counts.n_verbs());
  for (const auto& [verb, row] : counts.table()) ranked.emplace_back(counts.verb_total(verb), verb);
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(ranked[i].second);
  return out;
}

std::vector<std::string> top_verbs(const std::vector<SubjectVerbRecord>& records, std::size_t k) {
  return top_verbs(PairCounts(records), k);
}

RankProfile empirical_rank_frequencies(const PairCounts& counts, const std::vector<std::string>& verbs,
                                       std::optional<std::size_t> max_rank) {
  if (verbs.empty()) fail(ErrorCode::InvalidArgument, "no verbs to profile");
  RankProfile p;
  std::vector<std::vector<double>> per_verb;
  std::size_t R = 0;
  for (const auto& verb : verbs) {
    auto it = counts.table().find(verb);
    if (it == counts.table().end()) fail(ErrorCode::InvalidArgument, "verb not in corpus: " + verb);
    std::vector<std::pair<std::uint64_t, std::string_view>> subj;
    std::uint64_t total = 0;
    for (const auto& [s, c] : it->second) {
      subj.emplace_back(c, s);
      total += c;
    }
    std::sort(subj.begin(), subj.end(), [](const auto& a, const auto& b) {
      return a.first != b.first ? a.first > b.first : a.second < b.second;
    });
    std::vector<double> props;
    props.reserve(subj.size());
    for (const auto& [c, s] : subj) props.push_back(static_cast<double>(c) / static_cast<double>(total));
    R = std::max(R, props.size());
    per_verb.push_back(std::move(props));
    p.verbs.push_back(verb);
    p.verb_counts.push_back(total);
  }
  if (max_rank) R = std::min(R, std::max<std::size_t>(*max_rank, 1));
  p.f.assign(R, 0.0);
  for (const auto& props : per_verb) {
    for (std::size_t r = 0; r < R && r < props.size(); ++r) p.f[r] += props[r];
  }
  for (double& v : p.f) v /= static_cast<double>(verbs.size());
  return p;
}

std::vector<double> theoretical_profile(double alpha, std::size_t ranks) {
  if (!(alpha >= 0.0) || ranks == 0) fail(ErrorCode::InvalidArgument, "need alpha >= 0 and R >= 1");
  std::vector<double> f(ranks);
  double total = 0.0;
  for (std::size_t r = 0; r < ranks; ++r) {
    f[r] = std::pow(static_cast<double>(r + 1), -alpha);
    total += f[r];
  }
  for (double& v : f) v /= total;
  return f;
}

double mse(const std::vector<double>& empirical, const std::vector<double>& theoretical) {
  if (empirical.size() != theoretical.size() || empirical.empty()) {
    fail(ErrorCode::InvalidArgument, "profiles must have equal, non-zero length");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < empirical.size(); ++i) {
    const double d = empirical[i] - theoretical[i];
    s += d * d;
  }
  return s / static_cast<double>(empirical.size());
}

std::size_t AlphaGrid::size() const {
  if (!(step > 0.0) || stop < start || start < 0.0) fail(ErrorCode::InvalidArgument, "invalid alpha grid");
  return static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
}

double AlphaGrid::at(std::size_t i) const {
  // Snap to 1e-9 so grid points like 1.5 are exact decimals.
  return std::round((start + static_cast<double>(i) * step) * 1e9) / 1e9;
}

AlphaGrid AlphaGrid::parse(const std::string& spec) {
  auto parts = split(spec, ':');
  if (parts.size() != 3) fail(ErrorCode::InvalidArgument, "grid must be start:stop:step");
  AlphaGrid g{parse_double(parts[0]), parse_double(parts[1]), parse_double(parts[2])};
  g.size();
  return g;
}

FitResult fit_alpha(const RankProfile& profile, const AlphaGrid& grid) {
  if (profile.f.empty()) fail(ErrorCode::InvalidArgument, "empty rank profile");
  FitResult best;
  best.grid = grid;
  best.ranks = profile.ranks();
  best.mse = std::numeric_limits<double>::infinity();
  const std::size_t n = grid.size();
  for (std::size_t i = 0; i < n; ++i) {
    const double a = grid.at(i);
    const double e = mse(profile.f, theoretical_profile(a, profile.ranks()));
    if (e < best.mse) {
      best.mse = e;
      best.alpha_hat = a;
    }
  }
  best.k = theoretical_profile(best.alpha_hat, profile.ranks()).front();
  return best;
}

namespace {

BinFit fit_records(const std::vector<SubjectVerbRecord>& records, const FitOptions& options, BinFit bin) {
  PairCounts counts(records);
  bin.n_pairs = counts.n_pairs();
  bin.n_unique_verbs = counts.n_verbs();
  bin.n_unique_subjects = counts.n_subjects();
  if (counts.n_verbs() < options.top_k) {
    bin.fitted = false;
    bin.status = error_code_name(ErrorCode::BinTooSmall);
    return bin;
  }
  auto verbs = top_verbs(counts, options.top_k);
  auto profile = empirical_rank_frequencies(counts, verbs, options.max_rank);
  bin.fit = fit_alpha(profile, options.grid);
  bin.fitted = true;
  bin.status = "ok";
  return bin;
}

}  // namespace

BinFit fit_overall(const std::vector<SubjectVerbRecord>& records, const FitOptions& options) {
  if (records.empty()) fail(ErrorCode::EmptyCorpus, "no records");
  BinFit bin;
  bin.label = "all";
  bin.age_lo = 0;
  bin.age_hi = kMaxAgeMonths;
  bin = fit_records(records, options, bin);
  if (!bin.fitted) {
    fail(ErrorCode::TooFewVerbs, "corpus has only " + std::to_string(bin.n_unique_verbs) + " distinct verbs");
  }
  return bin;
}

std::vector<BinFit> fit_by_age(const std::vector<SubjectVerbRecord>& records, const FitOptions& options) {
  if (options.bin_width <= 0) fail(ErrorCode::InvalidArgument, "bin width must be positive");
  const int n_bins = (kMaxAgeMonths + options.bin_width - 1) / options.bin_width;
  std::vector<std::vector<SubjectVerbRecord>> bins(static_cast<std::size_t>(n_bins));
  for (const auto& r : records) {
    if (!r.age_months) fail(ErrorCode::InvalidArgument, "age-stratified fit needs ages on every record");
    const int age = *r.age_months;
    if (age < 0 || age > kMaxAgeMonths) continue;
    const int b = std::min(age / options.bin_width, n_bins - 1);
    bins[static_cast<std::size_t>(b)].push_back(r);
  }
  std::vector<BinFit> out;
  for (int b = 0; b < n_bins; ++b) {
    BinFit bin;
    bin.age_lo = b * options.bin_width;
    bin.age_hi = std::min((b + 1) * options.bin_width, kMaxAgeMonths);
    bin.label = std::to_string(bin.age_lo) + "-" + std::to_string(bin.age_hi);
    out.push_back(fit_records(bins[static_cast<std::size_t>(b)], options, bin));
  }
  return out;
}

void write_fit_csv(const std::vector<BinFit>& fits, const std::filesystem::path& path) {
  std::string out = "bin,n_pairs,n_unique_verbs,n_unique_subjects,alpha_hat,mse,status\n";
  for (const auto& f : fits) {
    out += f.label + "," + std::to_string(f.n_pairs) + "," + std::to_string(f.n_unique_verbs) + "," +
           std::to_string(f.n_unique_subjects) + ",";
    out += f.fitted ? format_double(f.fit.alpha_hat) : "nan";
    out += ",";
    out += f.fitted ? format_double(f.fit.mse) : "nan";
    out += "," + f.status + "\n";
  }
  write_file(path, out);
}

std::vector<BinFit> read_fit_csv(const std::filesystem::path& path) {
  auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorCode::SchemaMismatch, path.string() + ": empty fit file");
  auto header = split(lines[0], ',');
  if (header.size() < 6 || header[0] != "bin" || header[4] != "alpha_hat" || header[5] != "mse") {
    fail(ErrorCode::SchemaMismatch, path.string() + ": not a fit CSV");
  }
  std::vector<BinFit> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    auto cols = split(lines[i], ',');
    if (cols.size() != header.size()) {
      fail(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(i + 1) + ": wrong column count");
    }
    BinFit f;
    f.label = cols[0];
    if (f.label != "all") {
      auto range = split(f.label, '-');
      if (range.size() != 2) fail(ErrorCode::SchemaMismatch, path.string() + ": bad bin label " + f.label);
      f.age_lo = static_cast<int>(parse_int(range[0]));
      f.age_hi = static_cast<int>(parse_int(range[1]));
    } else {
      f.age_hi = kMaxAgeMonths;
    }
    f.n_pairs = static_cast<std::size_t>(parse_int(cols[1]));
    f.n_unique_verbs = static_cast<std::size_t>(parse_int(cols[2]));
    f.n_unique_subjects = static_cast<std::size_t>(parse_int(cols[3]));
    f.fit.alpha_hat = parse_double(cols[4]);
    f.fit.mse = parse_double(cols[5]);
    f.fitted = std::isfinite(f.fit.alpha_hat);
    f.status = cols.size() > 6 ? cols[6] : (f.fitted ? "ok" : "unfit");
    out.push_back(f);
  }
  return out;
}

void write_profile_csv(const RankProfile& profile, const FitResult& fit, const std::filesystem::path& path) {
  const auto theo = theoretical_profile(fit.alpha_hat, profile.ranks());
  std::string out = "rank,empirical,theoretical\n";
  for (std::size_t r = 0; r < profile.ranks(); ++r) {
    out += std::to_string(r + 1) + "," + format_double(profile.f[r]) + "," + format_double(theo[r]) + "\n";
  }
  write_file(path, out);
}

}  // namespace colloc::zipf
