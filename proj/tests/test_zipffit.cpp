#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "colloc/error.hpp"
#include "colloc/util.hpp"
#include "colloc/zipffit.hpp"
#include "support.hpp"

using namespace colloc;
using namespace colloc::zipf;

namespace {

std::string verb_name(int k) { return "v" + std::to_string(1000 + k); }
std::string subject_name(int r) { return "s" + std::to_string(1000 + r); }

// n_verbs verbs, each with `per_verb` pairs drawn from K / r^alpha over `ranks` subjects.
PairCounts synthetic_counts(double alpha, int n_verbs, int per_verb, int ranks, std::uint64_t seed) {
  const auto p = theoretical_profile(alpha, ranks);
  std::mt19937_64 rng(seed);
  std::discrete_distribution<int> pick(p.begin(), p.end());
  PairCounts counts;
  for (int k = 0; k < n_verbs; ++k) {
    std::vector<std::uint64_t> tally(ranks, 0);
    for (int i = 0; i < per_verb; ++i) ++tally[pick(rng)];
    // Rotate subject identities per verb so ranks are not tied to names.
    for (int r = 0; r < ranks; ++r) {
      if (tally[r] > 0) counts.add(verb_name(k), subject_name((r + 7 * k) % ranks), tally[r]);
    }
  }
  return counts;
}

double fit_synthetic(double alpha, std::uint64_t seed) {
  const auto counts = synthetic_counts(alpha, 20, 100000, 40, seed);
  return fit_alpha(empirical_rank_frequencies(counts, top_verbs(counts, 20))).alpha_hat;
}

}  // namespace

TEST_CASE("load_pairs") {
  testing::TempDir dir("pairs");
  write_file(dir / "ok.tsv", "subject_lemma\tverb_lemma\tage_months\nDog\tRun\t30\ncat\trun\t12.7\nman\teat\t\n");
  LoadStats stats;
  const auto recs = load_pairs(dir / "ok.tsv", &stats);
  REQUIRE(recs.size() == 3);
  CHECK(recs[0].subject == "dog");
  CHECK(recs[0].verb == "run");
  CHECK(recs[0].age_months == 30);
  CHECK(recs[1].age_months == 12);
  CHECK_FALSE(recs[2].age_months.has_value());
  CHECK(stats.kept == 3);

  write_file(dir / "age.tsv", "subject_lemma\tverb_lemma\tage_months\ndog\trun\t120\ncat\trun\t96\n");
  const auto aged = load_pairs(dir / "age.tsv", &stats);
  CHECK(aged.size() == 1);
  CHECK(stats.rejected_age == 1);

  write_file(dir / "ascii.tsv", "subject_lemma\tverb_lemma\nnino\tcome\nnina\tcomi\xc3\xb3\n");
  const auto ascii = load_pairs(dir / "ascii.tsv", &stats);
  CHECK(ascii.size() == 1);
  CHECK(stats.rejected_non_ascii == 1);

  write_file(dir / "empty.tsv", "");
  try {
    load_pairs(dir / "empty.tsv");
    FAIL("expected EmptyCorpus");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCorpus);
  }
  write_file(dir / "bad.tsv", "subject_lemma\tverb_lemma\ndog\trun\ncat\n");
  try {
    load_pairs(dir / "bad.tsv");
    FAIL("expected MalformedRow");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MalformedRow);
    CHECK(std::string(e.what()).find(":3") != std::string::npos);
  }
  write_file(dir / "hdr.tsv", "subj\tverb\ndog\trun\n");
  CHECK_THROWS_AS(load_pairs(dir / "hdr.tsv"), Error);
  write_file(dir / "negage.tsv", "subject_lemma\tverb_lemma\tage_months\ndog\trun\t-3\n");
  CHECK_THROWS_AS(load_pairs(dir / "negage.tsv"), Error);
}

TEST_CASE("top_verbs") {
  std::vector<SubjectVerbRecord> recs;
  for (int i = 0; i < 4; ++i) recs.push_back({"dog", "run", {}});
  for (int i = 0; i < 4; ++i) recs.push_back({"man", "eat", {}});
  recs.push_back({"cat", "see", {}});
  CHECK(top_verbs(recs, 2) == std::vector<std::string>{"eat", "run"});
  CHECK(top_verbs(recs, 1) == std::vector<std::string>{"eat"});
  CHECK(top_verbs(recs, 3).back() == "see");
  try {
    top_verbs(recs, 4);
    FAIL("expected TooFewVerbs");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::TooFewVerbs);
  }
}

TEST_CASE("empirical_rank_frequencies hand examples") {
  PairCounts c;
  c.add("run", "dog", 3);
  c.add("run", "cat", 1);
  c.add("eat", "man", 2);
  c.add("eat", "dog", 1);
  c.add("eat", "cat", 1);
  const auto p = empirical_rank_frequencies(c, {"run", "eat"});
  REQUIRE(p.ranks() == 3);
  CHECK(p.f[0] == doctest::Approx(0.625).epsilon(1e-15));
  CHECK(p.f[1] == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(p.f[2] == doctest::Approx(0.125).epsilon(1e-15));
  CHECK(c.n_pairs() == 8);
  CHECK(c.n_subjects() == 3);
  CHECK(empirical_rank_frequencies(c, {"run", "eat"}, 2).ranks() == 2);

  PairCounts single;
  single.add("go", "i", 5);
  const auto s = empirical_rank_frequencies(single, {"go"});
  CHECK(s.f == std::vector<double>{1.0});
  CHECK_THROWS_AS(empirical_rank_frequencies(c, {"fly"}), Error);

  const auto counts = synthetic_counts(1.0, 10, 2000, 25, 3);
  const auto prof = empirical_rank_frequencies(counts, top_verbs(counts, 10));
  CHECK(prof.f[0] > 0.0);
  CHECK(prof.f[0] <= 1.0);
  for (std::size_t r = 1; r < prof.ranks(); ++r) CHECK(prof.f[r] <= prof.f[r - 1]);
}

TEST_CASE("theoretical_profile") {
  CHECK(theoretical_profile(0.0, 4) == std::vector<double>{0.25, 0.25, 0.25, 0.25});
  const auto t = theoretical_profile(1.0, 3);
  CHECK(t[0] == doctest::Approx(6.0 / 11).epsilon(1e-15));
  CHECK(t[1] == doctest::Approx(3.0 / 11).epsilon(1e-15));
  CHECK(t[2] == doctest::Approx(2.0 / 11).epsilon(1e-15));
  for (double a : {0.0, 0.37, 1.0, 1.43, 2.99}) {
    for (std::size_t r : {1u, 7u, 100u, 5000u}) {
      const auto v = theoretical_profile(a, r);
      CHECK(std::abs(std::accumulate(v.begin(), v.end(), 0.0) - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("alpha grid") {
  const AlphaGrid g;
  CHECK(g.size() == 301);
  CHECK(g.at(0) == 0.0);
  CHECK(g.at(143) == 1.43);
  CHECK(g.at(300) == 3.0);
  const auto p = AlphaGrid::parse("0.5:1:0.25");
  CHECK(p.size() == 3);
  CHECK(p.at(2) == 1.0);
  CHECK_THROWS_AS(AlphaGrid::parse("0:3"), Error);
  CHECK_THROWS_AS(AlphaGrid::parse("1:0:0.1"), Error);
}

TEST_CASE("fit_alpha oracles") {
  RankProfile p;
  p.f = theoretical_profile(1.50, 50);
  const auto self = fit_alpha(p);
  CHECK(self.alpha_hat == 1.50);
  CHECK(self.mse < 1e-20);
  CHECK(self.ranks == 50);

  p.f.assign(20, 1.0 / 20);
  CHECK(fit_alpha(p).alpha_hat == 0.0);

  for (double a : {0.0, 0.77, 1.43, 2.5}) {
    p.f = theoretical_profile(a, 60);
    CHECK(std::abs(fit_alpha(p).alpha_hat - a) <= 0.01 + 1e-12);
  }
}

TEST_CASE("fit_alpha is the exhaustive grid minimum") {
  const auto counts = synthetic_counts(1.3, 15, 3000, 30, 11);
  const auto prof = empirical_rank_frequencies(counts, top_verbs(counts, 15));
  const AlphaGrid grid;
  const auto fit = fit_alpha(prof, grid);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CHECK(mse(prof.f, theoretical_profile(grid.at(i), prof.ranks())) >= fit.mse);
  }
  CHECK(fit.mse == mse(prof.f, theoretical_profile(fit.alpha_hat, prof.ranks())));
}

TEST_CASE("doubling every count leaves the fit unchanged") {
  const auto counts = synthetic_counts(0.9, 12, 2000, 30, 5);
  PairCounts doubled;
  for (const auto& [verb, subjects] : counts.table()) {
    for (const auto& [subject, n] : subjects) doubled.add(verb, subject, 2 * n);
  }
  const auto a = empirical_rank_frequencies(counts, top_verbs(counts, 12));
  const auto b = empirical_rank_frequencies(doubled, top_verbs(doubled, 12));
  CHECK(a.f == b.f);
  CHECK(fit_alpha(a).alpha_hat == fit_alpha(b).alpha_hat);
}

TEST_CASE("monotone recovery on sampled corpora") {
  double prev = -1.0;
  for (double a : {0.5, 1.0, 1.5, 2.0}) {
    const double hat = fit_synthetic(a, 100 + static_cast<std::uint64_t>(a * 10));
    INFO("alpha " << a << " -> " << hat);
    CHECK(std::abs(hat - a) <= 0.05);
    CHECK(hat > prev);
    prev = hat;
  }
}

TEST_CASE("fit_by_age recovers a constant alpha in every bin") {
  std::vector<SubjectVerbRecord> recs;
  const auto p = theoretical_profile(1.2, 30);
  std::mt19937_64 rng(42);
  std::discrete_distribution<int> pick(p.begin(), p.end());
  for (int bin = 0; bin < 8; ++bin) {
    for (int k = 0; k < 20; ++k) {
      for (int i = 0; i < 5000; ++i) {
        const int age = bin * 12 + static_cast<int>(rng() % 12) + (bin == 7 ? 1 : 0);
        recs.push_back({subject_name((pick(rng) + k) % 30), verb_name(k), age});
      }
    }
  }
  FitOptions opts;
  opts.top_k = 20;
  const auto fits = fit_by_age(recs, opts);
  REQUIRE(fits.size() == 8);
  CHECK(fits[0].label == "0-12");
  CHECK(fits[7].label == "84-96");
  for (const auto& b : fits) {
    INFO(b.label);
    REQUIRE(b.fitted);
    CHECK(b.n_pairs == 100000);
    CHECK(b.n_unique_verbs == 20);
    CHECK(std::abs(b.fit.alpha_hat - 1.2) <= 0.02);
  }
  const auto all = fit_overall(recs, opts);
  CHECK(all.label == "all");
  CHECK(std::abs(all.fit.alpha_hat - 1.2) <= 0.02);

  testing::TempDir dir("fit");
  write_fit_csv(fits, dir / "fit.csv");
  CHECK(read_lines(dir / "fit.csv")[0].rfind("bin,n_pairs,n_unique_verbs,n_unique_subjects,alpha_hat,mse", 0) == 0);
  const auto back = read_fit_csv(dir / "fit.csv");
  REQUIRE(back.size() == 8);
  CHECK(back[3].fit.alpha_hat == fits[3].fit.alpha_hat);
  CHECK(back[3].n_pairs == fits[3].n_pairs);
}

TEST_CASE("small age bins are reported unfit") {
  std::vector<SubjectVerbRecord> recs;
  for (int k = 0; k < 5; ++k) {
    for (int i = 0; i < 10; ++i) recs.push_back({subject_name(i % 3), verb_name(k), 20});
  }
  recs.push_back({"dog", "run", 50});
  FitOptions opts;
  opts.top_k = 5;
  const auto fits = fit_by_age(recs, opts);
  REQUIRE(fits.size() == 8);
  CHECK(fits[1].fitted);
  CHECK_FALSE(fits[0].fitted);
  CHECK(fits[0].status == "BinTooSmall");
  CHECK_FALSE(fits[4].fitted);
  CHECK(fits[4].n_pairs == 1);
  recs.push_back({"dog", "run", std::nullopt});
  CHECK_THROWS_AS(fit_by_age(recs, opts), Error);
}
