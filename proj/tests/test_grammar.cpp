#include <doctest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "colloc/error.hpp"
#include "colloc/grammar.hpp"
#include "colloc/util.hpp"
#include "support.hpp"

using namespace colloc;

TEST_CASE("builtin lexicon shape") {
  const auto& lex = Lexicon::builtin();
  REQUIRE(lex.entries().size() == 40);
  std::set<std::string> forms;
  for (const auto& e : lex.entries()) {
    forms.insert(e.noun_sg);
    forms.insert(e.noun_pl);
    forms.insert(e.verb_sg);
    forms.insert(e.verb_pl);
  }
  forms.insert(lex.determiner());
  for (const auto& p : lex.prepositions()) forms.insert(p);
  CHECK(forms.size() == 80 + 80 + 1 + 2);
  CHECK(lex.noun(0, Number::Singular) == "singer");
  CHECK(lex.verb(0, Number::Singular) == "sings");
  CHECK(lex.verb(0, Number::Plural) == "sing");
  auto info = lex.lookup("twirlers");
  REQUIRE(info);
  CHECK(info->kind == Lexicon::WordKind::Noun);
  CHECK(info->number == Number::Plural);
  CHECK(lex.verb(info->index, Number::Singular) == "twirls");
}

TEST_CASE("checked-in lexicon.txt matches the builtin lexicon") {
  const auto lex = Lexicon::load(std::filesystem::path(COLLOC_SOURCE_DIR) / "data/lexicon.txt");
  CHECK(lex.entries() == Lexicon::builtin().entries());
}

TEST_CASE("lexicon save/load round trip and validation") {
  testing::TempDir dir("lex");
  Lexicon::builtin().save(dir / "lexicon.txt");
  CHECK(Lexicon::load(dir / "lexicon.txt").entries() == Lexicon::builtin().entries());
  write_file(dir / "bad.txt", "singer\tsingers\tsings\n");
  CHECK_THROWS_AS(Lexicon::load(dir / "bad.txt"), Error);
  auto entries = Lexicon::builtin().entries();
  entries[1].noun_sg = entries[0].noun_sg;
  CHECK_THROWS_AS(Lexicon{entries}, Error);
}

TEST_CASE("subject_distribution examples") {
  SUBCASE("uniform over the 30 allowed stems at alpha 0") {
    const auto p = subject_distribution(0, {0.0});
    for (int j = 0; j < 30; ++j) CHECK(p[j] == doctest::Approx(1.0 / 30).epsilon(1e-12));
    for (int j = 30; j < 40; ++j) CHECK(p[j] == 0.0);
  }
  SUBCASE("all mass on the verb's own stem at infinity") {
    const auto p = subject_distribution(0, {kInfiniteAlpha});
    CHECK(p[0] == 1.0);
    CHECK(std::accumulate(p.begin() + 1, p.end(), 0.0) == 0.0);
  }
  SUBCASE("alpha 1 against the 30-term harmonic normalizer") {
    double h30 = 0.0;
    for (int m = 1; m <= 30; ++m) h30 += 1.0 / m;
    const auto p = subject_distribution(0, {1.0});
    CHECK(p[0] == doctest::Approx(1.0 / h30).epsilon(1e-12));
    CHECK(p[0] == doctest::Approx(0.2503).epsilon(1e-3));
    CHECK(p[29] == doctest::Approx(0.00834).epsilon(1e-3));
  }
  SUBCASE("support wraps modulo 40") {
    const auto p = subject_distribution(35, {0.0});
    std::set<int> support;
    for (int j = 0; j < 40; ++j) {
      if (p[j] > 0) support.insert(j);
    }
    std::set<int> expected{35, 36, 37, 38, 39};
    for (int j = 0; j <= 24; ++j) expected.insert(j);
    CHECK(support == expected);
  }
}

TEST_CASE("subject_distribution properties") {
  for (int i = 0; i < 40; ++i) {
    double prev_head = 0.0;
    for (double a : {0.0, 0.3, 0.77, 1.0, 1.4, 2.0, 3.0, kInfiniteAlpha}) {
      const auto p = subject_distribution(i, {a});
      CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
      for (int off = 1; off < 30; ++off) {
        CHECK(p[(i + off) % 40] <= p[(i + off - 1) % 40]);
      }
      CHECK(p[i] >= prev_head);
      prev_head = p[i];
    }
  }
  CHECK_THROWS_AS(subject_distribution(40, {1.0}), Error);
  CHECK_THROWS_AS(subject_distribution(0, {-1.0}), Error);
}

TEST_CASE("withheld_stems examples") {
  std::vector<int> w0(10);
  std::iota(w0.begin(), w0.end(), 30);
  CHECK(withheld_stems(0) == w0);
  CHECK(withheld_stems(5) == std::vector<int>{35, 36, 37, 38, 39, 0, 1, 2, 3, 4});
  CHECK(withheld_stems(39) == std::vector<int>{29, 30, 31, 32, 33, 34, 35, 36, 37, 38});
  for (int i = 0; i < 40; ++i) {
    for (int j : withheld_stems(i)) CHECK_FALSE(is_licensed(j, i));
  }
}

TEST_CASE("sampler at infinity pairs each verb with its own noun") {
  SentenceSampler sampler({kInfiniteAlpha});
  Rng rng(11);
  bool found = false;
  for (int k = 0; k < 20000 && !found; ++k) {
    const Sentence s = sampler(rng);
    CHECK(s.subject == s.verb);
    if (s.tmpl == Template::NV && s.verb_number == Number::Singular &&
        Lexicon::builtin().verb(s.verb, Number::Singular) == "twirls") {
      CHECK(render_line(s) == "the twirler twirls");
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("sampler output satisfies sentence invariants") {
  for (double a : {0.0, 1.5, kInfiniteAlpha}) {
    SentenceSampler sampler({a});
    Rng rng(3);
    for (int k = 0; k < 5000; ++k) {
      const Sentence s = sampler(rng);
      CHECK(s.uniform_number());
      CHECK(s.agrees());
      CHECK(is_licensed(s.subject, s.verb));
      for (int pp : s.pp_stems()) CHECK(is_licensed(pp, s.verb));
      CHECK(parse_sentence(render(s)) == s);
    }
  }
}

TEST_CASE("sampler at alpha 0 is within TV 0.02 of uniform over 30 offsets") {
  SentenceSampler sampler({0.0});
  Rng rng(2024);
  std::vector<long> counts(40, 0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    const Sentence s = sampler(rng);
    ++counts[stem_offset(s.subject, s.verb)];
  }
  double tv = 0.0;
  for (int off = 0; off < 40; ++off) tv += std::abs(counts[off] / double(n) - (off < 30 ? 1.0 / 30 : 0.0));
  CHECK(tv / 2 < 0.02);
  for (int off = 30; off < 40; ++off) CHECK(counts[off] == 0);
}

TEST_CASE("verb forms are uniform over the 80 inflected verbs") {
  SentenceSampler sampler({1.4});
  Rng rng(8);
  std::vector<long> counts(80, 0);
  for (int k = 0; k < 80000; ++k) {
    const Sentence s = sampler(rng);
    ++counts[s.verb * 2 + static_cast<int>(s.verb_number)];
  }
  const auto chi = testing::chi_square(counts, std::vector<double>(80, 1.0 / 80));
  CHECK(chi.p_value > 0.001);
}

TEST_CASE("templates render and parse back") {
  Sentence s;
  s.tmpl = Template::PPNPPV;
  s.subject = 0;
  s.verb = 0;
  s.subject_number = s.verb_number = Number::Plural;
  s.pre = PrepPhrase{1, 2, Number::Plural};
  s.post = PrepPhrase{0, 3, Number::Plural};
  CHECK(render_line(s) == "near the swimmers the singers by the " + Lexicon::builtin().noun(3, Number::Plural) + " sing");
  CHECK(parse_sentence_line(render_line(s)) == s);
  for (const char* line : {"the driver leads", "by the solver the challenger trades",
                           "the dancers near the writers embezzle",
                           "by the twirlers the painters near the singers navigate", "the hunters listen",
                           "by the builder the twirler collapses", "by the swimmers the bridgers bridge",
                           "near the miner the jumper near the painter jumps", "the twirler twirls",
                           "by the charmers the miners mine", "the builders near the protectors build",
                           "near the swimmers the lassoers by the bakers lasso"}) {
    CHECK(render_line(parse_sentence_line(line)) == line);
  }
  CHECK_THROWS_AS(parse_sentence_line("the xylophone sings"), Error);
  CHECK_THROWS_AS(parse_sentence_line("sings the singer"), Error);
  CHECK(std::string(template_name(Template::NPPV)) == "N-PP-V");
  CHECK(parse_template("PP-N-PP-V") == Template::PPNPPV);
}

TEST_CASE("generate_dataset counts, uniqueness and licensing") {
  const Dataset d = generate_dataset(0.0, 3);
  CHECK(d.train.size() == 9600);
  CHECK(d.valid.size() == 1200);
  CHECK(d.test.size() == 1200);
  std::set<std::string> lines;
  for (const auto* split : {&d.train, &d.valid, &d.test}) {
    for (const auto& s : *split) {
      lines.insert(render_line(s));
      CHECK(is_licensed(s.subject, s.verb));
      for (int pp : s.pp_stems()) CHECK(is_licensed(pp, s.verb));
    }
  }
  CHECK(lines.size() == 12000);
}

TEST_CASE("generate_dataset is deterministic") {
  testing::TempDir dir("ds");
  write_dataset(generate_dataset(1.5, 7), dir / "a");
  write_dataset(generate_dataset(1.5, 7), dir / "b");
  for (const char* f : {"train.txt", "valid.txt", "test.txt", "manifest.json"}) {
    CHECK(read_file(dir / "a" / f) == read_file(dir / "b" / f));
  }
  write_dataset(generate_dataset(1.5, 8), dir / "c");
  CHECK(read_file(dir / "a/train.txt") != read_file(dir / "c/train.txt"));
}

TEST_CASE("generate_dataset at infinity still reaches 12000 unique sentences") {
  const Dataset d = generate_dataset(kInfiniteAlpha, 1);
  CHECK(d.size() == 12000);
  for (const auto& s : d.train) CHECK(s.subject == s.verb);
}

TEST_CASE("generate_dataset exhaustion and argument errors") {
  DatasetConfig cfg;
  cfg.n_sentences = 100;
  cfg.attempt_budget_factor = 100;
  cfg.template_weights.weights = {1, 0, 0, 0};  // only 80 distinct N-V sentences at infinity
  try {
    generate_dataset(kInfiniteAlpha, 1, cfg);
    FAIL("expected GenerationExhausted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GenerationExhausted);
  }
  CHECK_THROWS_AS(generate_dataset(3.5, 1), Error);
  CHECK_THROWS_AS(generate_dataset(-0.1, 1), Error);
}

TEST_CASE("dataset and manifest round trip") {
  testing::TempDir dir("rt");
  const Dataset d = generate_dataset(1.4, 5);
  const auto path = dir / dataset_dir_name(1.4, 5);
  CHECK(path.filename() == "data_1.4_5");
  write_dataset(d, path);
  const Dataset back = read_dataset(path);
  CHECK(back.train == d.train);
  CHECK(back.valid == d.valid);
  CHECK(back.test == d.test);
  CHECK(back.params.alpha == 1.4);
  const auto m = read_manifest(path / "manifest.json");
  CHECK(m.seed == 5);
  CHECK(m.n_train == 9600);
  REQUIRE(m.withheld.size() == 40);
  for (int i = 0; i < 40; ++i) CHECK(m.withheld[i] == withheld_stems(i));
  CHECK(dataset_dir_name(kInfiniteAlpha, 2) == "data_inf_2");
  write_file(dir / "broken.json", "{\"alpha\": 1}");
  CHECK_THROWS_AS(read_manifest(dir / "broken.json"), Error);
}
