#include "colloc/evaluator.hpp"

#include <unordered_set>

#include "colloc/error.hpp"
#include "colloc/util.hpp"

namespace colloc {

std::string EvalCondition::name() const {
  std::string out = lexical == Lexicality::Seen ? "SEEN" : "UNSEEN";
  out += attractor == Attractor::Match ? "-MATCH" : "-MISMATCH";
  return out;
}

EvalCondition EvalCondition::parse(std::string_view name) {
  for (const auto& c : kAllConditions) {
    if (c.name() == name) return c;
  }
  fail(ErrorCode::SchemaMismatch, "unknown condition: " + std::string(name));
}

int EvalCondition::index() const noexcept {
  for (int i = 0; i < 4; ++i) {
    if (kAllConditions[static_cast<std::size_t>(i)] == *this) return i;
  }
  return -1;
}

std::uint64_t suite_seed(std::uint64_t base_seed, EvalCondition condition) {
  return combine_seed(base_seed, 0x7375697465ULL + static_cast<std::uint64_t>(condition.index()));
}

namespace {

std::vector<std::vector<int>> eligible_sets(EvalCondition condition, const DatasetManifest& m) {
  std::vector<std::vector<int>> out(static_cast<std::size_t>(m.support));
  for (int i = 0; i < m.support; ++i) {
    const auto& withheld = m.withheld[static_cast<std::size_t>(i)];
    if (condition.lexical == Lexicality::Unseen) {
      out[static_cast<std::size_t>(i)] = withheld;
    } else {
      std::unordered_set<int> w(withheld.begin(), withheld.end());
      for (int j = 0; j < m.support; ++j) {
        if (!w.count((i + j) % m.support)) out[static_cast<std::size_t>(i)].push_back((i + j) % m.support);
      }
    }
  }
  return out;
}

}  // namespace

std::vector<MinimalPair> generate_pairs(EvalCondition condition, const DatasetManifest& manifest, std::size_t n,
                                        std::uint64_t seed) {
  if (manifest.withheld.size() != static_cast<std::size_t>(manifest.support)) {
    fail(ErrorCode::SchemaMismatch, "manifest withheld table does not cover every verb");
  }
  const auto eligible = eligible_sets(condition, manifest);

  // Distinct grammatical sentences available under the sampling constraints.
  double combos = 0.0;
  for (const auto& e : eligible) {
    const double k = static_cast<double>(e.size());
    const double pp_pairs = k >= 2 ? k * (k - 1) : k * k;
    combos += 2.0 /*numbers*/ * k * pp_pairs * 4.0 /*prepositions*/;
  }
  if (combos < static_cast<double>(n)) {
    fail(ErrorCode::InsufficientCombinations, "condition " + condition.name() + " admits only " +
                                                  std::to_string(static_cast<long long>(combos)) + " distinct pairs");
  }

  Rng rng(seed);
  std::uniform_int_distribution<int> verb_form(0, 2 * manifest.support - 1);
  std::uniform_int_distribution<int> prep(0, 1);
  std::unordered_set<std::string> seen;
  std::vector<MinimalPair> out;
  out.reserve(n);
  const std::uint64_t budget = 1000 * static_cast<std::uint64_t>(n) + 1000;
  for (std::uint64_t attempt = 0; out.size() < n; ++attempt) {
    if (attempt >= budget) {
      fail(ErrorCode::InsufficientCombinations, "could not draw " + std::to_string(n) + " distinct pairs for " +
                                                    condition.name());
    }
    const int form = verb_form(rng);
    const int verb = form / 2;
    const auto& pool = eligible[static_cast<std::size_t>(verb)];
    if (pool.empty()) continue;
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);

    Sentence g;
    g.tmpl = Template::PPNPPV;
    g.verb = verb;
    g.verb_number = static_cast<Number>(form % 2);
    g.subject_number = g.verb_number;
    g.subject = pool[pick(rng)];
    const Number pp_number =
        condition.attractor == Attractor::Match ? g.subject_number : opposite(g.subject_number);
    const int pre_stem = pool[pick(rng)];
    int post_stem = pool[pick(rng)];
    while (pool.size() >= 2 && post_stem == pre_stem) post_stem = pool[pick(rng)];
    g.pre = PrepPhrase{prep(rng), pre_stem, pp_number};
    g.post = PrepPhrase{prep(rng), post_stem, pp_number};

    if (!seen.insert(render_line(g)).second) continue;
    Sentence u = g;
    u.verb_number = opposite(g.verb_number);
    out.push_back({g, u, condition});
  }
  return out;
}

SuiteScore accuracy_from_logprobs(std::span<const std::pair<double, double>> logprobs) {
  if (logprobs.empty()) fail(ErrorCode::EmptySuite, "cannot score an empty suite");
  SuiteScore s;
  s.n = logprobs.size();
  for (const auto& [g, u] : logprobs) {
    if (score_pair(g, u)) ++s.n_correct;
  }
  return s;
}

SuiteScore score_suite(const Parameters<float>& params, std::span<const MinimalPair> pairs, const TokenVocab& vocab,
                       const Lexicon& lex) {
  if (pairs.empty()) fail(ErrorCode::EmptySuite, "cannot score an empty suite");
  std::vector<std::vector<TokenId>> seqs;
  seqs.reserve(2 * pairs.size());
  for (const auto& p : pairs) {
    auto g = render(p.grammatical, lex);
    auto u = render(p.ungrammatical, lex);
    seqs.push_back(vocab.encode(g));
    seqs.push_back(vocab.encode(u));
  }
  Workspace<float> ws;
  const auto lp = sequence_logprobs<float>(params, seqs, ws, 200);
  std::vector<std::pair<double, double>> pairs_lp(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) pairs_lp[i] = {lp[2 * i], lp[2 * i + 1]};
  return accuracy_from_logprobs(pairs_lp);
}

void write_suite(std::span<const MinimalPair> pairs, const std::filesystem::path& path, const Lexicon& lex) {
  std::string out;
  for (const auto& p : pairs) {
    out += p.condition.name();
    out += '\t';
    out += render_line(p.grammatical, lex);
    out += '\t';
    out += render_line(p.ungrammatical, lex);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<MinimalPair> read_suite(const std::filesystem::path& path, const Lexicon& lex) {
  std::vector<MinimalPair> out;
  int line_no = 0;
  for (const auto& line : read_lines(path)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cols = split(line, '\t');
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (cols.size() != 3) fail(ErrorCode::MalformedRow, where + ": expected 3 tab-separated columns");
    MinimalPair p;
    try {
      p.condition = EvalCondition::parse(trim(cols[0]));
      p.grammatical = parse_sentence_line(cols[1], lex);
      p.ungrammatical = parse_sentence_line(cols[2], lex);
    } catch (const Error& e) {
      fail(ErrorCode::MalformedRow, where + ": " + e.what());
    }
    out.push_back(p);
  }
  if (out.empty()) fail(ErrorCode::EmptySuite, path.string() + ": suite is empty");
  return out;
}

std::vector<ConditionResult> evaluate_suite(const Parameters<float>& params, std::span<const MinimalPair> pairs) {
  if (pairs.empty()) fail(ErrorCode::EmptySuite, "cannot score an empty suite");
  std::vector<ConditionResult> results;
  for (const auto& c : kAllConditions) {
    std::vector<MinimalPair> subset;
    for (const auto& p : pairs) {
      if (p.condition == c) subset.push_back(p);
    }
    if (subset.empty()) continue;
    results.push_back({c, score_suite(params, subset)});
  }
  return results;
}

void write_results(const std::vector<ConditionResult>& results, const std::filesystem::path& path) {
  std::string out = "condition,n,n_correct,accuracy\n";
  for (const auto& r : results) {
    out += r.condition.name() + "," + std::to_string(r.score.n) + "," + std::to_string(r.score.n_correct) + "," +
           format_double(r.score.accuracy()) + "\n";
  }
  write_file(path, out);
}

}  // namespace colloc
