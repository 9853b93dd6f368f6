#include "colloc/grammar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "colloc/error.hpp"
#include "colloc/util.hpp"

namespace colloc {

namespace {

// Verb base forms; the agentive noun for stem k is derived from verb k.
struct StemSpec {
  const char* noun;
  const char* verb_sg;
  const char* verb_pl;
};

constexpr StemSpec kBuiltinStems[kStemCount] = {
    {"singer", "sings", "sing"},           {"dancer", "dances", "dance"},
    {"swimmer", "swims", "swim"},          {"twirler", "twirls", "twirl"},
    {"driver", "drives", "drive"},         {"writer", "writes", "write"},
    {"painter", "paints", "paint"},        {"builder", "builds", "build"},
    {"miner", "mines", "mine"},            {"charmer", "charms", "charm"},
    {"protector", "protects", "protect"},  {"lassoer", "lassos", "lasso"},
    {"baker", "bakes", "bake"},            {"hunter", "hunts", "hunt"},
    {"climber", "climbs", "climb"},        {"crafter", "crafts", "craft"},
    {"fisher", "fishes", "fish"},          {"bridger", "bridges", "bridge"},
    {"trader", "trades", "trade"},         {"teacher", "teaches", "teach"},
    {"listener", "listens", "listen"},     {"jumper", "jumps", "jump"},
    {"solver", "solves", "solve"},         {"challenger", "challenges", "challenge"},
    {"leader", "leads", "lead"},           {"orator", "orates", "orate"},
    {"embezzler", "embezzles", "embezzle"}, {"navigator", "navigates", "navigate"},
    {"collapser", "collapses", "collapse"}, {"player", "plays", "play"},
    {"runner", "runs", "run"},             {"reader", "reads", "read"},
    {"speaker", "speaks", "speak"},        {"walker", "walks", "walk"},
    {"farmer", "farms", "farm"},           {"skater", "skates", "skate"},
    {"rider", "rides", "ride"},            {"hiker", "hikes", "hike"},
    {"sailor", "sails", "sail"},           {"juggler", "juggles", "juggle"},
};

std::vector<LexEntry> builtin_entries() {
  std::vector<LexEntry> out;
  out.reserve(kStemCount);
  for (const auto& s : kBuiltinStems) {
    out.push_back({s.noun, std::string(s.noun) + "s", s.verb_sg, s.verb_pl});
  }
  return out;
}

}  // namespace

Lexicon::Lexicon(std::vector<LexEntry> entries) : entries_(std::move(entries)) {
  if (entries_.size() != static_cast<std::size_t>(kStemCount)) {
    fail(ErrorCode::InvalidArgument,
         "lexicon must have exactly 40 stems, got " + std::to_string(entries_.size()));
  }
  std::unordered_set<std::string> seen{determiner_, prepositions_[0], prepositions_[1]};
  for (const auto& e : entries_) {
    for (const std::string* w : {&e.noun_sg, &e.noun_pl, &e.verb_sg, &e.verb_pl}) {
      if (w->empty() || w->find_first_of(" \t\r\n") != std::string::npos) {
        fail(ErrorCode::InvalidArgument, "lexicon word must be a non-empty single token");
      }
      if (!seen.insert(*w).second) {
        fail(ErrorCode::InvalidArgument, "duplicate lexicon surface form: " + *w);
      }
    }
  }
  for (int k = 0; k < kStemCount; ++k) {
    const auto& e = entries_[k];
    index_[e.noun_sg] = {WordKind::Noun, k, Number::Singular};
    index_[e.noun_pl] = {WordKind::Noun, k, Number::Plural};
    index_[e.verb_sg] = {WordKind::Verb, k, Number::Singular};
    index_[e.verb_pl] = {WordKind::Verb, k, Number::Plural};
  }
  index_[determiner_] = {WordKind::Determiner, 0, Number::Singular};
  for (int p = 0; p < 2; ++p) index_[prepositions_[p]] = {WordKind::Preposition, p, Number::Singular};
}

const Lexicon& Lexicon::builtin() {
  static const Lexicon lex(builtin_entries());
  return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) {
  std::vector<LexEntry> entries;
  int line_no = 0;
  for (const auto& raw : read_lines(path)) {
    ++line_no;
    if (trim(raw).empty()) continue;
    auto cols = split(raw, '\t');
    if (cols.size() != 4) {
      fail(ErrorCode::MalformedRow,
           path.string() + ":" + std::to_string(line_no) + ": expected 4 tab-separated columns");
    }
    entries.push_back({std::string(trim(cols[0])), std::string(trim(cols[1])),
                       std::string(trim(cols[2])), std::string(trim(cols[3]))});
  }
  return Lexicon(std::move(entries));
}

void Lexicon::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& e : entries_) {
    out += e.noun_sg + '\t' + e.noun_pl + '\t' + e.verb_sg + '\t' + e.verb_pl + '\n';
  }
  write_file(path, out);
}

const std::string& Lexicon::noun(int stem, Number n) const {
  const auto& e = entries_.at(static_cast<std::size_t>(stem));
  return n == Number::Singular ? e.noun_sg : e.noun_pl;
}

const std::string& Lexicon::verb(int stem, Number n) const {
  const auto& e = entries_.at(static_cast<std::size_t>(stem));
  return n == Number::Singular ? e.verb_sg : e.verb_pl;
}

std::optional<Lexicon::WordInfo> Lexicon::lookup(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void ZipfParams::validate() const {
  if (std::isnan(alpha) || alpha < 0.0) {
    fail(ErrorCode::InvalidArgument, "alpha must be >= 0 or infinite");
  }
  if (support <= 0 || cutoff <= 0 || cutoff > support) {
    fail(ErrorCode::InvalidArgument, "require 0 < cutoff <= support");
  }
}

std::vector<double> subject_distribution(int verb_stem, const ZipfParams& params) {
  params.validate();
  if (verb_stem < 0 || verb_stem >= params.support) {
    fail(ErrorCode::InvalidArgument, "verb stem out of range");
  }
  std::vector<double> by_offset(static_cast<std::size_t>(params.support), 0.0);
  if (params.infinite()) {
    by_offset[0] = 1.0;
  } else {
    for (int k = 0; k < params.cutoff; ++k) {
      by_offset[k] = std::pow(static_cast<double>(k + 1), -params.alpha);
    }
    double total = std::accumulate(by_offset.begin(), by_offset.end(), 0.0);
    for (double& p : by_offset) p /= total;
  }
  std::vector<double> by_stem(by_offset.size(), 0.0);
  for (int j = 0; j < params.support; ++j) {
    by_stem[j] = by_offset[stem_offset(j, verb_stem, params.support)];
  }
  return by_stem;
}

std::vector<int> withheld_stems(int verb_stem, const ZipfParams& params) {
  params.validate();
  std::vector<int> out;
  for (int k = params.cutoff; k < params.support; ++k) {
    out.push_back((verb_stem + k) % params.support);
  }
  return out;
}

bool is_licensed(int stem, int verb_stem, const ZipfParams& params) {
  return stem_offset(stem, verb_stem, params.support) < params.cutoff;
}

const char* template_name(Template t) noexcept {
  switch (t) {
    case Template::NV: return "N-V";
    case Template::NPPV: return "N-PP-V";
    case Template::PPNV: return "PP-N-V";
    case Template::PPNPPV: return "PP-N-PP-V";
  }
  return "?";
}

Template parse_template(std::string_view name) {
  for (Template t : kAllTemplates) {
    if (name == template_name(t)) return t;
  }
  fail(ErrorCode::InvalidArgument, "unknown template: " + std::string(name));
}

bool Sentence::uniform_number() const noexcept {
  if (verb_number != subject_number) return false;
  if (pre && pre->number != subject_number) return false;
  if (post && post->number != subject_number) return false;
  return true;
}

std::vector<int> Sentence::pp_stems() const {
  std::vector<int> out;
  if (pre) out.push_back(pre->stem);
  if (post) out.push_back(post->stem);
  return out;
}

std::vector<std::string> render(const Sentence& s, const Lexicon& lex) {
  std::vector<std::string> w;
  w.reserve(9);
  auto pp = [&](const PrepPhrase& p) {
    w.push_back(lex.prepositions()[p.preposition]);
    w.push_back(lex.determiner());
    w.push_back(lex.noun(p.stem, p.number));
  };
  if (has_pre_pp(s.tmpl)) pp(s.pre.value());
  w.push_back(lex.determiner());
  w.push_back(lex.noun(s.subject, s.subject_number));
  if (has_post_pp(s.tmpl)) pp(s.post.value());
  w.push_back(lex.verb(s.verb, s.verb_number));
  return w;
}

std::string render_line(const Sentence& s, const Lexicon& lex) {
  return join(render(s, lex), " ");
}

Sentence parse_sentence(const std::vector<std::string>& words, const Lexicon& lex) {
  auto bad = [&](const std::string& why) -> Sentence {
    fail(ErrorCode::SchemaMismatch, "not a template sentence (" + why + "): " + join(words, " "));
  };
  std::vector<Lexicon::WordInfo> info;
  info.reserve(words.size());
  for (const auto& w : words) {
    auto i = lex.lookup(w);
    if (!i) fail(ErrorCode::UnknownWord, "unknown word: " + w);
    info.push_back(*i);
  }
  using K = Lexicon::WordKind;
  std::size_t pos = 0;
  auto take_pp = [&](PrepPhrase& out) {
    if (pos + 3 > info.size() || info[pos].kind != K::Preposition ||
        info[pos + 1].kind != K::Determiner || info[pos + 2].kind != K::Noun) {
      return false;
    }
    out = {info[pos].index, info[pos + 2].index, info[pos + 2].number};
    pos += 3;
    return true;
  };
  Sentence s;
  PrepPhrase pp;
  if (!info.empty() && info[0].kind == K::Preposition) {
    if (!take_pp(pp)) return bad("malformed leading PP");
    s.pre = pp;
  }
  if (pos + 2 > info.size() || info[pos].kind != K::Determiner || info[pos + 1].kind != K::Noun) {
    return bad("missing subject");
  }
  s.subject = info[pos + 1].index;
  s.subject_number = info[pos + 1].number;
  pos += 2;
  if (pos < info.size() && info[pos].kind == K::Preposition) {
    if (!take_pp(pp)) return bad("malformed PP after subject");
    s.post = pp;
  }
  if (pos + 1 != info.size() || info[pos].kind != K::Verb) return bad("missing final verb");
  s.verb = info[pos].index;
  s.verb_number = info[pos].number;
  s.tmpl = s.pre ? (s.post ? Template::PPNPPV : Template::PPNV)
                 : (s.post ? Template::NPPV : Template::NV);
  return s;
}

Sentence parse_sentence_line(std::string_view line, const Lexicon& lex) {
  return parse_sentence(split_whitespace(line), lex);
}

SentenceSampler::SentenceSampler(const ZipfParams& params, TemplateWeights weights)
    : params_(params), weights_(weights) {
  params_.validate();
  double wsum = 0.0;
  for (double w : weights_.weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) fail(ErrorCode::InvalidArgument, "bad template weight");
    wsum += w;
  }
  if (wsum <= 0.0) fail(ErrorCode::InvalidArgument, "template weights sum to zero");
  double acc = 0.0;
  for (std::size_t t = 0; t < 4; ++t) {
    acc += weights_.weights[t] / wsum;
    template_cdf_[t] = acc;
  }
  template_cdf_[3] = 1.0;

  // CDF indexed by offset; entries past the last positive mass are pinned to 1
  // so withheld offsets can never be drawn.
  subject_cdf_.resize(static_cast<std::size_t>(params_.support));
  for (int i = 0; i < params_.support; ++i) {
    auto p = subject_distribution(i, params_);
    std::vector<double> cdf(p.size());
    double c = 0.0;
    int last_positive = 0;
    for (int k = 0; k < params_.support; ++k) {
      double pk = p[(i + k) % params_.support];
      c += pk;
      cdf[k] = c;
      if (pk > 0.0) last_positive = k;
    }
    for (int k = last_positive; k < params_.support; ++k) cdf[k] = 1.0;
    subject_cdf_[i] = std::move(cdf);
  }
}

Sentence SentenceSampler::operator()(Rng& rng) const {
  std::uniform_int_distribution<int> verb_form(0, 2 * params_.support - 1);
  std::uniform_int_distribution<int> licensed(0, params_.cutoff - 1);
  std::uniform_int_distribution<int> prep(0, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  Sentence s;
  int form = verb_form(rng);
  s.verb = form / 2;
  s.verb_number = static_cast<Number>(form % 2);
  s.subject_number = s.verb_number;

  double ut = unit(rng);
  s.tmpl = kAllTemplates[static_cast<std::size_t>(
      std::upper_bound(template_cdf_.begin(), template_cdf_.end(), ut) - template_cdf_.begin())];

  const auto& cdf = subject_cdf_[static_cast<std::size_t>(s.verb)];
  double us = unit(rng);
  int offset = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), us) - cdf.begin());
  s.subject = (s.verb + offset) % params_.support;

  auto draw_pp = [&]() {
    PrepPhrase pp;
    pp.preposition = prep(rng);
    pp.stem = (s.verb + licensed(rng)) % params_.support;
    pp.number = s.subject_number;
    return pp;
  };
  if (has_pre_pp(s.tmpl)) s.pre = draw_pp();
  if (has_post_pp(s.tmpl)) s.post = draw_pp();
  return s;
}

Dataset generate_dataset(double alpha, std::uint64_t seed, const DatasetConfig& config) {
  if (!(alpha == kInfiniteAlpha || (alpha >= 0.0 && alpha <= 3.0 + 1e-9))) {
    fail(ErrorCode::InvalidArgument, "alpha must be in [0, 3] or infinite");
  }
  if (config.n_sentences <= 0) fail(ErrorCode::InvalidArgument, "n_sentences must be positive");
  if (config.train_fraction < 0 || config.valid_fraction < 0 ||
      config.train_fraction + config.valid_fraction > 1.0) {
    fail(ErrorCode::InvalidArgument, "invalid split fractions");
  }
  Dataset d;
  d.params = ZipfParams{alpha, config.cutoff, kStemCount};
  d.seed = seed;
  d.config = config;

  SentenceSampler sampler(d.params, config.template_weights);
  Rng rng(seed);
  const auto target = static_cast<std::size_t>(config.n_sentences);
  const std::uint64_t budget = config.attempt_budget_factor * target;
  std::unordered_set<std::string> seen;
  seen.reserve(target * 2);
  std::vector<Sentence> all;
  all.reserve(target);
  const Lexicon& lex = Lexicon::builtin();
  for (std::uint64_t attempt = 0; all.size() < target; ++attempt) {
    if (attempt >= budget) {
      fail(ErrorCode::GenerationExhausted,
           "only " + std::to_string(all.size()) + " unique sentences after " +
               std::to_string(budget) + " attempts");
    }
    Sentence s = sampler(rng);
    if (seen.insert(render_line(s, lex)).second) all.push_back(s);
  }

  std::vector<std::size_t> order(all.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(config.train_fraction * target));
  const auto n_valid = static_cast<std::size_t>(std::llround(config.valid_fraction * target));
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Sentence& s = all[order[k]];
    if (k < n_train) {
      d.train.push_back(s);
    } else if (k < n_train + n_valid) {
      d.valid.push_back(s);
    } else {
      d.test.push_back(s);
    }
  }
  return d;
}

DatasetManifest DatasetManifest::from_dataset(const Dataset& d) {
  DatasetManifest m;
  m.alpha = d.params.alpha;
  m.seed = d.seed;
  m.cutoff = d.params.cutoff;
  m.support = d.params.support;
  m.n_train = d.train.size();
  m.n_valid = d.valid.size();
  m.n_test = d.test.size();
  m.template_weights = d.config.template_weights;
  for (int i = 0; i < d.params.support; ++i) m.withheld.push_back(withheld_stems(i, d.params));
  return m;
}

std::string dataset_dir_name(double alpha, std::uint64_t seed) {
  return "data_" + format_alpha(alpha) + "_" + std::to_string(seed);
}

void write_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  if (std::isinf(m.alpha)) {
    j["alpha"] = "inf";
  } else {
    j["alpha"] = m.alpha;
  }
  j["seed"] = m.seed;
  j["cutoff"] = m.cutoff;
  j["support"] = m.support;
  j["splits"] = {{"train", m.n_train}, {"valid", m.n_valid}, {"test", m.n_test}};
  nlohmann::ordered_json tw;
  for (Template t : kAllTemplates) tw[template_name(t)] = m.template_weights.weights[static_cast<int>(t)];
  j["template_weights"] = tw;
  j["preposition_weights"] = {{"by", 0.5}, {"near", 0.5}};
  j["pp_object_may_repeat_subject"] = true;
  j["withheld"] = m.withheld;
  write_file(path, j.dump(2) + "\n");
}

DatasetManifest read_manifest(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  DatasetManifest m;
  try {
    const auto& a = j.at("alpha");
    m.alpha = a.is_string() ? parse_alpha(a.get<std::string>()) : a.get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.cutoff = j.at("cutoff").get<int>();
    m.support = j.at("support").get<int>();
    m.n_train = j.at("splits").at("train").get<std::size_t>();
    m.n_valid = j.at("splits").at("valid").get<std::size_t>();
    m.n_test = j.at("splits").at("test").get<std::size_t>();
    if (j.contains("template_weights")) {
      for (Template t : kAllTemplates) {
        m.template_weights.weights[static_cast<int>(t)] =
            j["template_weights"].at(template_name(t)).get<double>();
      }
    }
    m.withheld = j.at("withheld").get<std::vector<std::vector<int>>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": " + e.what());
  }
  if (m.withheld.size() != static_cast<std::size_t>(m.support)) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": withheld table must have one row per verb");
  }
  for (const auto& row : m.withheld) {
    for (int s : row) {
      if (s < 0 || s >= m.support) fail(ErrorCode::SchemaMismatch, "withheld stem out of range");
    }
  }
  return m;
}

void write_dataset(const Dataset& d, const std::filesystem::path& dir, const Lexicon& lex) {
  std::filesystem::create_directories(dir);
  auto dump = [&](const std::vector<Sentence>& v, const char* name) {
    std::string out;
    for (const auto& s : v) {
      out += render_line(s, lex);
      out += '\n';
    }
    write_file(dir / name, out);
  };
  dump(d.train, "train.txt");
  dump(d.valid, "valid.txt");
  dump(d.test, "test.txt");
  write_manifest(DatasetManifest::from_dataset(d), dir / kManifestFile);
}

Dataset read_dataset(const std::filesystem::path& dir, const Lexicon& lex) {
  if (!std::filesystem::exists(dir / kManifestFile)) {
    fail(ErrorCode::MissingInput, "no manifest in " + dir.string());
  }
  DatasetManifest m = read_manifest(dir / kManifestFile);
  Dataset d;
  d.params = m.zipf();
  d.seed = m.seed;
  d.config.cutoff = m.cutoff;
  d.config.template_weights = m.template_weights;
  auto load = [&](const char* name, std::size_t expected) {
    std::vector<Sentence> out;
    for (const auto& line : read_lines(dir / name)) {
      if (trim(line).empty()) continue;
      out.push_back(parse_sentence_line(line, lex));
    }
    if (out.size() != expected) {
      fail(ErrorCode::SchemaMismatch, std::string(name) + ": expected " + std::to_string(expected) +
                                          " sentences, found " + std::to_string(out.size()));
    }
    return out;
  };
  d.train = load("train.txt", m.n_train);
  d.valid = load("valid.txt", m.n_valid);
  d.test = load("test.txt", m.n_test);
  d.config.n_sentences = static_cast<int>(d.size());
  return d;
}

}  // namespace colloc
