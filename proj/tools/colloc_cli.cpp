// Command-line front end over the colloc C API.
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "colloc/colloc.h"

namespace {

int check(colloc_status s) {
  if (s != COLLOC_OK) std::fprintf(stderr, "error: %s: %s\n", colloc_status_name(s), colloc_last_error());
  return static_cast<int>(s);
}

double parse_alpha_arg(const std::string& text) {
  if (text == "inf" || text == "INF" || text == "infinity") return INFINITY;
  std::size_t used = 0;
  const double v = std::stod(text, &used);
  if (used != text.size()) throw CLI::ValidationError("--alpha", "not a number: " + text);
  return v;
}

struct TrainFlags {
  colloc_train_options o{};
  TrainFlags() { colloc_train_options_default(&o); }

  void add(CLI::App* cmd) {
    cmd->add_option("--layers", o.n_layers, "transformer blocks")->capture_default_str();
    cmd->add_option("--heads", o.n_heads, "attention heads")->capture_default_str();
    cmd->add_option("--d-model", o.d_model, "embedding width")->capture_default_str();
    cmd->add_option("--batch-size", o.batch_size, "sentences per batch")->capture_default_str();
    cmd->add_option("--batches-per-epoch", o.batches_per_epoch)->capture_default_str();
    cmd->add_option("--epochs", o.epochs)->capture_default_str();
    cmd->add_option("--validate-every", o.validate_every)->capture_default_str();
    cmd->add_option("--lr", o.learning_rate)->capture_default_str();
    cmd->add_option("--beta1", o.beta1)->capture_default_str();
    cmd->add_option("--beta2", o.beta2)->capture_default_str();
    cmd->add_option("--weight-decay", o.weight_decay)->capture_default_str();
  }
};

void print_train_progress(int step, double loss, void*) {
  if (step % 100 == 0) std::fprintf(stderr, "step %d loss %.4f\n", step, loss);
}

void print_sweep_progress(double alpha, int run, int ok, size_t done, size_t total, void*) {
  std::fprintf(stderr, "[%zu/%zu] alpha=%g run=%d %s\n", done, total, alpha, run, ok ? "ok" : "FAILED");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"colloc: agreement grammar, LM training, minimal-pair evaluation, Zipf fitting"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(colloc_version()));
  int rc = 0;

  // gen-data
  std::string alpha_text;
  std::uint64_t seed = 0;
  std::string out;
  auto* gen = app.add_subcommand("gen-data", "generate train/valid/test splits and manifest.json into --out");
  gen->add_option("--alpha", alpha_text, "Zipf exponent in [0,3] or inf")->required();
  gen->add_option("--seed", seed)->required();
  gen->add_option("--out", out, "output directory")->required();
  gen->callback([&] {
    colloc_dataset* d = nullptr;
    rc = check(colloc_dataset_generate(parse_alpha_arg(alpha_text), seed, &d));
    if (rc == 0) rc = check(colloc_dataset_write(d, out.c_str()));
    if (rc == 0) rc = check(colloc_write_lexicon((out + "/lexicon.txt").c_str()));
    colloc_dataset_free(d);
  });

  // make-suites
  std::string manifest;
  std::size_t n_pairs = 1000;
  auto* suites = app.add_subcommand("make-suites", "write the four minimal-pair suites for a dataset");
  suites->add_option("--data", manifest, "dataset directory or manifest.json")->required();
  suites->add_option("--seed", seed)->capture_default_str();
  suites->add_option("--n", n_pairs, "pairs per condition")->capture_default_str();
  suites->add_option("--out", out, "suite TSV")->required();
  suites->callback([&] {
    std::string m = manifest;
    if (m.size() < 5 || m.substr(m.size() - 5) != ".json") m += "/manifest.json";
    rc = check(colloc_make_suites(m.c_str(), n_pairs, seed, out.c_str()));
  });

  // train
  std::string data_dir;
  TrainFlags tf;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train one model; writes run.json, loss.csv, checkpoint.bin");
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--seed", tf.o.seed, "init and batch-order seed")->required();
  train->add_option("--out", out, "run directory")->required();
  train->add_flag("--quiet", quiet);
  tf.add(train);
  train->callback([&] {
    double best = 0;
    rc = check(colloc_train(data_dir.c_str(), &tf.o, out.c_str(), quiet ? nullptr : print_train_progress, nullptr,
                            &best));
    if (rc == 0) std::printf("best_val_loss %.6f\n", best);
  });

  // eval
  std::string checkpoint, suite;
  auto* eval = app.add_subcommand("eval", "score a suite; writes condition,n,n_correct,accuracy");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--suite", suite)->required();
  eval->add_option("--out", out, "results CSV")->required();
  eval->callback([&] { rc = check(colloc_evaluate(checkpoint.c_str(), suite.c_str(), out.c_str())); });

  // sweep
  colloc_sweep_options so{};
  colloc_sweep_options_default(&so);
  std::string alphas = so.alphas;
  TrainFlags sweep_tf;
  bool no_checkpoints = false;
  auto* sweep = app.add_subcommand("sweep", "train and evaluate every (alpha, run) cell; resumable");
  sweep->add_option("--alphas", alphas, "e.g. 0:3:0.1,inf")->capture_default_str();
  sweep->add_option("--runs", so.runs)->capture_default_str();
  sweep->add_option("--seed", so.base_seed, "base seed")->capture_default_str();
  sweep->add_option("--jobs", so.jobs, "parallel cells")->capture_default_str();
  sweep->add_option("--pairs", so.pairs_per_condition, "pairs per condition")->capture_default_str();
  sweep->add_flag("--no-checkpoints", no_checkpoints, "drop checkpoint.bin from run dirs");
  sweep->add_option("--out", out, "sweep directory")->required();
  sweep_tf.add(sweep);
  sweep->callback([&] {
    so.alphas = alphas.c_str();
    so.keep_checkpoints = no_checkpoints ? 0 : 1;
    so.train = sweep_tf.o;
    std::size_t failed = 0;
    rc = check(colloc_sweep(&so, out.c_str(), print_sweep_progress, nullptr, &failed));
    if (rc == 0 && failed) {
      std::fprintf(stderr, "%zu cell(s) failed; see %s/failures.csv\n", failed, out.c_str());
      rc = 1;
    }
  });

  // zipf-fit
  std::string pairs, grid, profile_out;
  colloc_zipf_options zo{};
  colloc_zipf_options_default(&zo);
  bool by_age = false;
  auto* zipf = app.add_subcommand("zipf-fit", "fit alpha to subject rank-frequency profiles");
  zipf->add_option("--pairs", pairs, "TSV: subject_lemma, verb_lemma[, age_months]")->required();
  zipf->add_flag("--by-age", by_age, "fit 12-month age bins");
  zipf->add_option("--top-verbs", zo.top_verbs)->capture_default_str();
  zipf->add_option("--grid", grid, "start:stop:step (default 0:3:0.01)");
  zipf->add_option("--max-rank", zo.max_rank, "cap on ranks (0: none)")->capture_default_str();
  zipf->add_option("--profile-out", profile_out, "rank,empirical,theoretical CSV");
  zipf->add_option("--out", out, "fit CSV")->required();
  zipf->callback([&] {
    zo.by_age = by_age ? 1 : 0;
    zo.grid = grid.empty() ? nullptr : grid.c_str();
    zo.profile_out = profile_out.empty() ? nullptr : profile_out.c_str();
    double a = NAN;
    rc = check(colloc_zipf_fit(pairs.c_str(), &zo, out.c_str(), &a));
    if (rc == 0 && !by_age) std::printf("alpha_hat %g\n", a);
  });

  // report
  std::string kind;
  std::vector<std::string> inputs;
  auto* rep = app.add_subcommand("report", "render an SVG figure and companion CSV");
  rep->add_option("--kind", kind)
      ->required()
      ->check(CLI::IsMember({"accuracy-vs-alpha", "rank-frequency-fit", "alpha-vs-age", "loss-curves",
                             "noun-distribution"}));
  rep->add_option("--in", inputs, "input files")->required();
  rep->add_option("--out", out, "SVG path")->required();
  rep->callback([&] {
    std::vector<const char*> ptrs;
    for (const auto& s : inputs) ptrs.push_back(s.c_str());
    rc = check(colloc_report(kind.c_str(), ptrs.data(), ptrs.size(), out.c_str()));
  });

  // lexicon
  auto* lex = app.add_subcommand("lexicon", "write the 40-stem lexicon as TSV");
  lex->add_option("--out", out)->required();
  lex->callback([&] { rc = check(colloc_write_lexicon(out.c_str())); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return rc;
}
