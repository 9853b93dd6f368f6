#include "colloc/colloc.h"

#include <cmath>
#include <cstring>
#include <limits>
#include <new>
#include <string>

#include "colloc/checkpoint.hpp"
#include "colloc/error.hpp"
#include "colloc/evaluator.hpp"
#include "colloc/grammar.hpp"
#include "colloc/model.hpp"
#include "colloc/report.hpp"
#include "colloc/sweep.hpp"
#include "colloc/trainer.hpp"
#include "colloc/util.hpp"
#include "colloc/zipffit.hpp"

struct colloc_dataset {
  colloc::Dataset data;
};

struct colloc_model {
  colloc::Parameters<float> params;
};

namespace {

thread_local std::string g_last_error;

colloc_status set_error(colloc_status s, std::string msg) {
  g_last_error = std::move(msg);
  return s;
}

// Runs fn, mapping exceptions to status codes.
template <typename Fn>
colloc_status guarded(Fn&& fn) {
  try {
    g_last_error.clear();
    fn();
    return COLLOC_OK;
  } catch (const colloc::Error& e) {
    return set_error(static_cast<colloc_status>(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(COLLOC_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return set_error(COLLOC_IO, e.what());
  } catch (const std::exception& e) {
    return set_error(COLLOC_INTERNAL, e.what());
  } catch (...) {
    return set_error(COLLOC_INTERNAL, "unknown exception");
  }
}

void need(const void* p, const char* what) {
  if (!p) colloc::fail(colloc::ErrorCode::InvalidArgument, std::string(what) + " must not be NULL");
}

colloc::TrainConfig to_train_config(const colloc_train_options& o, colloc::ModelConfig& model) {
  model.n_layers = o.n_layers;
  model.n_heads = o.n_heads;
  model.d_model = o.d_model;
  colloc::TrainConfig t;
  t.seed = o.seed;
  t.batch_size = o.batch_size;
  t.batches_per_epoch = o.batches_per_epoch;
  t.epochs = o.epochs;
  t.validate_every = o.validate_every;
  t.optimizer.learning_rate = o.learning_rate;
  t.optimizer.beta1 = o.beta1;
  t.optimizer.beta2 = o.beta2;
  t.optimizer.weight_decay = o.weight_decay;
  return t;
}

}  // namespace

extern "C" {

const char* colloc_version(void) { return "1.0.0"; }

const char* colloc_status_name(colloc_status status) {
  if (status < COLLOC_OK || status > COLLOC_INTERNAL) return "Unknown";
  return colloc::error_code_name(static_cast<colloc::ErrorCode>(status));
}

const char* colloc_last_error(void) { return g_last_error.c_str(); }

colloc_status colloc_dataset_generate(double alpha, uint64_t seed, colloc_dataset** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    auto* d = new colloc_dataset{colloc::generate_dataset(alpha, seed)};
    *out = d;
  });
}

colloc_status colloc_dataset_write(const colloc_dataset* data, const char* dir) {
  return guarded([&] {
    need(data, "data");
    need(dir, "dir");
    colloc::write_dataset(data->data, dir);
  });
}

colloc_status colloc_dataset_read(const char* dir, colloc_dataset** out) {
  return guarded([&] {
    need(dir, "dir");
    need(out, "out");
    *out = nullptr;
    *out = new colloc_dataset{colloc::read_dataset(dir)};
  });
}

colloc_status colloc_dataset_sizes(const colloc_dataset* data, size_t* n_train, size_t* n_valid, size_t* n_test) {
  return guarded([&] {
    need(data, "data");
    if (n_train) *n_train = data->data.train.size();
    if (n_valid) *n_valid = data->data.valid.size();
    if (n_test) *n_test = data->data.test.size();
  });
}

double colloc_dataset_alpha(const colloc_dataset* data) {
  return data ? data->data.params.alpha : std::numeric_limits<double>::quiet_NaN();
}

void colloc_dataset_free(colloc_dataset* data) { delete data; }

colloc_status colloc_dataset_dir_name(double alpha, uint64_t seed, char* buf, size_t buf_size) {
  return guarded([&] {
    need(buf, "buf");
    const std::string name = colloc::dataset_dir_name(alpha, seed);
    if (name.size() + 1 > buf_size) colloc::fail(colloc::ErrorCode::InvalidArgument, "buffer too small");
    std::memcpy(buf, name.c_str(), name.size() + 1);
  });
}

colloc_status colloc_write_lexicon(const char* path) {
  return guarded([&] {
    need(path, "path");
    colloc::Lexicon::builtin().save(path);
  });
}

colloc_status colloc_make_suites(const char* manifest_path, size_t n_per_condition, uint64_t seed,
                                 const char* out_path) {
  return guarded([&] {
    need(manifest_path, "manifest_path");
    need(out_path, "out_path");
    const auto m = colloc::read_manifest(manifest_path);
    std::vector<colloc::MinimalPair> all;
    for (const auto& c : colloc::kAllConditions) {
      auto pairs = colloc::generate_pairs(c, m, n_per_condition, colloc::suite_seed(seed, c));
      all.insert(all.end(), pairs.begin(), pairs.end());
    }
    colloc::write_suite(all, out_path);
  });
}

void colloc_train_options_default(colloc_train_options* o) {
  if (!o) return;
  const colloc::TrainConfig t;
  const colloc::ModelConfig m;
  o->seed = 0;
  o->n_layers = m.n_layers;
  o->n_heads = m.n_heads;
  o->d_model = m.d_model;
  o->batch_size = t.batch_size;
  o->batches_per_epoch = t.batches_per_epoch;
  o->epochs = t.epochs;
  o->validate_every = t.validate_every;
  o->learning_rate = t.optimizer.learning_rate;
  o->beta1 = t.optimizer.beta1;
  o->beta2 = t.optimizer.beta2;
  o->weight_decay = t.optimizer.weight_decay;
}

colloc_status colloc_train(const char* data_dir, const colloc_train_options* options, const char* out_dir,
                           colloc_progress_fn progress, void* user, double* best_val_loss) {
  return guarded([&] {
    need(data_dir, "data_dir");
    need(out_dir, "out_dir");
    colloc_train_options o;
    colloc_train_options_default(&o);
    if (options) o = *options;
    colloc::ModelConfig model;
    const auto train = to_train_config(o, model);
    const auto data = colloc::read_dataset(data_dir);
    colloc::ProgressFn fn;
    if (progress) fn = [&](int step, double loss) { progress(step, loss, user); };
    auto result = colloc::train_run(data, model, train, fn);
    colloc::write_run(result, out_dir);
    if (best_val_loss) *best_val_loss = result.record.best_val_loss;
  });
}

colloc_status colloc_model_load(const char* checkpoint_path, colloc_model** out) {
  return guarded([&] {
    need(checkpoint_path, "checkpoint_path");
    need(out, "out");
    *out = nullptr;
    *out = new colloc_model{colloc::load_checkpoint(checkpoint_path)};
  });
}

colloc_status colloc_model_init(uint64_t seed, colloc_model** out) {
  return guarded([&] {
    need(out, "out");
    *out = nullptr;
    *out = new colloc_model{colloc::init_parameters<float>(colloc::ModelConfig{}, seed)};
  });
}

colloc_status colloc_model_save(const colloc_model* model, const char* checkpoint_path) {
  return guarded([&] {
    need(model, "model");
    need(checkpoint_path, "checkpoint_path");
    colloc::save_checkpoint(model->params, checkpoint_path);
  });
}

size_t colloc_model_param_count(const colloc_model* model) {
  return model ? colloc::param_count(model->params.config) : 0;
}

colloc_status colloc_model_sentence_logprob(const colloc_model* model, const char* sentence, double* out) {
  return guarded([&] {
    need(model, "model");
    need(sentence, "sentence");
    need(out, "out");
    const auto words = colloc::split_whitespace(sentence);
    *out = colloc::sentence_logprob(model->params, colloc::TokenVocab(), words);
  });
}

void colloc_model_free(colloc_model* model) { delete model; }

colloc_status colloc_evaluate(const char* checkpoint_path, const char* suite_path, const char* out_csv) {
  return guarded([&] {
    need(checkpoint_path, "checkpoint_path");
    need(suite_path, "suite_path");
    need(out_csv, "out_csv");
    const auto params = colloc::load_checkpoint(checkpoint_path);
    const auto pairs = colloc::read_suite(suite_path);
    colloc::write_results(colloc::evaluate_suite(params, pairs), out_csv);
  });
}

void colloc_sweep_options_default(colloc_sweep_options* o) {
  if (!o) return;
  o->alphas = "0:3:0.1,inf";
  o->runs = 10;
  o->base_seed = 0;
  o->jobs = 1;
  o->keep_checkpoints = 1;
  o->pairs_per_condition = 1000;
  colloc_train_options_default(&o->train);
}

colloc_status colloc_sweep(const colloc_sweep_options* options, const char* out_dir,
                           colloc_sweep_progress_fn progress, void* user, size_t* n_failed) {
  return guarded([&] {
    need(options, "options");
    need(options->alphas, "options->alphas");
    need(out_dir, "out_dir");
    colloc::SweepConfig cfg;
    cfg.alphas = colloc::parse_alpha_list(options->alphas);
    cfg.n_runs = options->runs;
    cfg.base_seed = options->base_seed;
    cfg.jobs = options->jobs;
    cfg.keep_checkpoints = options->keep_checkpoints != 0;
    cfg.pairs_per_condition = options->pairs_per_condition;
    cfg.train = to_train_config(options->train, cfg.model);
    colloc::SweepProgressFn fn;
    if (progress) {
      fn = [&](const colloc::CellResult& c, std::size_t done, std::size_t total) {
        progress(c.alpha, c.run, c.ok ? 1 : 0, done, total, user);
      };
    }
    const auto result = colloc::run_sweep(cfg, out_dir, fn);
    if (n_failed) *n_failed = result.n_failed();
  });
}

void colloc_zipf_options_default(colloc_zipf_options* o) {
  if (!o) return;
  o->top_verbs = 100;
  o->grid = nullptr;
  o->by_age = 0;
  o->max_rank = 0;
  o->profile_out = nullptr;
}

colloc_status colloc_zipf_fit(const char* pairs_path, const colloc_zipf_options* options, const char* out_csv,
                              double* alpha_hat) {
  return guarded([&] {
    need(pairs_path, "pairs_path");
    need(out_csv, "out_csv");
    colloc_zipf_options o;
    colloc_zipf_options_default(&o);
    if (options) o = *options;
    namespace z = colloc::zipf;
    z::FitOptions fo;
    fo.top_k = o.top_verbs;
    if (o.grid) fo.grid = z::AlphaGrid::parse(o.grid);
    if (o.max_rank) fo.max_rank = o.max_rank;
    const auto records = z::load_pairs(pairs_path);
    if (alpha_hat) *alpha_hat = std::numeric_limits<double>::quiet_NaN();
    if (o.by_age) {
      z::write_fit_csv(z::fit_by_age(records, fo), out_csv);
      return;
    }
    const auto fit = z::fit_overall(records, fo);
    z::write_fit_csv({fit}, out_csv);
    if (alpha_hat) *alpha_hat = fit.fit.alpha_hat;
    if (o.profile_out) {
      const z::PairCounts counts(records);
      const auto profile = z::empirical_rank_frequencies(counts, z::top_verbs(counts, fo.top_k), fo.max_rank);
      z::write_profile_csv(profile, fit.fit, o.profile_out);
    }
  });
}

colloc_status colloc_report(const char* kind, const char* const* inputs, size_t n_inputs, const char* out_svg) {
  return guarded([&] {
    need(kind, "kind");
    need(out_svg, "out_svg");
    if (n_inputs) need(inputs, "inputs");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < n_inputs; ++i) {
      need(inputs[i], "inputs[i]");
      paths.emplace_back(inputs[i]);
    }
    colloc::report::render(colloc::report::parse_kind(kind), paths, out_svg);
  });
}

}  // extern "C"
