/* colloc: synthetic agreement grammar, small transformer LM, minimal-pair
 * evaluation and subject-verb Zipf fitting behind a C ABI.
 *
 * Every function returning colloc_status leaves a thread-local message
 * readable with colloc_last_error() on failure. Handles are opaque; free them
 * with the matching *_free function (NULL is accepted). */
#ifndef COLLOC_COLLOC_H
#define COLLOC_COLLOC_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(COLLOC_BUILDING_LIBRARY)
#    define COLLOC_API __declspec(dllexport)
#  else
#    define COLLOC_API __declspec(dllimport)
#  endif
#else
#  define COLLOC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values are stable across releases. */
typedef enum colloc_status {
  COLLOC_OK = 0,
  COLLOC_INVALID_ARGUMENT = 1,
  COLLOC_IO = 2,
  COLLOC_GENERATION_EXHAUSTED = 3,
  COLLOC_UNKNOWN_WORD = 4,
  COLLOC_UNKNOWN_ID = 5,
  COLLOC_SEQUENCE_TOO_LONG = 6,
  COLLOC_EMPTY_MASK = 7,
  COLLOC_NON_FINITE_GRADIENT = 8,
  COLLOC_NON_FINITE_LOSS = 9,
  COLLOC_INSUFFICIENT_COMBINATIONS = 10,
  COLLOC_EMPTY_SUITE = 11,
  COLLOC_MALFORMED_ROW = 12,
  COLLOC_EMPTY_CORPUS = 13,
  COLLOC_TOO_FEW_VERBS = 14,
  COLLOC_BIN_TOO_SMALL = 15,
  COLLOC_MISSING_INPUT = 16,
  COLLOC_SCHEMA_MISMATCH = 17,
  COLLOC_INTERNAL = 18
} colloc_status;

COLLOC_API const char* colloc_version(void);
COLLOC_API const char* colloc_status_name(colloc_status status);
/* Message for the last failure on this thread; "" if none. */
COLLOC_API const char* colloc_last_error(void);

/* ---- grammar ---------------------------------------------------------- */

typedef struct colloc_dataset colloc_dataset;

/* alpha in [0, 3] or INFINITY. */
COLLOC_API colloc_status colloc_dataset_generate(double alpha, uint64_t seed, colloc_dataset** out);
/* Writes train.txt, valid.txt, test.txt and manifest.json into dir. */
COLLOC_API colloc_status colloc_dataset_write(const colloc_dataset* data, const char* dir);
COLLOC_API colloc_status colloc_dataset_read(const char* dir, colloc_dataset** out);
COLLOC_API colloc_status colloc_dataset_sizes(const colloc_dataset* data, size_t* n_train, size_t* n_valid,
                                              size_t* n_test);
COLLOC_API double colloc_dataset_alpha(const colloc_dataset* data);
COLLOC_API void colloc_dataset_free(colloc_dataset* data);

/* Canonical dataset directory name, data_<alpha>_<seed>. buf receives a NUL-terminated string. */
COLLOC_API colloc_status colloc_dataset_dir_name(double alpha, uint64_t seed, char* buf, size_t buf_size);

COLLOC_API colloc_status colloc_write_lexicon(const char* path);

/* ---- evaluation suites ------------------------------------------------ */

/* Four conditions x n pairs from a dataset manifest, written as a suite TSV. */
COLLOC_API colloc_status colloc_make_suites(const char* manifest_path, size_t n_per_condition, uint64_t seed,
                                            const char* out_path);

/* ---- training --------------------------------------------------------- */

typedef struct colloc_train_options {
  uint64_t seed;
  int n_layers;
  int n_heads;
  int d_model;
  int batch_size;
  int batches_per_epoch;
  int epochs;
  int validate_every;
  double learning_rate;
  double beta1;
  double beta2;
  double weight_decay;
} colloc_train_options;

COLLOC_API void colloc_train_options_default(colloc_train_options* options);

typedef void (*colloc_progress_fn)(int step, double loss, void* user);

/* Trains on dir/{train,valid}.txt and writes run.json, loss.csv and
 * checkpoint.bin (best validation snapshot) into out_dir. */
COLLOC_API colloc_status colloc_train(const char* data_dir, const colloc_train_options* options, const char* out_dir,
                                      colloc_progress_fn progress, void* user, double* best_val_loss);

/* ---- models ----------------------------------------------------------- */

typedef struct colloc_model colloc_model;

COLLOC_API colloc_status colloc_model_load(const char* checkpoint_path, colloc_model** out);
/* Default architecture, random init. */
COLLOC_API colloc_status colloc_model_init(uint64_t seed, colloc_model** out);
COLLOC_API colloc_status colloc_model_save(const colloc_model* model, const char* checkpoint_path);
COLLOC_API size_t colloc_model_param_count(const colloc_model* model);
/* Sum of next-token log-probabilities of a space-separated sentence. */
COLLOC_API colloc_status colloc_model_sentence_logprob(const colloc_model* model, const char* sentence,
                                                       double* out);
COLLOC_API void colloc_model_free(colloc_model* model);

/* Scores a suite TSV; writes condition,n,n_correct,accuracy. */
COLLOC_API colloc_status colloc_evaluate(const char* checkpoint_path, const char* suite_path, const char* out_csv);

/* ---- sweep ------------------------------------------------------------ */

typedef struct colloc_sweep_options {
  const char* alphas; /* e.g. "0:3:0.1,inf" */
  int runs;
  uint64_t base_seed;
  int jobs;
  int keep_checkpoints;
  size_t pairs_per_condition;
  colloc_train_options train; /* seed is ignored; each cell derives its own */
} colloc_sweep_options;

COLLOC_API void colloc_sweep_options_default(colloc_sweep_options* options);

typedef void (*colloc_sweep_progress_fn)(double alpha, int run, int ok, size_t done, size_t total, void* user);

/* Writes ledger.csv, summary.csv, failures.csv (if any) and runs/<digest>/.
 * Completed cells already in the ledger are skipped. Failed cells do not make
 * the call fail; their count is returned in n_failed. */
COLLOC_API colloc_status colloc_sweep(const colloc_sweep_options* options, const char* out_dir,
                                      colloc_sweep_progress_fn progress, void* user, size_t* n_failed);

/* ---- zipf fitting ----------------------------------------------------- */

typedef struct colloc_zipf_options {
  size_t top_verbs;
  const char* grid; /* "start:stop:step"; NULL for 0:3:0.01 */
  int by_age;
  size_t max_rank;         /* 0: no cap */
  const char* profile_out; /* optional rank,empirical,theoretical CSV (overall fit only) */
} colloc_zipf_options;

COLLOC_API void colloc_zipf_options_default(colloc_zipf_options* options);

/* Writes bin,n_pairs,n_unique_verbs,n_unique_subjects,alpha_hat,mse[,status].
 * alpha_hat receives the overall estimate, or NaN for by-age fits. */
COLLOC_API colloc_status colloc_zipf_fit(const char* pairs_path, const colloc_zipf_options* options,
                                         const char* out_csv, double* alpha_hat);

/* ---- report ----------------------------------------------------------- */

/* kind: accuracy-vs-alpha | rank-frequency-fit | alpha-vs-age | loss-curves |
 * noun-distribution. Writes out_svg and a companion CSV beside it. */
COLLOC_API colloc_status colloc_report(const char* kind, const char* const* inputs, size_t n_inputs,
                                       const char* out_svg);

#ifdef __cplusplus
}
#endif

#endif
