#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "colloc/grammar.hpp"
#include "colloc/model.hpp"

namespace colloc {

struct AdamWConfig {
  double learning_rate = 6e-4;
  double beta1 = 0.9;
  double beta2 = 0.95;
  double epsilon = 1e-8;
  double weight_decay = 0.1;
};

template <typename T>
struct AdamWState {
  AlignedVector<T> m;
  AlignedVector<T> v;
  std::int64_t step = 0;

  explicit AdamWState(std::size_t n = 0) : m(n, T(0)), v(n, T(0)) {}
};

/// One decoupled-weight-decay Adam update:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   w <- w - lr * (m/(1-b1^t) / (sqrt(v/(1-b2^t)) + eps) + wd * w)
/// Decay applies only where decay_mask is nonzero (an empty mask decays everything).
/// Throws NonFiniteGradient before touching any state if a gradient is NaN/inf.
template <typename T>
void adamw_step(std::span<T> params, std::span<const T> grads, std::span<const std::uint8_t> decay_mask,
                AdamWState<T>& state, const AdamWConfig& config);

struct TrainConfig {
  AdamWConfig optimizer{};
  int batch_size = 32;
  int batches_per_epoch = 300;
  int epochs = 4;
  int validate_every = 300;
  std::uint64_t seed = 0;  // weight init and batch order
  double init_std = 0.02;
  // Training-split sentences scored at each validation point (fixed subset).
  std::size_t train_eval_size = 1200;
  std::size_t eval_chunk = 200;

  int total_steps() const noexcept { return batches_per_epoch * epochs; }
  void validate() const;
};

struct EvalPoint {
  int step = 0;
  double train_loss = 0.0;  // on the fixed training subset
  double val_loss = 0.0;    // on the full validation split
};

struct RunRecord {
  double alpha = 0.0;
  std::uint64_t data_seed = 0;
  ModelConfig model{};
  TrainConfig train{};
  std::vector<double> step_loss;  // training batch loss, steps 1..total
  std::vector<EvalPoint> evals;   // step 0 (reference only) then every validate_every steps
  int best_step = 0;
  double best_val_loss = 0.0;
  std::string checkpoint;
};

struct RunResult {
  RunRecord record;
  Parameters<float> best;
};

using ProgressFn = std::function<void(int step, double loss)>;

std::vector<std::vector<TokenId>> encode_sentences(const std::vector<Sentence>& sentences,
                                                   const TokenVocab& vocab,
                                                   const Lexicon& lex = Lexicon::builtin());

// Mean per-token next-token loss over the given encoded sentences.
double mean_sequence_loss(const Parameters<float>& params, std::span<const std::vector<TokenId>> seqs,
                          Workspace<float>& ws, std::size_t chunk = 200);

RunResult train_run(const Dataset& data, const ModelConfig& model, const TrainConfig& train,
                    const ProgressFn& progress = {});

// run.json, loss.csv (step, train_loss, val_loss, train_eval_loss) and checkpoint.bin in dir.
void write_run(RunResult& result, const std::filesystem::path& dir);
RunRecord read_run_record(const std::filesystem::path& run_json);

}  // namespace colloc
