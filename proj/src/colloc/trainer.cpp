#include "colloc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>

#include "colloc/checkpoint.hpp"
#include "colloc/error.hpp"
#include "colloc/util.hpp"

namespace colloc {

template <typename T>
void adamw_step(std::span<T> params, std::span<const T> grads, std::span<const std::uint8_t> decay_mask,
                AdamWState<T>& state, const AdamWConfig& config) {
  const std::size_t n = params.size();
  if (grads.size() != n || state.m.size() != n || state.v.size() != n ||
      (!decay_mask.empty() && decay_mask.size() != n)) {
    fail(ErrorCode::InvalidArgument, "adamw_step: shape mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(grads[i])) {
      fail(ErrorCode::NonFiniteGradient,
           "non-finite gradient at step " + std::to_string(state.step + 1) + ", index " + std::to_string(i));
    }
  }
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  const T bc1 = static_cast<T>(1.0 - std::pow(config.beta1, t));
  const T bc2 = static_cast<T>(1.0 - std::pow(config.beta2, t));
  const T lr = static_cast<T>(config.learning_rate);
  const T eps = static_cast<T>(config.epsilon);
  const T decay = static_cast<T>(1.0 - config.learning_rate * config.weight_decay);
  for (std::size_t i = 0; i < n; ++i) {
    const T g = grads[i];
    state.m[i] = b1 * state.m[i] + (T(1) - b1) * g;
    state.v[i] = b2 * state.v[i] + (T(1) - b2) * g * g;
    const T mhat = state.m[i] / bc1;
    const T vhat = state.v[i] / bc2;
    if (decay_mask.empty() || decay_mask[i]) params[i] *= decay;
    params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

template void adamw_step<float>(std::span<float>, std::span<const float>, std::span<const std::uint8_t>,
                                AdamWState<float>&, const AdamWConfig&);
template void adamw_step<double>(std::span<double>, std::span<const double>, std::span<const std::uint8_t>,
                                 AdamWState<double>&, const AdamWConfig&);

void TrainConfig::validate() const {
  if (batch_size <= 0 || batches_per_epoch <= 0 || epochs <= 0 || validate_every <= 0) {
    fail(ErrorCode::InvalidArgument, "training schedule values must be positive");
  }
  if (!(optimizer.learning_rate > 0) || !(optimizer.beta1 >= 0 && optimizer.beta1 < 1) ||
      !(optimizer.beta2 >= 0 && optimizer.beta2 < 1) || !(optimizer.epsilon > 0) ||
      !(optimizer.weight_decay >= 0)) {
    fail(ErrorCode::InvalidArgument, "invalid AdamW hyperparameters");
  }
}

std::vector<std::vector<TokenId>> encode_sentences(const std::vector<Sentence>& sentences, const TokenVocab& vocab,
                                                   const Lexicon& lex) {
  std::vector<std::vector<TokenId>> out;
  out.reserve(sentences.size());
  for (const auto& s : sentences) {
    auto words = render(s, lex);
    out.push_back(vocab.encode(words));
  }
  return out;
}

double mean_sequence_loss(const Parameters<float>& params, std::span<const std::vector<TokenId>> seqs,
                          Workspace<float>& ws, std::size_t chunk) {
  if (seqs.empty()) fail(ErrorCode::EmptyMask, "no sequences to score");
  LossSum total;
  for (std::size_t start = 0; start < seqs.size(); start += chunk) {
    const std::size_t end = std::min(seqs.size(), start + chunk);
    TokenBatch batch = TokenBatch::from_sequences(seqs.subspan(start, end - start));
    LossSum part = sequence_loss<float>(params, batch, ws);
    total.sum += part.sum;
    total.count += part.count;
  }
  return total.mean();
}

RunResult train_run(const Dataset& data, const ModelConfig& model, const TrainConfig& train,
                    const ProgressFn& progress) {
  train.validate();
  model.validate();
  if (data.train.empty() || data.valid.empty()) {
    fail(ErrorCode::InvalidArgument, "dataset needs non-empty train and validation splits");
  }
  const TokenVocab vocab;
  if (static_cast<std::size_t>(model.vocab_size) != vocab.size()) {
    fail(ErrorCode::InvalidArgument, "model vocab_size must equal the token vocabulary size");
  }
  const auto train_ids = encode_sentences(data.train, vocab);
  const auto valid_ids = encode_sentences(data.valid, vocab);
  const std::size_t n_sub = std::min(train.train_eval_size, train_ids.size());
  const std::span<const std::vector<TokenId>> train_subset(train_ids.data(), n_sub);

  RunResult result;
  RunRecord& rec = result.record;
  rec.alpha = data.params.alpha;
  rec.data_seed = data.seed;
  rec.model = model;
  rec.train = train;

  Parameters<float> params = init_parameters<float>(model, train.seed, train.init_std);
  const ParameterLayout layout(model);
  const auto decay_mask = layout.decay_mask();
  AdamWState<float> opt(params.values.size());
  AlignedVector<float> grad(params.values.size());
  Workspace<float> ws;

  auto evaluate = [&](int step) {
    EvalPoint p;
    p.step = step;
    p.train_loss = mean_sequence_loss(params, train_subset, ws, train.eval_chunk);
    p.val_loss = mean_sequence_loss(params, valid_ids, ws, train.eval_chunk);
    if (!std::isfinite(p.val_loss) || !std::isfinite(p.train_loss)) {
      fail(ErrorCode::NonFiniteLoss, "non-finite evaluation loss at step " + std::to_string(step));
    }
    rec.evals.push_back(p);
    return p;
  };
  evaluate(0);

  // Seed stream for batch order is decoupled from the init stream.
  Rng order_rng(combine_seed(train.seed, 0x6261746368ULL));
  std::vector<std::size_t> order(train_ids.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t cursor = order.size();
  std::vector<std::vector<TokenId>> batch_seqs;
  batch_seqs.reserve(static_cast<std::size_t>(train.batch_size));

  bool have_best = false;
  const int total = train.total_steps();
  for (int step = 1; step <= total; ++step) {
    if ((step - 1) % train.batches_per_epoch == 0) cursor = order.size();  // new epoch: reshuffle
    batch_seqs.clear();
    while (batch_seqs.size() < static_cast<std::size_t>(train.batch_size)) {
      if (cursor >= order.size()) {
        std::shuffle(order.begin(), order.end(), order_rng);
        cursor = 0;
      }
      batch_seqs.push_back(train_ids[order[cursor++]]);
    }
    TokenBatch batch = TokenBatch::from_sequences(batch_seqs);
    const float l = loss_and_gradient<float>(params, batch, grad, ws);
    if (!std::isfinite(l)) fail(ErrorCode::NonFiniteLoss, "non-finite training loss at step " + std::to_string(step));
    adamw_step<float>(params.values, grad, decay_mask, opt, train.optimizer);
    rec.step_loss.push_back(l);
    if (progress) progress(step, l);

    if (step % train.validate_every == 0 || step == total) {
      const EvalPoint p = evaluate(step);
      if (!have_best || p.val_loss < rec.best_val_loss) {
        have_best = true;
        rec.best_val_loss = p.val_loss;
        rec.best_step = step;
        result.best = params;
      }
    }
  }
  return result;
}

void write_run(RunResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  RunRecord& rec = result.record;
  const auto ckpt = dir / "checkpoint.bin";
  save_checkpoint(result.best, ckpt);
  rec.checkpoint = ckpt.filename().string();

  std::string csv = "step,train_loss,val_loss,train_eval_loss\n";
  auto eval_at = [&](int step) -> const EvalPoint* {
    for (const auto& e : rec.evals) {
      if (e.step == step) return &e;
    }
    return nullptr;
  };
  for (int step = 0; step <= static_cast<int>(rec.step_loss.size()); ++step) {
    const EvalPoint* e = eval_at(step);
    csv += std::to_string(step) + ",";
    csv += step == 0 ? "" : format_double(rec.step_loss[static_cast<std::size_t>(step) - 1]);
    csv += ",";
    csv += e ? format_double(e->val_loss) : "";
    csv += ",";
    csv += e ? format_double(e->train_loss) : "";
    csv += "\n";
  }
  write_file(dir / "loss.csv", csv);

  nlohmann::ordered_json j;
  j["alpha"] = format_alpha(rec.alpha);
  j["data_seed"] = rec.data_seed;
  j["seed"] = rec.train.seed;
  j["model"] = {{"n_layers", rec.model.n_layers},
                {"n_heads", rec.model.n_heads},
                {"d_model", rec.model.d_model},
                {"vocab_size", rec.model.vocab_size},
                {"context_length", rec.model.context_length},
                {"param_count", param_count(rec.model)},
                {"norm", "pre-layernorm"},
                {"mlp", "gelu-erf-4x"},
                {"tied_embeddings", true},
                {"projection_biases", true},
                {"dropout", 0.0}};
  j["train"] = {{"learning_rate", rec.train.optimizer.learning_rate},
                {"beta1", rec.train.optimizer.beta1},
                {"beta2", rec.train.optimizer.beta2},
                {"epsilon", rec.train.optimizer.epsilon},
                {"weight_decay", rec.train.optimizer.weight_decay},
                {"weight_decay_on", "matrices-and-embeddings"},
                {"batch_size", rec.train.batch_size},
                {"batches_per_epoch", rec.train.batches_per_epoch},
                {"epochs", rec.train.epochs},
                {"validate_every", rec.train.validate_every},
                {"init_std", rec.train.init_std},
                {"train_eval_size", rec.train.train_eval_size}};
  nlohmann::ordered_json evals = nlohmann::ordered_json::array();
  for (const auto& e : rec.evals) {
    evals.push_back({{"step", e.step}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss}});
  }
  j["evals"] = evals;
  j["best_step"] = rec.best_step;
  j["best_val_loss"] = rec.best_val_loss;
  j["checkpoint"] = rec.checkpoint;
  write_file(dir / "run.json", j.dump(2) + "\n");
}

RunRecord read_run_record(const std::filesystem::path& run_json) {
  RunRecord rec;
  try {
    auto j = nlohmann::json::parse(read_file(run_json));
    rec.alpha = parse_alpha(j.at("alpha").get<std::string>());
    rec.data_seed = j.at("data_seed").get<std::uint64_t>();
    rec.train.seed = j.at("seed").get<std::uint64_t>();
    const auto& m = j.at("model");
    rec.model.n_layers = m.at("n_layers");
    rec.model.n_heads = m.at("n_heads");
    rec.model.d_model = m.at("d_model");
    rec.model.vocab_size = m.at("vocab_size");
    rec.model.context_length = m.at("context_length");
    const auto& t = j.at("train");
    rec.train.optimizer.learning_rate = t.at("learning_rate");
    rec.train.optimizer.beta1 = t.at("beta1");
    rec.train.optimizer.beta2 = t.at("beta2");
    rec.train.optimizer.epsilon = t.at("epsilon");
    rec.train.optimizer.weight_decay = t.at("weight_decay");
    rec.train.batch_size = t.at("batch_size");
    rec.train.batches_per_epoch = t.at("batches_per_epoch");
    rec.train.epochs = t.at("epochs");
    rec.train.validate_every = t.at("validate_every");
    for (const auto& e : j.at("evals")) {
      rec.evals.push_back({e.at("step").get<int>(), e.at("train_loss").get<double>(), e.at("val_loss").get<double>()});
    }
    rec.best_step = j.at("best_step");
    rec.best_val_loss = j.at("best_val_loss");
    rec.checkpoint = j.at("checkpoint");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::SchemaMismatch, run_json.string() + ": " + e.what());
  }
  return rec;
}

}  // namespace colloc
