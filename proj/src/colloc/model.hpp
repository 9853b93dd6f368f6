#pragma once

#include <cstdint>
#include <cstdlib>
#include <memory>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "colloc/tokenizer.hpp"

namespace colloc {

/// GPT-2 style decoder: learned token and position embeddings, pre-norm
/// blocks (causal multi-head attention, 4x GELU MLP), final LayerNorm and an
/// output projection tied to the token embedding. No dropout.
struct ModelConfig {
  int n_layers = 2;
  int n_heads = 4;
  int d_model = 256;
  int vocab_size = 166;
  int context_length = 24;

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

std::size_t param_count(const ModelConfig& config);

struct TensorSpec {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
  bool decay = false;  // matrices and embeddings receive weight decay
};

/// Placement of every named tensor inside one flat parameter vector.
class ParameterLayout {
 public:
  struct Block {
    std::size_t ln1_g, ln1_b, attn_w, attn_b, proj_w, proj_b;
    std::size_t ln2_g, ln2_b, fc_w, fc_b, fc2_w, fc2_b;
  };

  explicit ParameterLayout(const ModelConfig& config);

  const std::vector<TensorSpec>& tensors() const noexcept { return tensors_; }
  const TensorSpec& find(std::string_view name) const;
  std::size_t total() const noexcept { return total_; }
  std::vector<std::uint8_t> decay_mask() const;

  std::size_t wte = 0, wpe = 0, lnf_g = 0, lnf_b = 0;
  std::vector<Block> blocks;

 private:
  std::size_t add(std::string name, std::vector<std::size_t> shape, bool decay);

  std::vector<TensorSpec> tensors_;
  std::size_t total_ = 0;
};

// Cache-line aligned storage. Vectorized kernels peel differently depending on
// where a buffer starts, so a fixed alignment keeps results bitwise reproducible.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::size_t kAlign = 64;

  AlignedAllocator() noexcept = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

  T* allocate(std::size_t n) {
    return static_cast<T*>(::operator new(n * sizeof(T), std::align_val_t{kAlign}));
  }
  void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, std::align_val_t{kAlign}); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const noexcept {
    return true;
  }
};

template <typename T>
using AlignedVector = std::vector<T, AlignedAllocator<T>>;

template <typename T>
struct Parameters {
  ModelConfig config;
  AlignedVector<T> values;

  std::span<T> tensor(std::string_view name);
  std::span<const T> tensor(std::string_view name) const;
  bool all_finite() const;
};

// normal(0, init_std) weights, zero biases, unit LayerNorm scales.
template <typename T>
Parameters<T> init_parameters(const ModelConfig& config, std::uint64_t seed, double init_std = 0.02);

template <typename To, typename From>
Parameters<To> cast_parameters(const Parameters<From>& p) {
  Parameters<To> out{p.config, {}};
  out.values.assign(p.values.begin(), p.values.end());
  return out;
}

/// Row-major [batch x length] token ids, right-padded with PAD.
struct TokenBatch {
  int batch = 0;
  int length = 0;
  std::vector<TokenId> ids;

  static TokenBatch from_sequences(std::span<const std::vector<TokenId>> seqs);
  TokenId at(int b, int t) const { return ids[static_cast<std::size_t>(b) * length + t]; }
};

/// Next-token log-probabilities, [batch x length x vocab].
template <typename T>
struct LogProbTable {
  int batch = 0;
  int length = 0;
  int vocab = 0;
  std::vector<T> values;

  std::span<const T> row(int b, int t) const {
    return {values.data() + (static_cast<std::size_t>(b) * length + t) * vocab,
            static_cast<std::size_t>(vocab)};
  }
};

/// Activation buffers reused across calls. One per thread; parameters may be
/// shared read-only between workspaces.
template <typename T>
class Workspace {
 public:
  Workspace();
  ~Workspace();
  Workspace(Workspace&&) noexcept;
  Workspace& operator=(Workspace&&) noexcept;

  struct Impl;
  Impl& impl() { return *impl_; }

 private:
  std::unique_ptr<Impl> impl_;
};

template <typename T>
LogProbTable<T> forward(const Parameters<T>& params, const TokenBatch& inputs, Workspace<T>* ws = nullptr);

// Mean negative log-probability of targets over positions with mask != 0.
template <typename T>
T loss(const LogProbTable<T>& table, std::span<const TokenId> targets, std::span<const std::uint8_t> mask);

struct LossSum {
  double sum = 0.0;
  std::size_t count = 0;
  double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
};

// Training objective on whole sequences (BOS ... EOS, PAD-padded): inputs are
// positions [0, L-1), targets [1, L), and PAD targets are masked out.
template <typename T>
LossSum sequence_loss(const Parameters<T>& params, const TokenBatch& seqs, Workspace<T>& ws);

// Same objective; writes d(mean loss)/d(params) into grad and returns the mean loss.
template <typename T>
T loss_and_gradient(const Parameters<T>& params, const TokenBatch& seqs, std::span<T> grad,
                    Workspace<T>& ws);

// Sum of log P(next | prefix) from BOS through EOS for each encoded sequence.
// Sequences are scored in padded chunks; each result depends only on its own tokens.
template <typename T>
std::vector<double> sequence_logprobs(const Parameters<T>& params,
                                      std::span<const std::vector<TokenId>> seqs, Workspace<T>& ws,
                                      std::size_t chunk = 64);

double sentence_logprob(const Parameters<float>& params, const TokenVocab& vocab,
                        std::span<const std::string> words);

}  // namespace colloc
