#include "colloc/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "colloc/error.hpp"

namespace colloc {

namespace {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using CMap = Eigen::Map<const Mat<T>>;
template <typename T>
using MMap = Eigen::Map<Mat<T>>;
template <typename T>
using CRow = Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>;
template <typename T>
using MRow = Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>;

constexpr double kLayerNormEps = 1e-5;

}  // namespace

void ModelConfig::validate() const {
  if (n_layers <= 0 || n_heads <= 0 || d_model <= 0 || vocab_size <= 0 || context_length <= 0) {
    fail(ErrorCode::InvalidArgument, "model dimensions must be positive");
  }
  if (d_model % n_heads != 0) {
    fail(ErrorCode::InvalidArgument, "d_model must be divisible by n_heads");
  }
}

std::size_t param_count(const ModelConfig& c) {
  c.validate();
  const std::size_t d = static_cast<std::size_t>(c.d_model);
  const std::size_t per_block = 12 * d * d + 13 * d;
  return static_cast<std::size_t>(c.vocab_size) * d + static_cast<std::size_t>(c.context_length) * d +
         static_cast<std::size_t>(c.n_layers) * per_block + 2 * d;
}

ParameterLayout::ParameterLayout(const ModelConfig& c) {
  c.validate();
  const auto d = static_cast<std::size_t>(c.d_model);
  wte = add("wte", {static_cast<std::size_t>(c.vocab_size), d}, true);
  wpe = add("wpe", {static_cast<std::size_t>(c.context_length), d}, true);
  for (int l = 0; l < c.n_layers; ++l) {
    const std::string p = "h." + std::to_string(l) + ".";
    Block b{};
    b.ln1_g = add(p + "ln_1.weight", {d}, false);
    b.ln1_b = add(p + "ln_1.bias", {d}, false);
    b.attn_w = add(p + "attn.c_attn.weight", {d, 3 * d}, true);
    b.attn_b = add(p + "attn.c_attn.bias", {3 * d}, false);
    b.proj_w = add(p + "attn.c_proj.weight", {d, d}, true);
    b.proj_b = add(p + "attn.c_proj.bias", {d}, false);
    b.ln2_g = add(p + "ln_2.weight", {d}, false);
    b.ln2_b = add(p + "ln_2.bias", {d}, false);
    b.fc_w = add(p + "mlp.c_fc.weight", {d, 4 * d}, true);
    b.fc_b = add(p + "mlp.c_fc.bias", {4 * d}, false);
    b.fc2_w = add(p + "mlp.c_proj.weight", {4 * d, d}, true);
    b.fc2_b = add(p + "mlp.c_proj.bias", {d}, false);
    blocks.push_back(b);
  }
  lnf_g = add("ln_f.weight", {d}, false);
  lnf_b = add("ln_f.bias", {d}, false);
}

std::size_t ParameterLayout::add(std::string name, std::vector<std::size_t> shape, bool decay) {
  std::size_t size = 1;
  for (auto s : shape) size *= s;
  tensors_.push_back({std::move(name), std::move(shape), total_, size, decay});
  total_ += size;
  return tensors_.back().offset;
}

const TensorSpec& ParameterLayout::find(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  fail(ErrorCode::InvalidArgument, "no parameter tensor named " + std::string(name));
}

std::vector<std::uint8_t> ParameterLayout::decay_mask() const {
  std::vector<std::uint8_t> mask(total_, 0);
  for (const auto& t : tensors_) {
    if (t.decay) std::fill_n(mask.begin() + static_cast<std::ptrdiff_t>(t.offset), t.size, 1);
  }
  return mask;
}

template <typename T>
std::span<T> Parameters<T>::tensor(std::string_view name) {
  const TensorSpec spec = ParameterLayout(config).find(name);
  return {values.data() + spec.offset, spec.size};
}

template <typename T>
std::span<const T> Parameters<T>::tensor(std::string_view name) const {
  const TensorSpec spec = ParameterLayout(config).find(name);
  return {values.data() + spec.offset, spec.size};
}

template <typename T>
bool Parameters<T>::all_finite() const {
  return std::all_of(values.begin(), values.end(), [](T v) { return std::isfinite(v); });
}

template <typename T>
Parameters<T> init_parameters(const ModelConfig& config, std::uint64_t seed, double init_std) {
  ParameterLayout layout(config);
  Parameters<T> p{config, AlignedVector<T>(layout.total(), T(0))};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_std);
  for (const auto& t : layout.tensors()) {
    const bool is_norm_scale = t.name.ends_with("ln_1.weight") || t.name.ends_with("ln_2.weight") ||
                               t.name == "ln_f.weight";
    for (std::size_t i = 0; i < t.size; ++i) {
      T& v = p.values[t.offset + i];
      if (t.decay) {
        v = static_cast<T>(normal(rng));
      } else if (is_norm_scale) {
        v = T(1);
      }
    }
  }
  return p;
}

TokenBatch TokenBatch::from_sequences(std::span<const std::vector<TokenId>> seqs) {
  TokenBatch b;
  b.batch = static_cast<int>(seqs.size());
  for (const auto& s : seqs) b.length = std::max(b.length, static_cast<int>(s.size()));
  b.ids.assign(static_cast<std::size_t>(b.batch) * b.length, TokenVocab::kPad);
  for (int i = 0; i < b.batch; ++i) {
    std::copy(seqs[i].begin(), seqs[i].end(), b.ids.begin() + static_cast<std::ptrdiff_t>(i) * b.length);
  }
  return b;
}

// ---------------------------------------------------------------------------
// Activations

template <typename T>
struct Workspace<T>::Impl {
  struct Layer {
    Mat<T> x_in, xhat1, h1, qkv, att, x_mid, xhat2, h2, u, g;
    std::vector<T> rstd1, rstd2;
    AlignedVector<T> probs;  // [batch][head][t][s]
  };

  int batch = 0, seq = 0;
  std::vector<TokenId> inputs;
  std::vector<Layer> layers;
  Mat<T> x_out, xhatf, hf, logp;
  std::vector<T> rstdf;
  // backward scratch
  Mat<T> dx, dh, dqkv, datt, du, dlogits;
};

template <typename T>
Workspace<T>::Workspace() : impl_(std::make_unique<Impl>()) {}
template <typename T>
Workspace<T>::~Workspace() = default;
template <typename T>
Workspace<T>::Workspace(Workspace&&) noexcept = default;
template <typename T>
Workspace<T>& Workspace<T>::operator=(Workspace&&) noexcept = default;

namespace {

template <typename T>
void layer_norm(const Mat<T>& x, const T* gamma, const T* beta, Mat<T>& xhat, std::vector<T>& rstd,
                Mat<T>& out) {
  const Eigen::Index n = x.rows(), d = x.cols();
  xhat.resize(n, d);
  out.resize(n, d);
  rstd.resize(static_cast<std::size_t>(n));
  CRow<T> g(gamma, d), b(beta, d);
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = x.row(i);
    const T mean = row.mean();
    const T var = (row.array() - mean).square().mean();
    const T r = T(1) / std::sqrt(var + T(kLayerNormEps));
    rstd[static_cast<std::size_t>(i)] = r;
    xhat.row(i) = (row.array() - mean) * r;
    out.row(i) = xhat.row(i).cwiseProduct(g) + b;
  }
}

// dx (+)= LN backward of dy; accumulates dgamma, dbeta.
template <typename T>
void layer_norm_backward(const Mat<T>& dy, const Mat<T>& xhat, const std::vector<T>& rstd,
                         const T* gamma, T* dgamma, T* dbeta, Mat<T>& dx, bool accumulate) {
  const Eigen::Index n = dy.rows(), d = dy.cols();
  CRow<T> g(gamma, d);
  MRow<T> dg(dgamma, d), db(dbeta, d);
  dg += dy.cwiseProduct(xhat).colwise().sum();
  db += dy.colwise().sum();
  if (!accumulate) dx.setZero(n, d);
  Eigen::Matrix<T, 1, Eigen::Dynamic> dxhat(d);
  for (Eigen::Index i = 0; i < n; ++i) {
    dxhat = dy.row(i).cwiseProduct(g);
    const T m1 = dxhat.mean();
    const T m2 = dxhat.cwiseProduct(xhat.row(i)).mean();
    dx.row(i).array() += rstd[static_cast<std::size_t>(i)] * (dxhat.array() - m1 - xhat.row(i).array() * m2);
  }
}

template <typename T>
T gelu(T x) {
  return T(0.5) * x * (T(1) + std::erf(x * T(M_SQRT1_2)));
}

template <typename T>
T gelu_grad(T x) {
  const T cdf = T(0.5) * (T(1) + std::erf(x * T(M_SQRT1_2)));
  const T pdf = std::exp(T(-0.5) * x * x) * T(0.3989422804014327);
  return cdf + x * pdf;
}

template <typename T>
void linear(const Mat<T>& x, const T* w, const T* bias, Eigen::Index in, Eigen::Index out, Mat<T>& y) {
  CMap<T> W(w, in, out);
  y.resize(x.rows(), out);
  y.noalias() = x * W;
  y.rowwise() += CRow<T>(bias, out);
}

// dW += x^T dy, db += colsum(dy), dx = dy W^T
template <typename T>
void linear_backward(const Mat<T>& x, const Mat<T>& dy, const T* w, T* dw, T* db, Eigen::Index in,
                     Eigen::Index out, Mat<T>& dx) {
  CMap<T> W(w, in, out);
  MMap<T> dW(dw, in, out);
  dW.noalias() += x.transpose() * dy;
  MRow<T>(db, out) += dy.colwise().sum();
  dx.resize(dy.rows(), in);
  dx.noalias() = dy * W.transpose();
}

template <typename T>
void attention_forward(typename Workspace<T>::Impl::Layer& L, int batch, int seq, int heads, int d) {
  const int hd = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  const Eigen::Index n = static_cast<Eigen::Index>(batch) * seq;
  L.att.setZero(n, d);
  L.probs.assign(static_cast<std::size_t>(batch) * heads * seq * seq, T(0));
  std::vector<T> scores(static_cast<std::size_t>(seq));
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      T* P = L.probs.data() + (static_cast<std::size_t>(b) * heads + h) * seq * seq;
      for (int t = 0; t < seq; ++t) {
        const T* q = L.qkv.data() + (static_cast<std::size_t>(b) * seq + t) * 3 * d + h * hd;
        T mx = -std::numeric_limits<T>::infinity();
        for (int s = 0; s <= t; ++s) {
          const T* k = L.qkv.data() + (static_cast<std::size_t>(b) * seq + s) * 3 * d + d + h * hd;
          T dot = 0;
          for (int e = 0; e < hd; ++e) dot += q[e] * k[e];
          scores[s] = dot * scale;
          mx = std::max(mx, scores[s]);
        }
        T sum = 0;
        for (int s = 0; s <= t; ++s) {
          scores[s] = std::exp(scores[s] - mx);
          sum += scores[s];
        }
        T* y = L.att.data() + (static_cast<std::size_t>(b) * seq + t) * d + h * hd;
        for (int s = 0; s <= t; ++s) {
          const T p = scores[s] / sum;
          P[t * seq + s] = p;
          const T* v = L.qkv.data() + (static_cast<std::size_t>(b) * seq + s) * 3 * d + 2 * d + h * hd;
          for (int e = 0; e < hd; ++e) y[e] += p * v[e];
        }
      }
    }
  }
}

template <typename T>
void attention_backward(const typename Workspace<T>::Impl::Layer& L, const Mat<T>& datt, Mat<T>& dqkv,
                        int batch, int seq, int heads, int d) {
  const int hd = d / heads;
  const T scale = T(1) / std::sqrt(static_cast<T>(hd));
  dqkv.setZero(static_cast<Eigen::Index>(batch) * seq, 3 * d);
  std::vector<T> dp(static_cast<std::size_t>(seq));
  for (int b = 0; b < batch; ++b) {
    for (int h = 0; h < heads; ++h) {
      const T* P = L.probs.data() + (static_cast<std::size_t>(b) * heads + h) * seq * seq;
      for (int t = 0; t < seq; ++t) {
        const std::size_t rt = static_cast<std::size_t>(b) * seq + t;
        const T* dy = datt.data() + rt * d + h * hd;
        const T* q = L.qkv.data() + rt * 3 * d + h * hd;
        T* dq = dqkv.data() + rt * 3 * d + h * hd;
        T dot = 0;
        for (int s = 0; s <= t; ++s) {
          const T* v = L.qkv.data() + (static_cast<std::size_t>(b) * seq + s) * 3 * d + 2 * d + h * hd;
          T acc = 0;
          for (int e = 0; e < hd; ++e) acc += dy[e] * v[e];
          dp[s] = acc;
          dot += P[t * seq + s] * acc;
        }
        for (int s = 0; s <= t; ++s) {
          const std::size_t rs = static_cast<std::size_t>(b) * seq + s;
          const T p = P[t * seq + s];
          const T ds = p * (dp[s] - dot) * scale;
          const T* k = L.qkv.data() + rs * 3 * d + d + h * hd;
          T* dk = dqkv.data() + rs * 3 * d + d + h * hd;
          T* dv = dqkv.data() + rs * 3 * d + 2 * d + h * hd;
          for (int e = 0; e < hd; ++e) {
            dq[e] += ds * k[e];
            dk[e] += ds * q[e];
            dv[e] += p * dy[e];
          }
        }
      }
    }
  }
}

void check_ids(const ModelConfig& c, std::span<const TokenId> ids) {
  for (TokenId t : ids) {
    if (t < 0 || t >= c.vocab_size) {
      fail(ErrorCode::UnknownId, "token id " + std::to_string(t) + " outside vocabulary");
    }
  }
}

// Runs the network on ws.inputs ([batch x seq]); leaves log-probabilities in ws.logp.
template <typename T>
void run_forward(const Parameters<T>& params, const ParameterLayout& layout, typename Workspace<T>::Impl& ws) {
  const ModelConfig& c = params.config;
  const int d = c.d_model;
  const int batch = ws.batch, seq = ws.seq;
  if (seq > c.context_length) {
    fail(ErrorCode::SequenceTooLong, "sequence length " + std::to_string(seq) + " exceeds context " +
                                         std::to_string(c.context_length));
  }
  if (batch <= 0 || seq <= 0) fail(ErrorCode::InvalidArgument, "empty batch");
  check_ids(c, ws.inputs);
  const T* W = params.values.data();
  const Eigen::Index n = static_cast<Eigen::Index>(batch) * seq;

  ws.layers.resize(static_cast<std::size_t>(c.n_layers));
  Mat<T>& x0 = ws.layers[0].x_in;
  x0.resize(n, d);
  CMap<T> wte(W + layout.wte, c.vocab_size, d);
  CMap<T> wpe(W + layout.wpe, c.context_length, d);
  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < seq; ++t) {
      const Eigen::Index r = static_cast<Eigen::Index>(b) * seq + t;
      x0.row(r) = wte.row(ws.inputs[static_cast<std::size_t>(r)]) + wpe.row(t);
    }
  }

  for (int l = 0; l < c.n_layers; ++l) {
    auto& L = ws.layers[static_cast<std::size_t>(l)];
    const auto& B = layout.blocks[static_cast<std::size_t>(l)];
    layer_norm<T>(L.x_in, W + B.ln1_g, W + B.ln1_b, L.xhat1, L.rstd1, L.h1);
    linear<T>(L.h1, W + B.attn_w, W + B.attn_b, d, 3 * d, L.qkv);
    attention_forward<T>(L, batch, seq, c.n_heads, d);
    Mat<T>& proj = L.x_mid;  // reuse as scratch, then add residual
    linear<T>(L.att, W + B.proj_w, W + B.proj_b, d, d, proj);
    proj += L.x_in;
    layer_norm<T>(L.x_mid, W + B.ln2_g, W + B.ln2_b, L.xhat2, L.rstd2, L.h2);
    linear<T>(L.h2, W + B.fc_w, W + B.fc_b, d, 4 * d, L.u);
    L.g = L.u.unaryExpr([](T v) { return gelu(v); });
    Mat<T>& next = (l + 1 < c.n_layers) ? ws.layers[static_cast<std::size_t>(l) + 1].x_in : ws.x_out;
    linear<T>(L.g, W + B.fc2_w, W + B.fc2_b, 4 * d, d, next);
    next += L.x_mid;
  }

  layer_norm<T>(ws.x_out, W + layout.lnf_g, W + layout.lnf_b, ws.xhatf, ws.rstdf, ws.hf);
  ws.logp.resize(n, c.vocab_size);
  ws.logp.noalias() = ws.hf * wte.transpose();
  for (Eigen::Index i = 0; i < n; ++i) {
    auto row = ws.logp.row(i);
    const T mx = row.maxCoeff();
    const T lse = mx + std::log((row.array() - mx).exp().sum());
    row.array() -= lse;
  }
}

// Copies inputs/targets out of full sequences.
template <typename T>
std::size_t prepare_sequences(const TokenBatch& seqs, typename Workspace<T>::Impl& ws,
                              std::vector<TokenId>& targets) {
  if (seqs.length < 2) fail(ErrorCode::InvalidArgument, "sequences need at least two tokens");
  ws.batch = seqs.batch;
  ws.seq = seqs.length - 1;
  ws.inputs.resize(static_cast<std::size_t>(ws.batch) * ws.seq);
  targets.resize(ws.inputs.size());
  std::size_t count = 0;
  for (int b = 0; b < ws.batch; ++b) {
    for (int t = 0; t < ws.seq; ++t) {
      const std::size_t r = static_cast<std::size_t>(b) * ws.seq + t;
      ws.inputs[r] = seqs.at(b, t);
      targets[r] = seqs.at(b, t + 1);
      if (targets[r] != TokenVocab::kPad) ++count;
    }
  }
  return count;
}

}  // namespace

template <typename T>
LogProbTable<T> forward(const Parameters<T>& params, const TokenBatch& inputs, Workspace<T>* ws) {
  Workspace<T> local;
  auto& w = (ws ? *ws : local).impl();
  ParameterLayout layout(params.config);
  w.batch = inputs.batch;
  w.seq = inputs.length;
  w.inputs = inputs.ids;
  run_forward<T>(params, layout, w);
  LogProbTable<T> out;
  out.batch = inputs.batch;
  out.length = inputs.length;
  out.vocab = params.config.vocab_size;
  out.values.assign(w.logp.data(), w.logp.data() + w.logp.size());
  return out;
}

template <typename T>
T loss(const LogProbTable<T>& table, std::span<const TokenId> targets, std::span<const std::uint8_t> mask) {
  const std::size_t n = static_cast<std::size_t>(table.batch) * table.length;
  if (targets.size() != n || mask.size() != n) {
    fail(ErrorCode::InvalidArgument, "targets/mask shape does not match log-prob table");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (!mask[r]) continue;
    if (targets[r] < 0 || targets[r] >= table.vocab) fail(ErrorCode::UnknownId, "target id out of range");
    sum -= static_cast<double>(table.values[r * table.vocab + static_cast<std::size_t>(targets[r])]);
    ++count;
  }
  if (count == 0) fail(ErrorCode::EmptyMask, "loss mask selects no positions");
  return static_cast<T>(sum / static_cast<double>(count));
}

template <typename T>
LossSum sequence_loss(const Parameters<T>& params, const TokenBatch& seqs, Workspace<T>& ws) {
  auto& w = ws.impl();
  std::vector<TokenId> targets;
  const std::size_t count = prepare_sequences<T>(seqs, w, targets);
  ParameterLayout layout(params.config);
  run_forward<T>(params, layout, w);
  LossSum out;
  out.count = count;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (targets[r] == TokenVocab::kPad) continue;
    out.sum -= static_cast<double>(w.logp(static_cast<Eigen::Index>(r), targets[r]));
  }
  return out;
}

template <typename T>
T loss_and_gradient(const Parameters<T>& params, const TokenBatch& seqs, std::span<T> grad, Workspace<T>& ws) {
  const ModelConfig& c = params.config;
  ParameterLayout layout(c);
  if (grad.size() != layout.total()) fail(ErrorCode::InvalidArgument, "gradient buffer has wrong size");
  auto& w = ws.impl();
  std::vector<TokenId> targets;
  const std::size_t count = prepare_sequences<T>(seqs, w, targets);
  if (count == 0) fail(ErrorCode::EmptyMask, "batch has no target positions");
  run_forward<T>(params, layout, w);

  const int d = c.d_model;
  const int batch = w.batch, seq = w.seq;
  const Eigen::Index n = static_cast<Eigen::Index>(batch) * seq;
  const T inv = T(1) / static_cast<T>(count);
  std::fill(grad.begin(), grad.end(), T(0));
  const T* W = params.values.data();
  T* G = grad.data();

  // d(mean NLL)/d(logits) = (softmax - onehot) / count on unmasked rows.
  double total = 0.0;
  w.dlogits.resize(n, c.vocab_size);
  for (Eigen::Index r = 0; r < n; ++r) {
    const TokenId tgt = targets[static_cast<std::size_t>(r)];
    if (tgt == TokenVocab::kPad) {
      w.dlogits.row(r).setZero();
      continue;
    }
    total -= static_cast<double>(w.logp(r, tgt));
    w.dlogits.row(r) = w.logp.row(r).array().exp() * inv;
    w.dlogits(r, tgt) -= inv;
  }

  CMap<T> wte(W + layout.wte, c.vocab_size, d);
  MMap<T> dwte(G + layout.wte, c.vocab_size, d);
  MMap<T> dwpe(G + layout.wpe, c.context_length, d);
  dwte.noalias() += w.dlogits.transpose() * w.hf;
  w.dh.resize(n, d);
  w.dh.noalias() = w.dlogits * wte;
  layer_norm_backward<T>(w.dh, w.xhatf, w.rstdf, W + layout.lnf_g, G + layout.lnf_g, G + layout.lnf_b, w.dx,
                         false);

  for (int l = c.n_layers - 1; l >= 0; --l) {
    const auto& L = w.layers[static_cast<std::size_t>(l)];
    const auto& B = layout.blocks[static_cast<std::size_t>(l)];
    // MLP branch: x_out = x_mid + fc2(gelu(fc(ln2(x_mid))))
    linear_backward<T>(L.g, w.dx, W + B.fc2_w, G + B.fc2_w, G + B.fc2_b, 4 * d, d, w.du);
    w.du.array() *= L.u.unaryExpr([](T v) { return gelu_grad(v); }).array();
    linear_backward<T>(L.h2, w.du, W + B.fc_w, G + B.fc_w, G + B.fc_b, d, 4 * d, w.dh);
    layer_norm_backward<T>(w.dh, L.xhat2, L.rstd2, W + B.ln2_g, G + B.ln2_g, G + B.ln2_b, w.dx, true);
    // Attention branch: x_mid = x_in + proj(attn(ln1(x_in)))
    linear_backward<T>(L.att, w.dx, W + B.proj_w, G + B.proj_w, G + B.proj_b, d, d, w.datt);
    attention_backward<T>(L, w.datt, w.dqkv, batch, seq, c.n_heads, d);
    linear_backward<T>(L.h1, w.dqkv, W + B.attn_w, G + B.attn_w, G + B.attn_b, d, 3 * d, w.dh);
    layer_norm_backward<T>(w.dh, L.xhat1, L.rstd1, W + B.ln1_g, G + B.ln1_g, G + B.ln1_b, w.dx, true);
  }

  for (int b = 0; b < batch; ++b) {
    for (int t = 0; t < seq; ++t) {
      const Eigen::Index r = static_cast<Eigen::Index>(b) * seq + t;
      dwte.row(w.inputs[static_cast<std::size_t>(r)]) += w.dx.row(r);
      dwpe.row(t) += w.dx.row(r);
    }
  }
  return static_cast<T>(total / static_cast<double>(count));
}

template <typename T>
std::vector<double> sequence_logprobs(const Parameters<T>& params, std::span<const std::vector<TokenId>> seqs,
                                      Workspace<T>& ws, std::size_t chunk) {
  std::vector<double> out(seqs.size(), 0.0);
  if (chunk == 0) chunk = 1;
  ParameterLayout layout(params.config);
  auto& w = ws.impl();
  std::vector<TokenId> targets;
  for (std::size_t start = 0; start < seqs.size(); start += chunk) {
    const std::size_t end = std::min(seqs.size(), start + chunk);
    for (std::size_t i = start; i < end; ++i) {
      if (seqs[i].size() < 2) fail(ErrorCode::InvalidArgument, "sequence needs BOS and EOS");
    }
    TokenBatch batch = TokenBatch::from_sequences(seqs.subspan(start, end - start));
    prepare_sequences<T>(batch, w, targets);
    run_forward<T>(params, layout, w);
    for (int b = 0; b < w.batch; ++b) {
      double s = 0.0;
      const std::size_t len = seqs[start + static_cast<std::size_t>(b)].size();
      for (std::size_t t = 0; t + 1 < len; ++t) {
        const std::size_t r = static_cast<std::size_t>(b) * w.seq + t;
        s += static_cast<double>(w.logp(static_cast<Eigen::Index>(r), targets[r]));
      }
      out[start + static_cast<std::size_t>(b)] = s;
    }
  }
  return out;
}

double sentence_logprob(const Parameters<float>& params, const TokenVocab& vocab, std::span<const std::string> words) {
  std::vector<std::vector<TokenId>> seqs{vocab.encode(words)};
  Workspace<float> ws;
  return sequence_logprobs<float>(params, seqs, ws).front();
}

#define COLLOC_INSTANTIATE(T)                                                                          \
  template struct Parameters<T>;                                                                       \
  template class Workspace<T>;                                                                         \
  template Parameters<T> init_parameters<T>(const ModelConfig&, std::uint64_t, double);                \
  template LogProbTable<T> forward<T>(const Parameters<T>&, const TokenBatch&, Workspace<T>*);         \
  template T loss<T>(const LogProbTable<T>&, std::span<const TokenId>, std::span<const std::uint8_t>); \
  template LossSum sequence_loss<T>(const Parameters<T>&, const TokenBatch&, Workspace<T>&);           \
  template T loss_and_gradient<T>(const Parameters<T>&, const TokenBatch&, std::span<T>, Workspace<T>&); \
  template std::vector<double> sequence_logprobs<T>(const Parameters<T>&,                              \
                                                    std::span<const std::vector<TokenId>>, Workspace<T>&, \
                                                    std::size_t);

COLLOC_INSTANTIATE(float)
COLLOC_INSTANTIATE(double)

#undef COLLOC_INSTANTIATE

}  // namespace colloc
