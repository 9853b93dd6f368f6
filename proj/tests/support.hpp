#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "colloc/model.hpp"

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("colloc_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

struct GroupError {
  std::string name;
  double max_rel_error = 0.0;
};

// Central differences against the analytic gradient, one entry per tensor.
// Relative error is |a - n| / max(|a|, |n|, 1e-6); the floor keeps exactly-zero
// gradients (e.g. the key bias under softmax shift invariance) from dividing
// finite-difference noise by zero.
inline std::vector<GroupError> gradient_check(const colloc::ModelConfig& config, std::uint64_t seed,
                                              const std::vector<std::vector<colloc::TokenId>>& seqs,
                                              double h = 1e-4) {
  using namespace colloc;
  auto p = init_parameters<double>(config, seed, 0.5);
  // Non-zero biases and LayerNorm offsets so every path is exercised.
  std::mt19937_64 rng(seed ^ 0x5eedULL);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto& v : p.values) {
    if (v == 0.0) v = u(rng);
  }
  const auto batch = TokenBatch::from_sequences(seqs);
  Workspace<double> ws;
  std::vector<double> grad(p.values.size());
  loss_and_gradient<double>(p, batch, grad, ws);
  std::vector<GroupError> out;
  const ParameterLayout layout(config);
  for (const auto& t : layout.tensors()) {
    GroupError g{t.name, 0.0};
    for (std::size_t i = 0; i < t.size; ++i) {
      const std::size_t k = t.offset + i;
      const double orig = p.values[k];
      p.values[k] = orig + h;
      const double up = sequence_loss<double>(p, batch, ws).mean();
      p.values[k] = orig - h;
      const double down = sequence_loss<double>(p, batch, ws).mean();
      p.values[k] = orig;
      const double numeric = (up - down) / (2 * h);
      const double rel =
          std::abs(numeric - grad[k]) / std::max({std::abs(numeric), std::abs(grad[k]), 1e-6});
      g.max_rel_error = std::max(g.max_rel_error, rel);
    }
    out.push_back(g);
  }
  return out;
}

}  // namespace testing

#include <boost/math/distributions/chi_squared.hpp>

namespace testing {

// Pearson goodness-of-fit p-value of observed counts against probabilities.
// Cells with expected count < 5 are pooled into one cell; zero-probability
// cells must have zero counts (reported through zero_mass_violations).
struct ChiSquare {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
  long zero_mass_violations = 0;
};

inline ChiSquare chi_square(const std::vector<long>& observed, const std::vector<double>& probs) {
  ChiSquare out;
  long n = 0;
  for (long c : observed) n += c;
  double pooled_obs = 0.0, pooled_exp = 0.0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] == 0.0) {
      out.zero_mass_violations += observed[i];
      continue;
    }
    const double e = probs[i] * static_cast<double>(n);
    if (e < 5.0) {
      pooled_obs += static_cast<double>(observed[i]);
      pooled_exp += e;
      continue;
    }
    out.statistic += (observed[i] - e) * (observed[i] - e) / e;
    ++cells;
  }
  if (pooled_exp > 0.0) {
    out.statistic += (pooled_obs - pooled_exp) * (pooled_obs - pooled_exp) / pooled_exp;
    ++cells;
  }
  out.dof = cells - 1;
  if (out.dof >= 1) {
    boost::math::chi_squared dist(out.dof);
    out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  }
  return out;
}

}  // namespace testing
