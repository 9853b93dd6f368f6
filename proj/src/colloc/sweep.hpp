#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "colloc/evaluator.hpp"
#include "colloc/grammar.hpp"
#include "colloc/model.hpp"
#include "colloc/trainer.hpp"

namespace colloc {

// Comma-separated items, each a value, "inf", or an inclusive range "start:stop:step".
// Range points are rounded to 1e-10 so 0:3:0.1 yields 0.3, not 0.30000000000000004.
std::vector<double> parse_alpha_list(std::string_view spec);

struct SweepConfig {
  std::vector<double> alphas;
  int n_runs = 10;
  std::uint64_t base_seed = 0;
  DatasetConfig data{};
  ModelConfig model{};
  TrainConfig train{};  // train.seed is replaced per cell
  std::size_t pairs_per_condition = 1000;
  int jobs = 1;
  bool keep_checkpoints = true;

  void validate() const;
};

struct CellSeeds {
  std::uint64_t cell = 0;
  std::uint64_t data = 0;
  std::uint64_t init = 0;
  std::uint64_t suite = 0;
};

/// Keyed on the alpha label rather than its position in the list, so a cell
/// reproduces regardless of which other alphas share the sweep.
CellSeeds cell_seeds(std::uint64_t base_seed, double alpha, int run);

// Digest of everything that determines a cell's outcome; names runs/<digest>/.
std::string cell_digest(const SweepConfig& config, double alpha, int run);

struct CellResult {
  double alpha = 0.0;
  int run = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  std::array<double, 4> accuracy{};  // kAllConditions order
  double best_val_loss = 0.0;
  std::string digest;
};

/// One (alpha, run) cell: fresh dataset, fresh init, train, score all four
/// suites. Artifacts go to artifact_dir when it is non-empty. Never throws for
/// run failures; they come back as ok == false.
CellResult run_cell(const SweepConfig& config, double alpha, int run, const std::filesystem::path& artifact_dir = {});

struct LedgerRow {
  double alpha = 0.0;
  int run = 0;
  EvalCondition condition;
  double accuracy = 0.0;
  double best_val_loss = 0.0;
  std::uint64_t seed = 0;
};

// Ledger CSV columns: alpha, run, condition, accuracy, best_val_loss, seed.
std::vector<LedgerRow> read_ledger(const std::filesystem::path& path);
std::string ledger_header();
std::string ledger_rows(const CellResult& cell);

struct ConditionSummary {
  double alpha = 0.0;
  EvalCondition condition;
  std::vector<double> accuracies;  // ordered by run
  double mean = 0.0;
  double sd = 0.0;  // sample sd; 0 for a single run
};

// Sorted by alpha, then condition in kAllConditions order.
std::vector<ConditionSummary> summarize(const std::vector<LedgerRow>& rows);
// CSV columns: alpha, condition, n_runs, mean, sd.
void write_summary(const std::vector<ConditionSummary>& summary, const std::filesystem::path& path);
std::vector<ConditionSummary> read_summary(const std::filesystem::path& path);

struct SweepResult {
  std::vector<CellResult> cells;  // this invocation's cells, including failures
  std::size_t skipped = 0;        // already complete in the ledger
  std::vector<ConditionSummary> summary;  // over the whole ledger
  std::size_t n_failed() const;
};

using SweepProgressFn = std::function<void(const CellResult& cell, std::size_t done, std::size_t total)>;

/// Writes out_dir/ledger.csv (append-only), out_dir/failures.csv,
/// out_dir/summary.csv and out_dir/runs/<digest>/. Cells already in the
/// ledger are skipped; failed cells are recorded and retried on the next call.
SweepResult run_sweep(const SweepConfig& config, const std::filesystem::path& out_dir,
                      const SweepProgressFn& progress = {});

}  // namespace colloc
