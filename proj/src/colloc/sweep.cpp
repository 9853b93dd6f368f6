#include "colloc/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "colloc/error.hpp"
#include "colloc/util.hpp"

namespace colloc {

namespace {

double round_alpha(double a) { return std::isinf(a) ? a : std::round(a * 1e10) / 1e10; }

}  // namespace

std::vector<double> parse_alpha_list(std::string_view spec) {
  std::vector<double> out;
  for (const auto& raw : split(spec, ',')) {
    const auto item = trim(raw);
    if (item.empty()) fail(ErrorCode::InvalidArgument, "empty item in alpha list");
    auto parts = split(item, ':');
    if (parts.size() == 1) {
      out.push_back(round_alpha(parse_alpha(item)));
    } else if (parts.size() == 3) {
      const double start = parse_double(parts[0]);
      const double stop = parse_double(parts[1]);
      const double step = parse_double(parts[2]);
      if (!(step > 0) || stop < start) fail(ErrorCode::InvalidArgument, "bad alpha range: " + std::string(item));
      const auto n = static_cast<long long>(std::floor((stop - start) / step + 1e-9));
      for (long long i = 0; i <= n; ++i) out.push_back(round_alpha(start + static_cast<double>(i) * step));
    } else {
      fail(ErrorCode::InvalidArgument, "bad alpha item: " + std::string(item));
    }
  }
  std::set<double> unique;
  for (double a : out) {
    if (!(a >= 0.0)) fail(ErrorCode::InvalidArgument, "alpha must be non-negative");
    if (!unique.insert(a).second) fail(ErrorCode::InvalidArgument, "duplicate alpha " + format_alpha(a));
  }
  return out;
}

void SweepConfig::validate() const {
  if (alphas.empty()) fail(ErrorCode::InvalidArgument, "sweep needs at least one alpha");
  if (n_runs <= 0) fail(ErrorCode::InvalidArgument, "sweep needs at least one run per alpha");
  if (jobs <= 0) fail(ErrorCode::InvalidArgument, "jobs must be positive");
  if (pairs_per_condition == 0) fail(ErrorCode::InvalidArgument, "pairs_per_condition must be positive");
  model.validate();
  train.validate();
}

CellSeeds cell_seeds(std::uint64_t base_seed, double alpha, int run) {
  CellSeeds s;
  s.cell = combine_seed(combine_seed(base_seed, hash_string(format_alpha(alpha))), static_cast<std::uint64_t>(run));
  s.data = combine_seed(s.cell, 1);
  s.init = combine_seed(s.cell, 2);
  s.suite = combine_seed(s.cell, 3);
  return s;
}

std::string cell_digest(const SweepConfig& c, double alpha, int run) {
  std::string key = "alpha=" + format_alpha(alpha) + ";run=" + std::to_string(run) +
                    ";seed=" + std::to_string(cell_seeds(c.base_seed, alpha, run).cell);
  key += ";data=" + std::to_string(c.data.n_sentences) + "," + format_double(c.data.train_fraction) + "," +
         format_double(c.data.valid_fraction) + "," + std::to_string(c.data.cutoff) + "," +
         std::to_string(c.data.attempt_budget_factor);
  for (double w : c.data.template_weights.weights) key += "," + format_double(w);
  key += ";model=" + std::to_string(c.model.n_layers) + "," + std::to_string(c.model.n_heads) + "," +
         std::to_string(c.model.d_model) + "," + std::to_string(c.model.vocab_size) + "," +
         std::to_string(c.model.context_length);
  const auto& o = c.train.optimizer;
  key += ";train=" + format_double(o.learning_rate) + "," + format_double(o.beta1) + "," + format_double(o.beta2) +
         "," + format_double(o.epsilon) + "," + format_double(o.weight_decay) + "," +
         std::to_string(c.train.batch_size) + "," + std::to_string(c.train.batches_per_epoch) + "," +
         std::to_string(c.train.epochs) + "," + std::to_string(c.train.validate_every) + "," +
         format_double(c.train.init_std);
  key += ";pairs=" + std::to_string(c.pairs_per_condition);
  return hex64(hash_string(key));
}

CellResult run_cell(const SweepConfig& config, double alpha, int run, const std::filesystem::path& artifact_dir) {
  CellResult cell;
  cell.alpha = alpha;
  cell.run = run;
  const CellSeeds seeds = cell_seeds(config.base_seed, alpha, run);
  cell.seed = seeds.cell;
  cell.digest = cell_digest(config, alpha, run);
  try {
    const Dataset data = generate_dataset(alpha, seeds.data, config.data);
    TrainConfig train = config.train;
    train.seed = seeds.init;
    RunResult result = train_run(data, config.model, train);
    cell.best_val_loss = result.record.best_val_loss;

    const auto manifest = DatasetManifest::from_dataset(data);
    std::vector<ConditionResult> results;
    for (std::size_t i = 0; i < kAllConditions.size(); ++i) {
      const auto c = kAllConditions[i];
      const auto pairs = generate_pairs(c, manifest, config.pairs_per_condition, suite_seed(seeds.suite, c));
      const SuiteScore s = score_suite(result.best, pairs);
      cell.accuracy[i] = s.accuracy();
      results.push_back({c, s});
    }
    if (!artifact_dir.empty()) {
      write_run(result, artifact_dir);
      write_manifest(manifest, artifact_dir / "manifest.json");
      write_results(results, artifact_dir / "results.csv");
      if (!config.keep_checkpoints) std::filesystem::remove(artifact_dir / "checkpoint.bin");
    }
    cell.ok = true;
  } catch (const Error& e) {
    cell.error = std::string(error_code_name(e.code())) + ": " + e.what();
  } catch (const std::exception& e) {
    cell.error = std::string("Internal: ") + e.what();
  }
  return cell;
}

std::string ledger_header() { return "alpha,run,condition,accuracy,best_val_loss,seed\n"; }

std::string ledger_rows(const CellResult& cell) {
  std::string out;
  for (std::size_t i = 0; i < kAllConditions.size(); ++i) {
    out += format_alpha(cell.alpha) + "," + std::to_string(cell.run) + "," + kAllConditions[i].name() + "," +
           format_double(cell.accuracy[i]) + "," + format_double(cell.best_val_loss) + "," +
           std::to_string(cell.seed) + "\n";
  }
  return out;
}

std::vector<LedgerRow> read_ledger(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != trim(ledger_header())) {
    fail(ErrorCode::SchemaMismatch, path.string() + ": missing ledger header");
  }
  std::vector<LedgerRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], ',');
    const std::string where = path.string() + ":" + std::to_string(i + 1);
    if (cols.size() != 6) fail(ErrorCode::SchemaMismatch, where + ": expected 6 columns");
    LedgerRow r;
    try {
      r.alpha = parse_alpha(cols[0]);
      r.run = static_cast<int>(parse_int(cols[1]));
      r.condition = EvalCondition::parse(cols[2]);
      r.accuracy = parse_double(cols[3]);
      r.best_val_loss = parse_double(cols[4]);
      r.seed = std::stoull(cols[5]);
    } catch (const Error& e) {
      fail(ErrorCode::SchemaMismatch, where + ": " + e.what());
    } catch (const std::exception&) {
      fail(ErrorCode::SchemaMismatch, where + ": bad seed");
    }
    rows.push_back(r);
  }
  return rows;
}

std::vector<ConditionSummary> summarize(const std::vector<LedgerRow>& rows) {
  // (alpha, condition index) -> run -> accuracy; a repeated run keeps its last row.
  std::map<std::pair<double, int>, std::map<int, double>> groups;
  for (const auto& r : rows) groups[{r.alpha, r.condition.index()}][r.run] = r.accuracy;
  std::vector<ConditionSummary> out;
  for (const auto& [key, runs] : groups) {
    ConditionSummary s;
    s.alpha = key.first;
    s.condition = kAllConditions[static_cast<std::size_t>(key.second)];
    for (const auto& [run, acc] : runs) s.accuracies.push_back(acc);
    const double n = static_cast<double>(s.accuracies.size());
    double sum = 0.0;
    for (double a : s.accuracies) sum += a;
    s.mean = sum / n;
    if (s.accuracies.size() > 1) {
      double ss = 0.0;
      for (double a : s.accuracies) ss += (a - s.mean) * (a - s.mean);
      s.sd = std::sqrt(ss / (n - 1.0));
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_summary(const std::vector<ConditionSummary>& summary, const std::filesystem::path& path) {
  std::string out = "alpha,condition,n_runs,mean,sd\n";
  for (const auto& s : summary) {
    out += format_alpha(s.alpha) + "," + s.condition.name() + "," + std::to_string(s.accuracies.size()) + "," +
           format_double(s.mean) + "," + format_double(s.sd) + "\n";
  }
  write_file(path, out);
}

std::vector<ConditionSummary> read_summary(const std::filesystem::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "alpha,condition,n_runs,mean,sd") {
    fail(ErrorCode::SchemaMismatch, path.string() + ": missing summary header");
  }
  std::vector<ConditionSummary> out;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], ',');
    if (cols.size() != 5) fail(ErrorCode::SchemaMismatch, path.string() + ": expected 5 columns");
    ConditionSummary s;
    try {
      s.alpha = parse_alpha(cols[0]);
      s.condition = EvalCondition::parse(cols[1]);
      s.accuracies.resize(static_cast<std::size_t>(parse_int(cols[2])));
      s.mean = parse_double(cols[3]);
      s.sd = parse_double(cols[4]);
    } catch (const Error& e) {
      fail(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::size_t SweepResult::n_failed() const {
  return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return !c.ok; }));
}

SweepResult run_sweep(const SweepConfig& config, const std::filesystem::path& out_dir,
                      const SweepProgressFn& progress) {
  config.validate();
  std::filesystem::create_directories(out_dir);
  const auto ledger_path = out_dir / "ledger.csv";
  const auto failures_path = out_dir / "failures.csv";

  std::set<std::pair<std::string, int>> complete;
  if (std::filesystem::exists(ledger_path)) {
    std::map<std::pair<std::string, int>, int> seen;
    for (const auto& r : read_ledger(ledger_path)) ++seen[{format_alpha(r.alpha), r.run}];
    for (const auto& [key, n] : seen) {
      if (n >= static_cast<int>(kAllConditions.size())) complete.insert(key);
    }
  } else {
    write_file(ledger_path, ledger_header());
  }

  SweepResult result;
  std::vector<std::pair<double, int>> pending;
  for (double a : config.alphas) {
    for (int run = 0; run < config.n_runs; ++run) {
      if (complete.count({format_alpha(a), run})) {
        ++result.skipped;
      } else {
        pending.emplace_back(a, run);
      }
    }
  }

  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::size_t done = 0;
  std::vector<CellResult> cells(pending.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < pending.size(); i = next++) {
      const auto [alpha, run] = pending[i];
      const auto dir = out_dir / "runs" / cell_digest(config, alpha, run);
      CellResult cell = run_cell(config, alpha, run, dir);
      std::lock_guard lock(mu);
      if (cell.ok) {
        std::string rows = ledger_rows(cell);
        std::ofstream f(ledger_path, std::ios::app | std::ios::binary);
        f << rows;
        if (!f) fail(ErrorCode::Io, "cannot append to " + ledger_path.string());
      } else {
        const bool fresh = !std::filesystem::exists(failures_path);
        std::ofstream f(failures_path, std::ios::app | std::ios::binary);
        if (fresh) f << "alpha,run,seed,error\n";
        std::string msg = cell.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        f << format_alpha(cell.alpha) << "," << cell.run << "," << cell.seed << "," << msg << "\n";
      }
      cells[i] = std::move(cell);
      ++done;
      if (progress) progress(cells[i], done, pending.size());
    }
  };

  const std::size_t n_workers = std::min<std::size_t>(static_cast<std::size_t>(config.jobs), pending.size());
  if (n_workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  result.cells = std::move(cells);
  result.summary = summarize(read_ledger(ledger_path));
  write_summary(result.summary, out_dir / "summary.csv");
  return result;
}

}  // namespace colloc
