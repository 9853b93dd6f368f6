#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace colloc::report {

enum class FigureKind { AccuracyVsAlpha, RankFrequencyFit, AlphaVsAge, LossCurves, NounDistribution };

const char* kind_name(FigureKind kind) noexcept;
FigureKind parse_kind(std::string_view name);  // InvalidArgument on unknown kinds

struct Point {
  double x = 0.0;
  double y = 0.0;
  double err = 0.0;  // half-width of the error bar; 0 draws none
};

struct Series {
  std::string name;
  std::vector<Point> points;
  bool markers = true;
  bool line = true;
};

struct RefLine {
  std::string label;
  double value = 0.0;
  bool horizontal = true;  // y = value; otherwise x = value
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  // x positions drawn with a custom tick label (e.g. the infinite alpha).
  std::vector<std::pair<double, std::string>> x_tick_labels;
  std::vector<Series> series;
  std::vector<RefLine> refs;
};

// Deterministic SVG text; non-positive values are skipped on log axes.
std::string to_svg(const Plot& plot);

// Companion CSV columns: series, x, y, err. Reference lines appear as rows
// named "ref:<label>" with x or y set and the other column empty.
std::string to_csv(const Plot& plot);
Plot read_companion_csv(const std::filesystem::path& path);

// Builders read their inputs and raise MissingInput / SchemaMismatch.
Plot accuracy_vs_alpha(const std::vector<std::filesystem::path>& inputs);   // ledger.csv
Plot rank_frequency_fit(const std::vector<std::filesystem::path>& inputs);  // rank,empirical,theoretical
// First input: by-age fit CSV. Optional extra inputs: an overall fit CSV (bin
// "all") and a sweep ledger, which supply the two reference lines.
Plot alpha_vs_age(const std::vector<std::filesystem::path>& inputs);
Plot loss_curves(const std::vector<std::filesystem::path>& inputs);       // loss.csv files or run dirs
Plot noun_distribution(const std::vector<std::filesystem::path>& inputs);  // manifest.json files or dataset dirs

Plot build(FigureKind kind, const std::vector<std::filesystem::path>& inputs);

// Writes the SVG to out and the companion CSV next to it (same stem, .csv).
void render(FigureKind kind, const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out);

// Finite alpha plotted where the infinite alpha sits on accuracy axes.
double infinity_position(const std::vector<double>& finite_alphas);

}  // namespace colloc::report
