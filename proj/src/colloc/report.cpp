#include "colloc/report.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "colloc/error.hpp"
#include "colloc/grammar.hpp"
#include "colloc/sweep.hpp"
#include "colloc/util.hpp"
#include "colloc/zipffit.hpp"

namespace colloc::report {

namespace fs = std::filesystem;

const char* kind_name(FigureKind kind) noexcept {
  switch (kind) {
    case FigureKind::AccuracyVsAlpha: return "accuracy-vs-alpha";
    case FigureKind::RankFrequencyFit: return "rank-frequency-fit";
    case FigureKind::AlphaVsAge: return "alpha-vs-age";
    case FigureKind::LossCurves: return "loss-curves";
    case FigureKind::NounDistribution: return "noun-distribution";
  }
  return "unknown";
}

FigureKind parse_kind(std::string_view name) {
  for (auto k : {FigureKind::AccuracyVsAlpha, FigureKind::RankFrequencyFit, FigureKind::AlphaVsAge,
                 FigureKind::LossCurves, FigureKind::NounDistribution}) {
    if (name == kind_name(k)) return k;
  }
  fail(ErrorCode::InvalidArgument, "unknown figure kind: " + std::string(name));
}

namespace {

constexpr double kWidth = 760, kHeight = 480;
constexpr double kLeft = 72, kRight = 200, kTop = 44, kBottom = 64;
constexpr std::array<const char*, 8> kPalette{"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                              "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;
  double pixel_lo = 0, pixel_hi = 1;

  double map(double v) const {
    const double a = log ? std::log10(lo) : lo;
    const double b = log ? std::log10(hi) : hi;
    const double t = ((log ? std::log10(v) : v) - a) / (b - a);
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      for (double e = std::floor(std::log10(lo)); e <= std::ceil(std::log10(hi)); e += 1) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) out.push_back(v);
      }
      return out;
    }
    const double raw = (hi - lo) / 6.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    }
    for (double v = std::ceil(lo / step - 1e-9) * step; v <= hi + step * 1e-9; v += step) out.push_back(v);
    return out;
  }
};

bool usable(double v, bool log) { return std::isfinite(v) && (!log || v > 0); }

Axis fit_axis(std::vector<double> values, bool log, double pixel_lo, double pixel_hi) {
  Axis a;
  a.log = log;
  a.pixel_lo = pixel_lo;
  a.pixel_hi = pixel_hi;
  values.erase(std::remove_if(values.begin(), values.end(), [&](double v) { return !usable(v, log); }),
               values.end());
  if (values.empty()) values = {log ? 1.0 : 0.0};
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (log) {
    lo = std::pow(10.0, std::floor(std::log10(lo)));
    hi = std::pow(10.0, std::ceil(std::log10(hi)));
    if (hi <= lo) hi = lo * 10;
  } else {
    if (hi - lo < 1e-12) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = (hi - lo) * 0.05;
    lo -= pad;
    hi += pad;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

}  // namespace

std::string to_svg(const Plot& plot) {
  std::vector<double> xs, ys;
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) {
      if (!usable(p.x, plot.log_x) || !usable(p.y, plot.log_y)) continue;
      xs.push_back(p.x);
      ys.push_back(p.y);
      if (p.err > 0) {
        ys.push_back(p.y + p.err);
        ys.push_back(p.y - p.err);
      }
    }
  }
  for (const auto& r : plot.refs) (r.horizontal ? ys : xs).push_back(r.value);
  const Axis ax = fit_axis(xs, plot.log_x, kLeft, kWidth - kRight);
  const Axis ay = fit_axis(ys, plot.log_y, kHeight - kBottom, kTop);

  std::string o;
  o += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  o += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
       "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o += "<text x=\"" + fmt((kLeft + kWidth - kRight) / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       xml_escape(plot.title) + "</text>\n";

  // Axes and ticks.
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  o += "<g stroke=\"black\" fill=\"none\"><path d=\"M" + fmt(x0) + " " + fmt(y1) + " V" + fmt(y0) + " H" + fmt(x1) +
       "\"/></g>\n";
  o += "<g class=\"xticks\">\n";
  std::vector<std::pair<double, std::string>> xt;
  if (plot.x_tick_labels.empty()) {
    for (double v : ax.ticks()) xt.emplace_back(v, tick_text(v));
  } else {
    xt = plot.x_tick_labels;
  }
  for (const auto& [v, label] : xt) {
    if (!usable(v, plot.log_x) || v < ax.lo || v > ax.hi) continue;
    const double px = ax.map(v);
    o += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(y0) + "\" x2=\"" + fmt(px) + "\" y2=\"" + fmt(y0 + 5) +
         "\" stroke=\"black\"/><text x=\"" + fmt(px) + "\" y=\"" + fmt(y0 + 18) + "\" text-anchor=\"middle\">" +
         xml_escape(label) + "</text>\n";
  }
  o += "</g>\n<g class=\"yticks\">\n";
  for (double v : ay.ticks()) {
    const double py = ay.map(v);
    o += "<line x1=\"" + fmt(x0 - 5) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(x0) + "\" y2=\"" + fmt(py) +
         "\" stroke=\"black\"/><text x=\"" + fmt(x0 - 8) + "\" y=\"" + fmt(py + 4) + "\" text-anchor=\"end\">" +
         tick_text(v) + "</text>\n";
  }
  o += "</g>\n";
  o += "<text x=\"" + fmt((x0 + x1) / 2) + "\" y=\"" + fmt(kHeight - 18) + "\" text-anchor=\"middle\">" +
       xml_escape(plot.x_label) + "</text>\n";
  o += "<text transform=\"translate(18 " + fmt((y0 + y1) / 2) + ") rotate(-90)\" text-anchor=\"middle\">" +
       xml_escape(plot.y_label) + "</text>\n";

  for (const auto& r : plot.refs) {
    if (!usable(r.value, r.horizontal ? plot.log_y : plot.log_x)) continue;
    std::string a, b, c, d;
    if (r.horizontal) {
      const double py = ay.map(r.value);
      a = fmt(x0), b = fmt(py), c = fmt(x1), d = fmt(py);
    } else {
      const double px = ax.map(r.value);
      a = fmt(px), b = fmt(y0), c = fmt(px), d = fmt(y1);
    }
    o += "<line class=\"ref\" x1=\"" + a + "\" y1=\"" + b + "\" x2=\"" + c + "\" y2=\"" + d +
         "\" stroke=\"#d62728\" stroke-dasharray=\"6 4\"><title>" + xml_escape(r.label) + "</title></line>\n";
  }

  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const auto& s = plot.series[i];
    const std::string color = kPalette[i % kPalette.size()];
    o += "<g class=\"series\" data-name=\"" + xml_escape(s.name) + "\" stroke=\"" + color + "\" fill=\"" + color +
         "\">\n";
    std::string path;
    for (const auto& p : s.points) {
      if (!usable(p.x, plot.log_x) || !usable(p.y, plot.log_y)) continue;
      path += (path.empty() ? "M" : " L") + fmt(ax.map(p.x)) + " " + fmt(ay.map(p.y));
    }
    if (s.line && !path.empty()) o += "<path d=\"" + path + "\" fill=\"none\" stroke-width=\"1.5\"/>\n";
    for (const auto& p : s.points) {
      if (!usable(p.x, plot.log_x) || !usable(p.y, plot.log_y)) continue;
      const double px = ax.map(p.x), py = ay.map(p.y);
      if (p.err > 0) {
        const double lo = plot.log_y ? std::max(p.y - p.err, ay.lo) : p.y - p.err;
        o += "<path class=\"errorbar\" d=\"M" + fmt(px) + " " + fmt(ay.map(lo)) + " V" + fmt(ay.map(p.y + p.err)) +
             " M" + fmt(px - 3) + " " + fmt(ay.map(lo)) + " h6 M" + fmt(px - 3) + " " + fmt(ay.map(p.y + p.err)) +
             " h6\" fill=\"none\"/>\n";
      }
      if (s.markers) o += "<circle cx=\"" + fmt(px) + "\" cy=\"" + fmt(py) + "\" r=\"2.5\"/>\n";
    }
    o += "</g>\n";
  }

  // Legend.
  double ly = kTop + 6;
  for (std::size_t i = 0; i < plot.series.size(); ++i) {
    const std::string color = kPalette[i % kPalette.size()];
    o += "<rect x=\"" + fmt(x1 + 16) + "\" y=\"" + fmt(ly) + "\" width=\"12\" height=\"12\" fill=\"" + color +
         "\"/><text x=\"" + fmt(x1 + 34) + "\" y=\"" + fmt(ly + 10) + "\">" + xml_escape(plot.series[i].name) +
         "</text>\n";
    ly += 18;
  }
  for (const auto& r : plot.refs) {
    o += "<line x1=\"" + fmt(x1 + 16) + "\" y1=\"" + fmt(ly + 6) + "\" x2=\"" + fmt(x1 + 28) + "\" y2=\"" +
         fmt(ly + 6) + "\" stroke=\"#d62728\" stroke-dasharray=\"3 2\"/><text x=\"" + fmt(x1 + 34) + "\" y=\"" +
         fmt(ly + 10) + "\">" + xml_escape(r.label) + "</text>\n";
    ly += 18;
  }
  o += "</svg>\n";
  return o;
}

namespace {

std::string csv_name(std::string s) {
  std::replace(s.begin(), s.end(), ',', ';');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

}  // namespace

std::string to_csv(const Plot& plot) {
  std::string out = "series,x,y,err\n";
  for (const auto& s : plot.series) {
    for (const auto& p : s.points) {
      out += csv_name(s.name) + "," + format_double(p.x) + "," + format_double(p.y) + "," + format_double(p.err) + "\n";
    }
  }
  for (const auto& r : plot.refs) {
    out += "ref:" + csv_name(r.label) + ",";
    out += r.horizontal ? "," + format_double(r.value) : format_double(r.value) + ",";
    out += ",\n";
  }
  return out;
}

Plot read_companion_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty() || trim(lines[0]) != "series,x,y,err") {
    fail(ErrorCode::SchemaMismatch, path.string() + ": not a companion CSV");
  }
  Plot plot;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], ',');
    if (cols.size() != 4) fail(ErrorCode::SchemaMismatch, path.string() + ":" + std::to_string(i + 1) + ": 4 columns");
    if (cols[0].rfind("ref:", 0) == 0) {
      RefLine r;
      r.label = cols[0].substr(4);
      r.horizontal = cols[1].empty();
      r.value = parse_double(r.horizontal ? cols[2] : cols[1]);
      plot.refs.push_back(r);
      continue;
    }
    if (plot.series.empty() || plot.series.back().name != cols[0]) plot.series.push_back({cols[0], {}});
    plot.series.back().points.push_back({parse_double(cols[1]), parse_double(cols[2]), parse_double(cols[3])});
  }
  return plot;
}

double infinity_position(const std::vector<double>& finite_alphas) {
  if (finite_alphas.empty()) return 1.0;
  const double hi = *std::max_element(finite_alphas.begin(), finite_alphas.end());
  return hi + std::max(0.3, hi * 0.1);
}

namespace {

void require(const std::vector<fs::path>& inputs, std::size_t n, const char* what) {
  if (inputs.size() < n) fail(ErrorCode::MissingInput, std::string("missing input: ") + what);
  for (const auto& p : inputs) {
    if (!fs::exists(p)) fail(ErrorCode::MissingInput, p.string() + ": no such file");
  }
}

std::vector<std::string> csv_header(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) fail(ErrorCode::SchemaMismatch, path.string() + ": empty file");
  return split(trim(lines[0]), ',');
}

}  // namespace

Plot accuracy_vs_alpha(const std::vector<fs::path>& inputs) {
  require(inputs, 1, "sweep ledger");
  std::vector<LedgerRow> rows;
  for (const auto& p : inputs) {
    auto part = read_ledger(p);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  if (rows.empty()) fail(ErrorCode::SchemaMismatch, "ledger has no rows");
  const auto summary = summarize(rows);
  std::vector<double> finite;
  bool has_inf = false;
  for (const auto& s : summary) {
    if (std::isinf(s.alpha)) {
      has_inf = true;
    } else if (finite.empty() || finite.back() != s.alpha) {
      finite.push_back(s.alpha);
    }
  }
  const double inf_x = infinity_position(finite);

  Plot plot;
  plot.title = "Agreement accuracy vs alpha";
  plot.x_label = "alpha";
  plot.y_label = "accuracy";
  for (const auto& c : kAllConditions) {
    Series s;
    s.name = c.name();
    for (const auto& row : summary) {
      if (!(row.condition == c)) continue;
      s.points.push_back({std::isinf(row.alpha) ? inf_x : row.alpha, row.mean, row.accuracies.size() > 1 ? row.sd : 0.0});
    }
    if (!s.points.empty()) plot.series.push_back(std::move(s));
  }
  if (has_inf) {
    Axis probe = fit_axis(finite.empty() ? std::vector<double>{0.0} : finite, false, 0, 1);
    for (double v : probe.ticks()) {
      if (v >= 0 && v <= (finite.empty() ? 0.0 : finite.back()) + 1e-9) plot.x_tick_labels.emplace_back(v, tick_text(v));
    }
    plot.x_tick_labels.emplace_back(inf_x, "inf");
  }
  return plot;
}

Plot rank_frequency_fit(const std::vector<fs::path>& inputs) {
  require(inputs, 1, "rank profile CSV");
  const auto header = csv_header(inputs[0]);
  if (header != std::vector<std::string>{"rank", "empirical", "theoretical"}) {
    fail(ErrorCode::SchemaMismatch, inputs[0].string() + ": expected rank,empirical,theoretical");
  }
  Series emp{"empirical", {}, true, false};
  Series theo{"fitted", {}, false, true};
  const auto lines = read_lines(inputs[0]);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cols = split(lines[i], ',');
    if (cols.size() != 3) fail(ErrorCode::SchemaMismatch, inputs[0].string() + ": expected 3 columns");
    const double r = parse_double(cols[0]);
    emp.points.push_back({r, parse_double(cols[1]), 0.0});
    theo.points.push_back({r, parse_double(cols[2]), 0.0});
  }
  Plot plot;
  plot.title = "Subject rank-frequency profile";
  plot.x_label = "subject rank";
  plot.y_label = "mean proportion";
  plot.log_x = plot.log_y = true;
  plot.series = {emp, theo};
  return plot;
}

Plot alpha_vs_age(const std::vector<fs::path>& inputs) {
  require(inputs, 1, "age-binned fit CSV");
  Plot plot;
  plot.title = "Fitted alpha by age";
  plot.x_label = "age (months, bin midpoint)";
  plot.y_label = "alpha";
  Series s{"age bins", {}, true, true};
  for (const auto& f : zipf::read_fit_csv(inputs[0])) {
    if (f.label == "all" || !f.fitted) continue;
    s.points.push_back({(f.age_lo + f.age_hi) / 2.0, f.fit.alpha_hat, 0.0});
  }
  if (s.points.empty()) fail(ErrorCode::SchemaMismatch, inputs[0].string() + ": no fitted age bins");
  plot.series.push_back(std::move(s));

  for (std::size_t i = 1; i < inputs.size(); ++i) {
    const auto header = csv_header(inputs[i]);
    if (!header.empty() && header[0] == "bin") {
      for (const auto& f : zipf::read_fit_csv(inputs[i])) {
        if (f.label == "all" && f.fitted) plot.refs.push_back({"corpus alpha " + format_double(f.fit.alpha_hat), f.fit.alpha_hat, true});
      }
    } else if (!header.empty() && header[0] == "alpha") {
      // Sweep-optimal alpha: highest mean accuracy averaged over the four conditions.
      std::map<double, std::pair<double, int>> by_alpha;
      for (const auto& c : summarize(read_ledger(inputs[i]))) {
        if (std::isinf(c.alpha)) continue;
        by_alpha[c.alpha].first += c.mean;
        by_alpha[c.alpha].second += 1;
      }
      double best = 0.0, best_score = -1.0;
      for (const auto& [a, acc] : by_alpha) {
        const double score = acc.first / acc.second;
        if (score > best_score) {
          best_score = score;
          best = a;
        }
      }
      if (best_score >= 0) plot.refs.push_back({"optimal alpha " + format_double(best), best, true});
    } else {
      fail(ErrorCode::SchemaMismatch, inputs[i].string() + ": expected a fit CSV or sweep ledger");
    }
  }
  return plot;
}

Plot loss_curves(const std::vector<fs::path>& inputs) {
  require(inputs, 1, "loss.csv");
  Plot plot;
  plot.title = "Training and validation loss";
  plot.x_label = "step";
  plot.y_label = "loss";
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    fs::path file = fs::is_directory(inputs[k]) ? inputs[k] / "loss.csv" : inputs[k];
    if (!fs::exists(file)) fail(ErrorCode::MissingInput, file.string() + ": no such file");
    const auto lines = read_lines(file);
    const auto header = lines.empty() ? std::vector<std::string>{} : split(trim(lines[0]), ',');
    if (header.size() < 3 || header[0] != "step" || header[1] != "train_loss" || header[2] != "val_loss") {
      fail(ErrorCode::SchemaMismatch, file.string() + ": expected step,train_loss,val_loss");
    }
    std::string label = inputs.size() == 1 ? "" : file.parent_path().filename().string() + " ";
    if (inputs.size() > 1 && label == " ") label = std::to_string(k) + " ";
    Series train{label + "train", {}, false, true};
    Series val{label + "validation", {}, true, true};
    Series train_eval{label + "train (eval)", {}, true, true};
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto cols = split(lines[i], ',');
      if (cols.size() != header.size()) fail(ErrorCode::SchemaMismatch, file.string() + ": ragged row");
      const double step = parse_double(cols[0]);
      if (!cols[1].empty()) train.points.push_back({step, parse_double(cols[1]), 0.0});
      if (!cols[2].empty()) val.points.push_back({step, parse_double(cols[2]), 0.0});
      if (cols.size() > 3 && !cols[3].empty()) train_eval.points.push_back({step, parse_double(cols[3]), 0.0});
    }
    plot.series.push_back(std::move(train));
    plot.series.push_back(std::move(val));
    if (!train_eval.points.empty()) plot.series.push_back(std::move(train_eval));
  }
  return plot;
}

Plot noun_distribution(const std::vector<fs::path>& inputs) {
  require(inputs, 1, "dataset manifest");
  Plot plot;
  plot.title = "Subject distribution by offset rank";
  plot.x_label = "subject rank (offset + 1)";
  plot.y_label = "probability";
  plot.log_x = plot.log_y = true;
  for (const auto& in : inputs) {
    const fs::path file = fs::is_directory(in) ? in / "manifest.json" : in;
    if (!fs::exists(file)) fail(ErrorCode::MissingInput, file.string() + ": no such file");
    const auto m = read_manifest(file);
    const auto dist = subject_distribution(0, m.zipf());
    Series s{"alpha=" + format_alpha(m.alpha), {}, true, true};
    for (int j = 0; j < m.support; ++j) s.points.push_back({static_cast<double>(j + 1), dist[static_cast<std::size_t>(j)], 0.0});
    plot.series.push_back(std::move(s));
  }
  return plot;
}

Plot build(FigureKind kind, const std::vector<fs::path>& inputs) {
  switch (kind) {
    case FigureKind::AccuracyVsAlpha: return accuracy_vs_alpha(inputs);
    case FigureKind::RankFrequencyFit: return rank_frequency_fit(inputs);
    case FigureKind::AlphaVsAge: return alpha_vs_age(inputs);
    case FigureKind::LossCurves: return loss_curves(inputs);
    case FigureKind::NounDistribution: return noun_distribution(inputs);
  }
  fail(ErrorCode::InvalidArgument, "unknown figure kind");
}

void render(FigureKind kind, const std::vector<fs::path>& inputs, const fs::path& out) {
  const Plot plot = build(kind, inputs);
  write_file(out, to_svg(plot));
  fs::path csv = out;
  csv.replace_extension(".csv");
  write_file(csv, to_csv(plot));
}

}  // namespace colloc::report
