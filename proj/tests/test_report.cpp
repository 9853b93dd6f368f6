#include <doctest.h>

#include <cmath>

#include "colloc/error.hpp"
#include "colloc/report.hpp"
#include "colloc/sweep.hpp"
#include "colloc/util.hpp"
#include "colloc/zipffit.hpp"
#include "support.hpp"

using namespace colloc;
using namespace colloc::report;

namespace {

std::size_t count_of(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

// alphas x runs ledger with accuracy = 0.5 + alpha/10 + run/100 for every condition.
std::string synthetic_ledger(const std::vector<double>& alphas, int runs) {
  std::string out = ledger_header();
  for (double a : alphas) {
    for (int r = 0; r < runs; ++r) {
      CellResult c;
      c.alpha = a;
      c.run = r;
      c.seed = 100 + r;
      c.best_val_loss = 1.5;
      const double base = std::isinf(a) ? 0.55 : 0.5 + a / 10;
      for (std::size_t i = 0; i < 4; ++i) c.accuracy[i] = base + r / 100.0 + i / 1000.0;
      out += ledger_rows(c);
    }
  }
  return out;
}

bool well_formed_svg(const std::string& svg) {
  const std::string prolog = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  return svg.rfind(prolog + "<svg ", 0) == 0 && svg.size() >= 7 && svg.compare(svg.size() - 7, 7, "</svg>\n") == 0 &&
         count_of(svg, "<g") == count_of(svg, "</g>");
}

}  // namespace

TEST_CASE("figure kinds") {
  for (auto k : {FigureKind::AccuracyVsAlpha, FigureKind::RankFrequencyFit, FigureKind::AlphaVsAge,
                 FigureKind::LossCurves, FigureKind::NounDistribution}) {
    CHECK(parse_kind(kind_name(k)) == k);
  }
  CHECK(std::string(kind_name(FigureKind::AccuracyVsAlpha)) == "accuracy-vs-alpha");
  CHECK_THROWS_AS(parse_kind("histogram"), Error);
}

TEST_CASE("single-cell ledger gives a valid single-point plot") {
  testing::TempDir dir("rep1");
  write_file(dir / "ledger.csv", synthetic_ledger({1.4}, 1));
  render(FigureKind::AccuracyVsAlpha, {dir / "ledger.csv"}, dir / "acc.svg");
  const auto svg = read_file(dir / "acc.svg");
  CHECK(well_formed_svg(svg));
  CHECK(count_of(svg, "class=\"errorbar\"") == 0);
  const auto plot = read_companion_csv(dir / "acc.csv");
  REQUIRE(plot.series.size() == 4);
  for (const auto& s : plot.series) CHECK(s.points.size() == 1);
}

TEST_CASE("reduced sweep ledger gives four lines with error bars") {
  testing::TempDir dir("rep4");
  write_file(dir / "ledger.csv", synthetic_ledger({0.0, 1.4, 3.0, kInfiniteAlpha}, 3));
  const Plot plot = accuracy_vs_alpha({dir / "ledger.csv"});
  REQUIRE(plot.series.size() == 4);
  for (const auto& s : plot.series) {
    REQUIRE(s.points.size() == 4);
    for (const auto& p : s.points) CHECK(p.err == doctest::Approx(0.01));
    CHECK(s.points.back().x > 3.0);
  }
  bool inf_tick = false;
  for (const auto& [x, label] : plot.x_tick_labels) inf_tick = inf_tick || (label == "inf" && x == infinity_position({0, 1.4, 3}));
  CHECK(inf_tick);
  const std::string svg = to_svg(plot);
  CHECK(well_formed_svg(svg));
  CHECK(count_of(svg, "class=\"errorbar\"") == 16);
  for (const auto& s : plot.series) CHECK(svg.find(s.name) != std::string::npos);
}

TEST_CASE("rendering is byte-identical and the companion CSV round trips") {
  testing::TempDir dir("repdet");
  write_file(dir / "ledger.csv", synthetic_ledger({0.0, 0.5, 1.4, kInfiniteAlpha}, 2));
  render(FigureKind::AccuracyVsAlpha, {dir / "ledger.csv"}, dir / "a.svg");
  render(FigureKind::AccuracyVsAlpha, {dir / "ledger.csv"}, dir / "b.svg");
  CHECK(read_file(dir / "a.svg") == read_file(dir / "b.svg"));
  CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));

  const Plot built = accuracy_vs_alpha({dir / "ledger.csv"});
  const Plot back = read_companion_csv(dir / "a.csv");
  REQUIRE(back.series.size() == built.series.size());
  for (std::size_t i = 0; i < built.series.size(); ++i) {
    CHECK(back.series[i].name == built.series[i].name);
    REQUIRE(back.series[i].points.size() == built.series[i].points.size());
    for (std::size_t j = 0; j < built.series[i].points.size(); ++j) {
      CHECK(back.series[i].points[j].x == built.series[i].points[j].x);
      CHECK(back.series[i].points[j].y == built.series[i].points[j].y);
      CHECK(back.series[i].points[j].err == built.series[i].points[j].err);
    }
  }
  CHECK(to_csv(back) == read_file(dir / "a.csv"));
}

TEST_CASE("rank-frequency and alpha-vs-age figures") {
  testing::TempDir dir("repzipf");
  zipf::RankProfile prof;
  prof.f = zipf::theoretical_profile(1.3, 20);
  zipf::FitResult fit;
  fit.alpha_hat = 1.3;
  fit.ranks = 20;
  zipf::write_profile_csv(prof, fit, dir / "profile.csv");
  const Plot rf = rank_frequency_fit({dir / "profile.csv"});
  CHECK(rf.log_x);
  CHECK(rf.log_y);
  REQUIRE(rf.series.size() == 2);
  CHECK(rf.series[0].points.size() == 20);
  CHECK(well_formed_svg(to_svg(rf)));

  std::vector<zipf::BinFit> bins;
  for (int b = 0; b < 8; ++b) {
    zipf::BinFit f;
    f.label = std::to_string(b * 12) + "-" + std::to_string(b * 12 + 12);
    f.age_lo = b * 12;
    f.age_hi = b * 12 + 12;
    f.fitted = b != 5;
    f.status = f.fitted ? "ok" : "BinTooSmall";
    f.fit.alpha_hat = 1.5 - b * 0.03;
    bins.push_back(f);
  }
  zipf::write_fit_csv(bins, dir / "age.csv");
  zipf::BinFit all;
  all.label = "all";
  all.fitted = true;
  all.status = "ok";
  all.fit.alpha_hat = 1.43;
  zipf::write_fit_csv({all}, dir / "overall.csv");
  write_file(dir / "ledger.csv", synthetic_ledger({0.0, 1.4, 3.0, kInfiniteAlpha}, 2));
  const Plot age = alpha_vs_age({dir / "age.csv", dir / "overall.csv", dir / "ledger.csv"});
  REQUIRE(age.series.size() == 1);
  CHECK(age.series[0].points.size() == 7);
  REQUIRE(age.refs.size() == 2);
  CHECK(age.refs[0].value == 1.43);
  CHECK(age.refs[1].value == 3.0);  // highest mean accuracy among finite alphas in the synthetic ledger
  const std::string svg = to_svg(age);
  CHECK(count_of(svg, "class=\"ref\"") == 2);

  render(FigureKind::AlphaVsAge, {dir / "age.csv", dir / "overall.csv"}, dir / "fig_age.svg");
  const Plot back = read_companion_csv(dir / "fig_age.csv");
  REQUIRE(back.refs.size() == 1);
  CHECK(back.refs[0].horizontal);
  CHECK(back.refs[0].value == 1.43);
  CHECK(back.series[0].points.size() == 7);
}

TEST_CASE("missing and malformed inputs") {
  testing::TempDir dir("reperr");
  try {
    render(FigureKind::AccuracyVsAlpha, {dir / "absent.csv"}, dir / "x.svg");
    FAIL("expected MissingInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingInput);
  }
  try {
    render(FigureKind::LossCurves, {}, dir / "x.svg");
    FAIL("expected MissingInput");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingInput);
  }
  write_file(dir / "junk.csv", "a,b,c\n1,2,3\n");
  for (auto kind : {FigureKind::AccuracyVsAlpha, FigureKind::RankFrequencyFit, FigureKind::LossCurves}) {
    try {
      render(kind, {dir / "junk.csv"}, dir / "x.svg");
      FAIL("expected SchemaMismatch");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::SchemaMismatch);
    }
  }
  CHECK_FALSE(std::filesystem::exists(dir / "x.svg"));
}
