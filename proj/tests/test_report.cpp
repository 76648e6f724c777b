#include <algorithm>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "resgene/report.hpp"

using namespace resgene;
using namespace resgene::report;

namespace {

run::RunResult cell(std::string dataset, std::string trait, std::string model,
                    std::optional<double> pcc) {
  run::RunResult r;
  r.dataset = std::move(dataset);
  r.trait = std::move(trait);
  r.model = std::move(model);
  r.mean_pcc = pcc;
  r.folds = 2;
  r.fold_pcc = {pcc, pcc};
  return r;
}

// Two traits x three models; the second trait has a tie.
std::vector<run::RunResult> runs() {
  return {cell("D", "B", "gamma", 0.6), cell("D", "A", "alpha", 0.5),
          cell("D", "A", "beta", 0.3),  cell("D", "A", "gamma", 0.4),
          cell("D", "B", "alpha", 0.2), cell("D", "B", "beta", 0.2)};
}

}  // namespace

TEST_CASE("rank CSV for a hand-ranked table") {
  const auto rep = make_report(build_table(runs()));
  CHECK(rank_csv(rep) ==
        "Dataset,Trait,alpha,beta,gamma\n"
        "D,A,1,3,2\n"
        "D,B,2.5,2.5,1\n"
        "Average PCC,,0.3500,0.2500,0.5000\n"
        "Average Relative % Gain,,42.86%,100.00%,-\n"
        "Final Ranking,,1/2,0/2,1/2\n"
        "Average Ranking,,1.75,2.75,1.5\n");
}

TEST_CASE("explicit model order and reference") {
  const auto table = build_table(runs(), {{"gamma", "alpha", "beta"}});
  CHECK(table.models == std::vector<std::string>{"gamma", "alpha", "beta"});
  const auto rep = make_report(table, std::string("alpha"));
  CHECK(rep.aggregate.reference == 1);
  // alpha over gamma: (0.35 - 0.5) / 0.5.
  CHECK(*rep.aggregate.relative_gain[0] == doctest::Approx(-30.0));
  CHECK_FALSE(rep.aggregate.relative_gain[1]);
  CHECK_THROWS_AS(make_report(table, std::string("delta")), ReportError);
  CHECK_THROWS_AS(build_table(runs(), {{"alpha", "beta"}}), ReportError);
  CHECK_THROWS_AS(build_table(runs(), {{"alpha", "alpha", "beta", "gamma"}}), ReportError);
}

TEST_CASE("output does not depend on run order") {
  auto shuffled = runs();
  std::reverse(shuffled.begin(), shuffled.end());
  std::rotate(shuffled.begin(), shuffled.begin() + 2, shuffled.end());
  const auto a = make_report(build_table(runs()));
  const auto b = make_report(build_table(shuffled));
  CHECK(rank_csv(a) == rank_csv(b));
  CHECK(report_json(a) == report_json(b));
  CHECK(bar_charts(a) == bar_charts(b));
}

TEST_CASE("missing and undefined cells are listed") {
  auto r = runs();
  r.pop_back();
  r.push_back(cell("E", "C", "alpha", std::nullopt));
  const auto table = build_table(r);
  CHECK(table.traits.size() == 3);
  const auto& m = table.missing;
  CHECK(std::find(m.begin(), m.end(), "D/B x beta") != m.end());
  CHECK(std::find(m.begin(), m.end(), "E/C x alpha (undefined PCC)") != m.end());
  CHECK(std::find(m.begin(), m.end(), "E/C x gamma") != m.end());
  CHECK(m.size() == 4);
  try {
    make_report(table);
    FAIL("expected ReportError");
  } catch (const ReportError& e) {
    CHECK(std::string(e.what()).find("D/B x beta") != std::string::npos);
  }
}

TEST_CASE("a duplicated cell is rejected") {
  auto r = runs();
  r.push_back(cell("D", "A", "beta", 0.1));
  CHECK_THROWS_AS(build_table(r), ReportError);
}

TEST_CASE("JSON summary") {
  const auto j = nlohmann::json::parse(report_json(make_report(build_table(runs()))));
  CHECK(j.at("reference") == "gamma");
  CHECK(j.at("traits").size() == 2);
  CHECK(j.at("traits")[1].at("ranks") == std::vector<double>{2.5, 2.5, 1});
  CHECK(j.at("relative_gain_percent")[2].is_null());
  CHECK(j.at("final_ranking")[0] == "1/2");
  CHECK(j.at("friedman").at("df") == 2);
  CHECK(j.at("friedman").at("defined") == true);
  // 12 * 2 / (3 * 4) * (1.75^2 + 2.75^2 + 1.5^2 - 3 * 16 / 4) = 1.75
  CHECK(j.at("friedman").at("chi2").get<double>() == doctest::Approx(1.75));

  const auto single = make_report(build_table(
      {cell("D", "A", "alpha", 0.3), cell("D", "B", "alpha", 0.4)}));
  const auto js = nlohmann::json::parse(report_json(single));
  CHECK(js.at("friedman").at("defined") == false);
  CHECK(js.at("friedman").at("chi2").is_null());
  CHECK(js.at("friedman").at("p_value").is_null());
}

TEST_CASE("one bar chart per dataset") {
  auto r = runs();
  for (const char* m : {"alpha", "beta", "gamma"}) r.push_back(cell("E&F", "C", m, -0.1));
  const auto charts = bar_charts(make_report(build_table(r)));
  REQUIRE(charts.size() == 2);
  for (const auto& [dataset, svg] : charts) {
    CHECK(svg.starts_with("<svg"));
    CHECK(svg.find("</svg>") != std::string::npos);
    for (const char* m : {"alpha", "beta", "gamma"}) CHECK(svg.find(m) != std::string::npos);
  }
  CHECK(charts.at("E&F").find("E&amp;F") != std::string::npos);
  // Three bars per trait.
  const auto& d = charts.at("D");
  std::size_t bars = 0;
  for (auto p = d.find("</title></rect>"); p != std::string::npos;
       p = d.find("</title></rect>", p + 1)) {
    ++bars;
  }
  CHECK(bars == 6);
}

TEST_CASE("load_directory reads run files in name order") {
  const auto dir = std::filesystem::temp_directory_path() / "resgene_report_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  const auto r = runs();
  for (std::size_t i = 0; i < r.size(); ++i) {
    std::ofstream(dir / ("run" + std::to_string(i) + ".json")) << run::serialize(r[i]);
  }
  std::ofstream(dir / "notes.txt") << "ignored";
  const auto loaded = load_directory(dir);
  CHECK(loaded == r);
  std::ofstream(dir / "zz.json") << "{broken";
  CHECK_THROWS_AS(load_directory(dir), ReportError);
  CHECK_THROWS_AS(load_directory(dir / "absent"), ReportError);
  std::filesystem::remove_all(dir);
}
