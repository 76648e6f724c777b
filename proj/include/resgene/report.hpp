#pragma once

// Turns a set of RunResults into the traits x models rank report: CSV, JSON
// and grouped-bar SVG charts.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "resgene/run_result.hpp"
#include "resgene/stats.hpp"

namespace resgene::report {

class ReportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TraitKey {
  std::string dataset;
  std::string trait;
  auto operator<=>(const TraitKey&) const = default;
};

struct PccTable {
  std::vector<TraitKey> traits;
  std::vector<std::string> models;
  std::vector<std::vector<std::optional<double>>> pcc;  // traits x models
  // "dataset/trait x model" for every empty or undefined cell.
  std::vector<std::string> missing;
};

struct TableOptions {
  // Column order; empty sorts model names. Listed models with no runs show
  // up as missing cells.
  std::vector<std::string> models;
};

// Rows sort by (dataset, trait). A cell filled twice throws ReportError.
PccTable build_table(const std::vector<run::RunResult>& runs,
                     const TableOptions& options = {});

// Every *.json file in dir, in file-name order.
std::vector<run::RunResult> load_directory(const std::filesystem::path& dir);

struct Report {
  std::vector<TraitKey> traits;
  stats::AggregateReport aggregate;
  std::vector<std::vector<double>> pcc;
};

// Throws ReportError listing the missing cells when the table is incomplete.
// reference names the model gains are measured for; default is the last
// column.
Report make_report(const PccTable& table,
                   const std::optional<std::string>& reference = {});

// Header "Dataset,Trait,<models>", one rank row per trait, then the
// "Average PCC", "Average Relative % Gain", "Final Ranking" and
// "Average Ranking" rows.
std::string rank_csv(const Report& report);
std::string report_json(const Report& report);

// One chart per dataset: traits as groups, one bar per model.
std::map<std::string, std::string> bar_charts(const Report& report);

}  // namespace resgene::report
