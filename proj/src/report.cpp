#include "resgene/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace resgene::report {

namespace fs = std::filesystem;
using nlohmann::json;

PccTable build_table(const std::vector<run::RunResult>& runs,
                     const TableOptions& options) {
  std::set<TraitKey> keys;
  std::set<std::string> names;
  for (const auto& r : runs) {
    keys.insert({r.dataset, r.trait});
    names.insert(r.model);
  }
  PccTable t;
  t.traits.assign(keys.begin(), keys.end());
  if (options.models.empty()) {
    t.models.assign(names.begin(), names.end());
  } else {
    t.models = options.models;
    std::set<std::string> seen;
    for (const auto& m : t.models) {
      if (!seen.insert(m).second) throw ReportError("model '" + m + "' listed twice");
    }
    for (const auto& m : names) {
      if (!seen.count(m)) {
        throw ReportError("run for model '" + m + "' is not in the model list");
      }
    }
  }
  t.pcc.assign(t.traits.size(),
               std::vector<std::optional<double>>(t.models.size()));
  std::vector<std::vector<bool>> filled(t.traits.size(),
                                        std::vector<bool>(t.models.size(), false));
  for (const auto& r : runs) {
    const auto i = static_cast<std::size_t>(
        std::lower_bound(t.traits.begin(), t.traits.end(), TraitKey{r.dataset, r.trait}) -
        t.traits.begin());
    const auto j = static_cast<std::size_t>(
        std::find(t.models.begin(), t.models.end(), r.model) - t.models.begin());
    if (filled[i][j]) {
      throw ReportError("two runs for " + r.dataset + "/" + r.trait + " x " + r.model);
    }
    filled[i][j] = true;
    t.pcc[i][j] = r.mean_pcc;
  }
  for (std::size_t i = 0; i < t.traits.size(); ++i) {
    for (std::size_t j = 0; j < t.models.size(); ++j) {
      if (t.pcc[i][j]) continue;
      std::string cell = t.traits[i].dataset + "/" + t.traits[i].trait + " x " + t.models[j];
      if (filled[i][j]) cell += " (undefined PCC)";
      t.missing.push_back(std::move(cell));
    }
  }
  return t;
}

std::vector<run::RunResult> load_directory(const fs::path& dir) {
  if (!fs::is_directory(dir)) {
    throw ReportError("not a directory: " + dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<run::RunResult> runs;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    try {
      runs.push_back(run::parse(buf.str()));
    } catch (const run::SchemaError& e) {
      throw ReportError(f.string() + ": " + e.what());
    }
  }
  return runs;
}

Report make_report(const PccTable& table, const std::optional<std::string>& reference) {
  if (table.traits.empty() || table.models.empty()) {
    throw ReportError("no run results to report");
  }
  if (!table.missing.empty()) {
    std::string msg = "incomplete traits x models grid; missing cells:";
    for (const auto& m : table.missing) msg += "\n  " + m;
    throw ReportError(msg);
  }
  std::optional<std::size_t> ref;
  if (reference) {
    const auto it = std::find(table.models.begin(), table.models.end(), *reference);
    if (it == table.models.end()) {
      throw ReportError("reference model '" + *reference + "' has no runs");
    }
    ref = static_cast<std::size_t>(it - table.models.begin());
  }
  Report rep;
  rep.traits = table.traits;
  std::vector<std::string> labels;
  for (const auto& k : table.traits) {
    labels.push_back(k.dataset + "/" + k.trait);
    std::vector<double> row;
    for (const auto& v : table.pcc[labels.size() - 1]) row.push_back(*v);
    rep.pcc.push_back(std::move(row));
  }
  try {
    rep.aggregate = stats::aggregate_report(labels, table.models, rep.pcc, ref);
  } catch (const stats::StatsError& e) {
    throw ReportError(e.what());
  }
  return rep;
}

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  std::string s = buf;
  if (s.front() == '-' && s.find_first_not_of("0.", 1) == std::string::npos) {
    s.erase(0, 1);
  }
  return s;
}

// Fixed precision with trailing zeros dropped: 6.40 -> 6.4, 3.00 -> 3.
std::string trimmed(double v, int digits) {
  std::string s = fixed(v, digits);
  if (s.find('.') != std::string::npos) {
    while (s.back() == '0') s.pop_back();
    if (s.back() == '.') s.pop_back();
  }
  return s;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(const std::string& s) {
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

}  // namespace

std::string rank_csv(const Report& report) {
  const auto& a = report.aggregate;
  std::ostringstream out;
  out << "Dataset,Trait";
  for (const auto& m : a.models) out << ',' << csv_field(m);
  out << '\n';
  for (std::size_t i = 0; i < report.traits.size(); ++i) {
    out << csv_field(report.traits[i].dataset) << ','
        << csv_field(report.traits[i].trait);
    for (double r : a.ranks[i]) out << ',' << trimmed(r, 4);
    out << '\n';
  }
  out << "Average PCC,";
  for (double v : a.average_pcc) out << ',' << fixed(v, 4);
  out << "\nAverage Relative % Gain,";
  for (const auto& g : a.relative_gain) out << ',' << (g ? fixed(*g, 2) + "%" : "-");
  out << "\nFinal Ranking,";
  for (std::size_t w : a.first_place) {
    out << ',' << stats::final_ranking_label(w, report.traits.size());
  }
  out << "\nAverage Ranking,";
  for (double r : a.average_rank) out << ',' << trimmed(r, 4);
  out << '\n';
  return out.str();
}

std::string report_json(const Report& report) {
  const auto& a = report.aggregate;
  json j;
  j["schema"] = run::kSchemaVersion;
  j["models"] = a.models;
  j["reference"] = a.models[a.reference];
  json rows = json::array();
  for (std::size_t i = 0; i < report.traits.size(); ++i) {
    rows.push_back({{"dataset", report.traits[i].dataset},
                    {"trait", report.traits[i].trait},
                    {"pcc", report.pcc[i]},
                    {"ranks", a.ranks[i]}});
  }
  j["traits"] = std::move(rows);
  j["average_pcc"] = a.average_pcc;
  json gains = json::array();
  for (const auto& g : a.relative_gain) gains.push_back(g ? json(*g) : json(nullptr));
  j["relative_gain_percent"] = std::move(gains);
  j["first_place"] = a.first_place;
  json labels = json::array();
  for (std::size_t w : a.first_place) {
    labels.push_back(stats::final_ranking_label(w, report.traits.size()));
  }
  j["final_ranking"] = std::move(labels);
  j["average_rank"] = a.average_rank;
  j["friedman"] = {
      {"chi2", a.friedman ? json(*a.friedman) : json(nullptr)},
      {"df", a.models.size() - 1},
      {"p_value", a.p_value ? json(*a.p_value) : json(nullptr)},
      {"defined", a.friedman.has_value()}};
  return j.dump(2) + "\n";
}

std::map<std::string, std::string> bar_charts(const Report& report) {
  static constexpr const char* kPalette[] = {
      "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f",
      "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac"};
  const auto& models = report.aggregate.models;
  const std::size_t m = models.size();

  std::map<std::string, std::vector<std::size_t>> by_dataset;
  for (std::size_t i = 0; i < report.traits.size(); ++i) {
    by_dataset[report.traits[i].dataset].push_back(i);
  }

  std::map<std::string, std::string> charts;
  for (const auto& [dataset, rows] : by_dataset) {
    double lo = 0.0, hi = 0.0;
    for (std::size_t i : rows) {
      for (double v : report.pcc[i]) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
    }
    // Round the axis out to the next tenth.
    lo = std::floor(lo * 10.0) / 10.0;
    hi = std::max(std::ceil(hi * 10.0) / 10.0, lo + 0.1);

    const double bar = 14.0, gap = 24.0, left = 60.0, top = 40.0, plot_h = 260.0;
    const double group_w = bar * static_cast<double>(m) + gap;
    const double plot_w = group_w * static_cast<double>(rows.size());
    const double legend_w = 160.0;
    const double width = left + plot_w + 20.0 + legend_w;
    const double height = top + plot_h + 50.0;
    const auto y_of = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fixed(width, 0)
      << "\" height=\"" << fixed(height, 0) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    s << "<text x=\"" << fixed(left, 0) << "\" y=\"20\" font-size=\"14\">"
      << xml_escape(dataset) << ": mean PCC by trait</text>\n";
    for (int t = 0; t <= static_cast<int>(std::lround((hi - lo) * 10.0)); ++t) {
      const double v = lo + 0.1 * t;
      const double y = y_of(v);
      s << "<line x1=\"" << fixed(left, 1) << "\" x2=\"" << fixed(left + plot_w, 1)
        << "\" y1=\"" << fixed(y, 1) << "\" y2=\"" << fixed(y, 1)
        << "\" stroke=\"#dddddd\"/>\n";
      s << "<text x=\"" << fixed(left - 6, 1) << "\" y=\"" << fixed(y + 4, 1)
        << "\" text-anchor=\"end\">" << fixed(v, 1) << "</text>\n";
    }
    const double zero_y = y_of(0.0);
    for (std::size_t g = 0; g < rows.size(); ++g) {
      const std::size_t i = rows[g];
      const double x0 = left + group_w * static_cast<double>(g) + gap / 2;
      for (std::size_t j = 0; j < m; ++j) {
        const double v = report.pcc[i][j];
        const double y = y_of(v);
        s << "<rect x=\"" << fixed(x0 + bar * static_cast<double>(j), 1) << "\" y=\""
          << fixed(std::min(y, zero_y), 1) << "\" width=\"" << fixed(bar - 1, 1)
          << "\" height=\"" << fixed(std::abs(zero_y - y), 1) << "\" fill=\""
          << kPalette[j % std::size(kPalette)] << "\"><title>" << xml_escape(models[j])
          << " " << fixed(v, 4) << "</title></rect>\n";
      }
      s << "<text x=\"" << fixed(x0 + bar * static_cast<double>(m) / 2, 1) << "\" y=\""
        << fixed(top + plot_h + 18, 1) << "\" text-anchor=\"middle\">"
        << xml_escape(report.traits[i].trait) << "</text>\n";
    }
    s << "<line x1=\"" << fixed(left, 1) << "\" x2=\"" << fixed(left + plot_w, 1)
      << "\" y1=\"" << fixed(zero_y, 1) << "\" y2=\"" << fixed(zero_y, 1)
      << "\" stroke=\"black\"/>\n";
    const double lx = left + plot_w + 20.0;
    for (std::size_t j = 0; j < m; ++j) {
      const double ly = top + 16.0 * static_cast<double>(j);
      s << "<rect x=\"" << fixed(lx, 1) << "\" y=\"" << fixed(ly, 1)
        << "\" width=\"10\" height=\"10\" fill=\"" << kPalette[j % std::size(kPalette)]
        << "\"/>\n";
      s << "<text x=\"" << fixed(lx + 14, 1) << "\" y=\"" << fixed(ly + 9, 1) << "\">"
        << xml_escape(models[j]) << "</text>\n";
    }
    s << "</svg>\n";
    charts[dataset] = s.str();
  }
  return charts;
}

}  // namespace resgene::report
