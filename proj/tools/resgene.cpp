// resgene: synth, encode, train, tune and report subcommands.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "resgene/alloc.hpp"
#include "resgene/experiment.hpp"
#include "resgene/geno_io.hpp"
#include "resgene/report.hpp"
#include "resgene/synth.hpp"
#include "resgene/tensorize.hpp"

namespace fs = std::filesystem;
using namespace resgene;
using experiment::UsageError;

namespace {

constexpr int kRuntimeFailure = 1;
constexpr int kUsage = 2;

// --seed wins, then RESGENE_SEED, then 0.
std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
  if (flag) return *flag;
  const char* env = std::getenv("RESGENE_SEED");
  if (!env || !*env) return 0;
  std::uint64_t v = 0;
  const std::string s = env;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw UsageError("RESGENE_SEED must be a non-negative integer, got '" + s + "'");
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string fmt(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pcc_text(const std::optional<double>& v) {
  return v ? fmt(*v, 4) : "undefined";
}

// ---- synth ----

struct SynthArgs {
  synth::SynthSpec spec;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* c = app.add_subcommand("synth", "Generate a synthetic genotype/phenotype dataset");
  c->add_option("--n", a.spec.n, "Varieties")->capture_default_str();
  c->add_option("--d", a.spec.d, "SNPs")->capture_default_str();
  c->add_option("--causal,--q", a.spec.causal, "Additive causal SNPs")->capture_default_str();
  c->add_option("--effect-scale", a.spec.effect_scale, "Std of causal effects")
      ->capture_default_str();
  c->add_option("--epistatic-pairs", a.spec.epistatic_pairs, "Pairwise interaction terms")
      ->capture_default_str();
  c->add_option("--h2", a.spec.h2, "Heritability in [0, 1]")->capture_default_str();
  c->add_option("--missing-rate", a.spec.missing_rate, "Fraction of N calls")
      ->capture_default_str();
  c->add_option("--trait", a.spec.trait, "Trait column name")->capture_default_str();
  c->add_option("--seed", a.seed, "RNG seed (default: RESGENE_SEED or 0)");
  c->add_option("--out", a.out, "Output directory")->capture_default_str();
}

int run_synth(SynthArgs& a) {
  a.spec.seed = resolve_seed(a.seed);
  synth::validate(a.spec);
  const auto result = synth::generate(a.spec);
  synth::write_files(a.out, result);
  std::cout << "wrote genotypes.csv, phenotypes.csv, truth.json to " << a.out
            << " (realized h2 " << fmt(result.truth.realized_h2, 4) << ")\n";
  return 0;
}

// ---- encode ----

struct EncodeArgs {
  std::string geno;
  std::string out;
  std::string layout = "matrix";
  std::optional<std::size_t> channels;
};

void add_encode(CLI::App& app, EncodeArgs& a) {
  auto* c = app.add_subcommand("encode", "Encode genotypes as a matrix or image/tensor dumps");
  c->add_option("--geno", a.geno, "Genotype CSV")->required();
  c->add_option("--out", a.out, "Output CSV (matrix) or directory (image2d, tensor3d)")
      ->required();
  c->add_option("--layout", a.layout, "matrix, image2d or tensor3d")
      ->check(CLI::IsMember({"matrix", "image2d", "tensor3d"}))
      ->capture_default_str();
  c->add_option("--channels", a.channels, "Channel count for tensor3d");
}

std::string safe_name(const std::string& id) {
  std::string s;
  for (char ch : id) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' ||
                    ch == '.';
    s += ok ? ch : '_';
  }
  return s;
}

int run_encode(const EncodeArgs& a) {
  if (a.layout == "tensor3d" && !a.channels) throw UsageError("tensor3d requires --channels");
  if (a.layout != "tensor3d" && a.channels) {
    throw UsageError("--channels applies to the tensor3d layout only");
  }
  const auto raw = geno::load_genotypes(a.geno);
  geno::GenotypeDataset ds;
  ds.variety_ids = raw.variety_ids;
  ds.d = raw.d();
  ds.encoded.reserve(raw.cells.size());
  for (std::size_t i = 0; i < raw.n(); ++i) {
    for (std::size_t j = 0; j < ds.d; ++j) {
      ds.encoded.push_back(geno::encode_base(raw.at(i, j), i, j));
    }
  }
  if (a.layout == "matrix") {
    std::ostringstream out;
    out << "variety";
    for (const auto& name : raw.snp_ids) out << ',' << name;
    out << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
      out << ds.variety_ids[i];
      for (std::size_t j = 0; j < ds.d; ++j) out << ',' << static_cast<int>(ds.row(i)[j]);
      out << '\n';
    }
    write_text(a.out, out.str());
    std::cout << "encoded " << ds.n() << " x " << ds.d << " -> " << a.out << '\n';
    return 0;
  }
  const auto mode = a.layout == "image2d" ? tensorize::LayoutMode::kImage2d
                                          : tensorize::LayoutMode::kTensor3d;
  const auto layout = tensorize::plan_layout(ds.d, mode, a.channels.value_or(1));
  fs::create_directories(a.out);
  std::ostringstream index;
  index << "variety,file\n";
  for (std::size_t i = 0; i < ds.n(); ++i) {
    const auto cells = tensorize::tensorize<float>({ds.row(i), ds.d}, layout);
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "%06zu_", i);
    const std::string file = prefix + safe_name(ds.variety_ids[i]) + ".rgtn";
    std::ofstream out(fs::path(a.out) / file, std::ios::binary);
    tensorize::write_rgtn(out, cells, layout.channels, layout.side);
    if (!out) throw std::runtime_error("write failed: " + file);
    index << ds.variety_ids[i] << ',' << file << '\n';
  }
  write_text(fs::path(a.out) / "index.csv", index.str());
  std::cout << "encoded " << ds.n() << " samples as " << layout.channels << "x" << layout.side
            << "x" << layout.side << " (" << layout.pad_count << " pad cells) -> " << a.out
            << '\n';
  return 0;
}

// ---- train / tune shared flags ----

struct RunArgs {
  std::string data = ".";
  std::string geno;
  std::string pheno;
  std::string dataset;
  std::string model = "resgene-2d";
  std::string trait;
  std::optional<std::size_t> channels;
  std::size_t stem_kernel = 3;
  std::size_t bs = 32;
  double lr = 0.001;
  double momentum = 0.0;
  double dropout = 0.1;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> folds;
  std::optional<std::uint64_t> seed;
  std::size_t jobs = 1;
  std::string preset = "full";
  bool no_standardize = false;
  bool reproducible = false;
  std::vector<double> lambdas;
  std::string out;
};

void add_run_flags(CLI::App* c, RunArgs& a, bool tuning) {
  c->add_option("--data", a.data, "Directory with genotypes.csv and phenotypes.csv")
      ->capture_default_str();
  c->add_option("--geno", a.geno, "Genotype CSV (overrides --data)");
  c->add_option("--pheno", a.pheno, "Phenotype CSV (overrides --data)");
  c->add_option("--dataset", a.dataset, "Dataset label (default: data directory name)");
  c->add_option("--model", a.model, "resgene-2d, resgene-t or ridge")->capture_default_str();
  c->add_option("--trait", a.trait, "Phenotype column")->required();
  c->add_option("--channels", a.channels, "Tensor channels C (resgene-t)");
  c->add_option("--stem-kernel", a.stem_kernel, "Stem convolution size")
      ->capture_default_str();
  if (!tuning) {
    c->add_option("--bs", a.bs, "Batch size")->capture_default_str();
    c->add_option("--lr", a.lr, "Learning rate")->capture_default_str();
    c->add_option("--dropout", a.dropout, "Dropout before the head")->capture_default_str();
  }
  c->add_option("--momentum", a.momentum, "SGD momentum")->capture_default_str();
  c->add_option("--epochs", a.epochs, "Training epochs (default 100)");
  c->add_option("--folds", a.folds, "Cross-validation folds (default 10)");
  c->add_option("--seed", a.seed, "Seed (default: RESGENE_SEED or 0)");
  c->add_option("--jobs", a.jobs, "Parallel folds or grid cells")->capture_default_str();
  c->add_option("--preset", a.preset,
                "full, or tiny: widths 8/16/32/64, 3 epochs, 3 folds unless given")
      ->check(CLI::IsMember({"full", "tiny"}))
      ->capture_default_str();
  c->add_flag("--no-standardize", a.no_standardize, "Train on raw targets");
  c->add_flag("--reproducible", a.reproducible, "Record wall_seconds as 0");
  c->add_option("--lambda", a.lambdas, "Ridge penalty grid (ridge)");
}

struct Loaded {
  geno::GenotypeDataset ds;
  std::string dataset;
};

Loaded load_data(const RunArgs& a) {
  const fs::path geno = a.geno.empty() ? fs::path(a.data) / "genotypes.csv" : fs::path(a.geno);
  const fs::path pheno =
      a.pheno.empty() ? fs::path(a.data) / "phenotypes.csv" : fs::path(a.pheno);
  Loaded l;
  l.ds = geno::build_dataset(geno::load_genotypes(geno), geno::load_phenotypes(pheno));
  l.dataset = a.dataset;
  if (l.dataset.empty()) {
    l.dataset = fs::weakly_canonical(fs::absolute(a.data)).filename().string();
    if (l.dataset.empty()) l.dataset = "dataset";
  }
  return l;
}

experiment::ExperimentConfig make_config(const RunArgs& a, const std::string& dataset) {
  experiment::ExperimentConfig c;
  c.kind = experiment::parse_model(a.model);
  c.dataset = dataset;
  c.trait = a.trait;
  c.channels = a.channels;
  c.stem_kernel = a.stem_kernel;
  c.dropout = a.dropout;
  c.train.batch_size = a.bs;
  c.train.learning_rate = a.lr;
  c.train.momentum = a.momentum;
  c.train.standardize = !a.no_standardize;
  c.seed = resolve_seed(a.seed);
  c.jobs = a.jobs == 0 ? 1 : a.jobs;
  c.reproducible = a.reproducible;
  c.ridge.lambda_grid = a.lambdas;
  if (c.kind != experiment::ModelKind::kRidge && !a.lambdas.empty()) {
    throw UsageError("--lambda applies to the ridge model only");
  }
  if (a.preset == "tiny") {
    c.widths = {8, 16, 32, 64};
    c.blocks = {1, 1, 1, 1};
    c.train.epochs = 3;
    c.folds = 3;
  }
  if (a.epochs) c.train.epochs = *a.epochs;
  if (a.folds) c.folds = *a.folds;
  experiment::validate(c);
  return c;
}

std::string default_name(const run::RunResult& r) {
  return safe_name(r.dataset + "_" + r.trait + "_" + r.model) + ".json";
}

void print_run(const run::RunResult& r) {
  std::cout << r.model << " " << r.dataset << "/" << r.trait << ": mean PCC "
            << pcc_text(r.mean_pcc) << " over " << r.fold_pcc.size() - r.undefined_folds
            << " folds";
  if (r.undefined_folds) std::cout << " (" << r.undefined_folds << " undefined)";
  if (r.zero_variance_folds) {
    std::cout << "; warning: " << r.zero_variance_folds
              << " folds had constant training targets";
  }
  std::cout << '\n';
}

// ---- train ----

int run_train(const RunArgs& a) {
  auto config = make_config(a, "");
  const auto data = load_data(a);
  config.dataset = data.dataset;
  const auto result = experiment::run_experiment(data.ds, config);
  const fs::path out = a.out.empty() ? fs::path(default_name(result)) : fs::path(a.out);
  write_text(out, run::serialize(result));
  print_run(result);
  std::cout << "wrote " << out.string() << '\n';
  return 0;
}

// ---- tune ----

struct TuneArgs {
  RunArgs run;
  std::string grid_file;
  bool nested = false;
};

experiment::GridSpec load_grid(const std::string& path, experiment::ModelKind kind) {
  auto grid = experiment::GridSpec::defaults(kind);
  if (path.empty()) return grid;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read grid file " + path);
  nlohmann::json j;
  try {
    in >> j;
    if (j.contains("batch_size")) grid.batch_sizes = j["batch_size"].get<std::vector<std::size_t>>();
    if (j.contains("learning_rate")) grid.learning_rates = j["learning_rate"].get<std::vector<double>>();
    if (j.contains("dropout")) grid.dropouts = j["dropout"].get<std::vector<double>>();
    if (j.contains("channels")) grid.channels = j["channels"].get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError("grid file " + path + ": " + e.what());
  }
  return grid;
}

std::string point_label(const experiment::GridPoint& p) {
  std::string s = "bs" + std::to_string(p.batch_size) + "_lr" + fmt(p.learning_rate, 4) +
                  "_d" + fmt(p.dropout, 2);
  if (p.channels) s += "_c" + std::to_string(*p.channels);
  return s;
}

nlohmann::json point_json(const experiment::GridPoint& p) {
  nlohmann::json j{{"batch_size", p.batch_size},
                   {"learning_rate", p.learning_rate},
                   {"dropout", p.dropout}};
  j["channels"] = p.channels ? nlohmann::json(*p.channels) : nlohmann::json(nullptr);
  return j;
}

int run_tune(TuneArgs& t) {
  auto base = make_config(t.run, "");
  if (base.kind == experiment::ModelKind::kRidge) {
    throw UsageError("tune applies to resgene-2d and resgene-t");
  }
  const auto grid = load_grid(t.grid_file, base.kind);
  const auto points = experiment::enumerate(grid);
  const auto data = load_data(t.run);
  base.dataset = data.dataset;
  std::cout << "evaluating " << points.size() << " configurations\n";
  const auto result = experiment::tune(data.ds, base, grid, t.nested);

  const fs::path out = t.run.out.empty() ? fs::path("tune") : fs::path(t.run.out);
  fs::create_directories(out);
  nlohmann::json summary;
  summary["schema"] = run::kSchemaVersion;
  summary["model"] = experiment::model_name(base.kind);
  summary["dataset"] = base.dataset;
  summary["trait"] = base.trait;
  summary["selection"] = "full-cv-mean-pcc";
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < result.points.size(); ++i) {
    const auto& r = result.runs[i];
    const std::string file = point_label(result.points[i]) + ".json";
    write_text(out / file, run::serialize(r));
    auto row = point_json(result.points[i]);
    row["mean_pcc"] = r.mean_pcc ? nlohmann::json(*r.mean_pcc) : nlohmann::json(nullptr);
    row["file"] = file;
    rows.push_back(std::move(row));
    std::cout << (i == result.best ? "* " : "  ") << point_label(result.points[i])
              << "  mean PCC " << pcc_text(r.mean_pcc) << '\n';
  }
  summary["grid"] = std::move(rows);
  summary["best"] = point_json(result.points[result.best]);
  summary["best_mean_pcc"] = result.runs[result.best].mean_pcc
                                 ? nlohmann::json(*result.runs[result.best].mean_pcc)
                                 : nlohmann::json(nullptr);
  if (result.nested) {
    write_text(out / "nested.json", run::serialize(*result.nested));
    nlohmann::json choices = nlohmann::json::array();
    for (const auto& p : result.nested_choices) choices.push_back(point_json(p));
    summary["nested"] = {{"mean_pcc", result.nested->mean_pcc
                                          ? nlohmann::json(*result.nested->mean_pcc)
                                          : nlohmann::json(nullptr)},
                         {"fold_choices", std::move(choices)},
                         {"file", "nested.json"}};
    std::cout << "nested CV mean PCC " << pcc_text(result.nested->mean_pcc) << '\n';
  }
  write_text(out / "tune.json", summary.dump(2) + "\n");
  std::cout << "best " << point_label(result.points[result.best]) << "; results in "
            << out.string() << '\n';
  return 0;
}

// ---- report ----

struct ReportArgs {
  std::string runs;
  std::string out = "report";
  std::vector<std::string> models;
  std::optional<std::string> reference;
  bool svg = false;
};

void add_report(CLI::App& app, ReportArgs& a) {
  auto* c = app.add_subcommand("report", "Rank table, Friedman test and charts from run results");
  c->add_option("--runs", a.runs, "Directory of RunResult JSON files")->required();
  c->add_option("--out", a.out, "Output directory")->capture_default_str();
  c->add_option("--models", a.models, "Column order")->delimiter(',');
  c->add_option("--reference", a.reference, "Model the gains are computed for (default: last)");
  c->add_flag("--svg", a.svg, "Write one grouped-bar SVG per dataset");
}

int run_report(const ReportArgs& a) {
  const auto runs = report::load_directory(a.runs);
  const auto table = report::build_table(runs, {a.models});
  if (!table.missing.empty()) {
    std::cerr << "error: incomplete traits x models grid; missing cells:\n";
    for (const auto& m : table.missing) std::cerr << "  " << m << '\n';
    return kRuntimeFailure;
  }
  const auto rep = report::make_report(table, a.reference);
  const fs::path out = a.out;
  write_text(out / "ranks.csv", report::rank_csv(rep));
  write_text(out / "report.json", report::report_json(rep));
  if (a.svg) {
    for (const auto& [dataset, svg] : report::bar_charts(rep)) {
      write_text(out / (safe_name(dataset) + ".svg"), svg);
    }
  }
  std::cout << report::rank_csv(rep);
  if (rep.aggregate.friedman) {
    std::cout << "Friedman chi2 " << fmt(*rep.aggregate.friedman, 3) << " (df "
              << rep.aggregate.models.size() - 1 << "), p = " << *rep.aggregate.p_value
              << '\n';
  } else {
    std::cout << "Friedman chi2 undefined for a single model\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"resgene: genomic prediction from SNP images and tensors"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(run::kToolkitVersion));

  SynthArgs synth_args;
  add_synth(app, synth_args);
  EncodeArgs encode_args;
  add_encode(app, encode_args);
  RunArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "k-fold cross-validated training run");
  add_run_flags(train_cmd, train_args, false);
  train_cmd->add_option("--out", train_args.out, "RunResult JSON path");
  TuneArgs tune_args;
  auto* tune_cmd = app.add_subcommand("tune", "Grid search over BS, LR, D (and C)");
  add_run_flags(tune_cmd, tune_args.run, true);
  tune_cmd->add_option("--grid", tune_args.grid_file, "JSON grid file");
  tune_cmd->add_flag("--nested", tune_args.nested, "Also run nested CV selection");
  tune_cmd->add_option("--out", tune_args.run.out, "Output directory (default: tune)");
  ReportArgs report_args;
  add_report(app, report_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (app.got_subcommand("synth")) return run_synth(synth_args);
    if (app.got_subcommand("encode")) return run_encode(encode_args);
    if (app.got_subcommand("train")) return run_train(train_args);
    if (app.got_subcommand("tune")) return run_tune(tune_args);
    if (app.got_subcommand("report")) return run_report(report_args);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\nRun with --help for usage.\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeFailure;
  }
  return kUsage;
}
