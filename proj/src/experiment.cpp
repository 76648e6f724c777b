#include "resgene/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <map>

#include "resgene/ridge.hpp"
#include "resgene/rng.hpp"
#include "resgene/stats.hpp"

namespace resgene::experiment {

ModelKind parse_model(const std::string& name) {
  if (name == "resgene-2d") return ModelKind::kResGene2d;
  if (name == "resgene-t") return ModelKind::kResGeneT;
  if (name == "ridge") return ModelKind::kRidge;
  throw UsageError("unknown model '" + name +
                   "' (expected resgene-2d, resgene-t or ridge)");
}

std::string model_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kResGene2d:
      return "resgene-2d";
    case ModelKind::kResGeneT:
      return "resgene-t";
    case ModelKind::kRidge:
      return "ridge";
  }
  return "unknown";
}

void validate(const ExperimentConfig& config) {
  if (config.trait.empty()) throw UsageError("a trait name is required");
  if (config.folds < 2) throw UsageError("--folds must be at least 2");
  if (config.kind == ModelKind::kResGeneT && !config.channels) {
    throw UsageError("resgene-t requires --channels");
  }
  if (config.kind == ModelKind::kResGeneT && *config.channels < 1) {
    throw UsageError("--channels must be at least 1");
  }
  if (config.kind == ModelKind::kResGene2d && config.channels &&
      *config.channels != 1) {
    throw UsageError("resgene-2d reads a single-channel image; drop --channels");
  }
  if (config.widths.size() != config.blocks.size()) {
    throw UsageError("stage widths and block counts must have equal length");
  }
  if (config.kind != ModelKind::kRidge) {
    if (!(config.dropout >= 0.0 && config.dropout < 1.0)) {
      throw UsageError("--dropout must lie in [0, 1)");
    }
    try {
      train::validate(config.train);
    } catch (const train::TrainError& e) {
      throw UsageError(e.what());
    }
  }
}

Prepared prepare(const geno::GenotypeDataset& ds, const ExperimentConfig& config) {
  validate(config);
  Prepared p;
  p.view = geno::trait_view(ds, config.trait);
  if (p.view.rows.size() < config.folds) {
    throw std::runtime_error("trait '" + config.trait + "' has " +
                             std::to_string(p.view.rows.size()) +
                             " observed rows, fewer than " +
                             std::to_string(config.folds) + " folds");
  }
  if (config.kind == ModelKind::kRidge) {
    p.x = cv::encoded_matrix(ds, p.view.rows);
    return p;
  }
  const bool tensor = config.kind == ModelKind::kResGeneT;
  p.layout = tensorize::plan_layout(
      ds.d, tensor ? tensorize::LayoutMode::kTensor3d : tensorize::LayoutMode::kImage2d,
      tensor ? *config.channels : 1);
  p.model = net::ModelConfig::for_input(p.layout.channels, p.layout.side);
  p.model.stem_kernel = config.stem_kernel;
  p.model.dropout = config.dropout;
  p.model.seed = config.seed;
  if (!config.widths.empty()) {
    p.model.widths = config.widths;
    p.model.blocks = config.blocks;
  }
  net::validate(p.model);
  p.inputs.reserve(p.view.rows.size() * p.layout.cells());
  for (std::size_t row : p.view.rows) {
    const auto cells = tensorize::tensorize<float>({ds.row(row), ds.d}, p.layout);
    p.inputs.insert(p.inputs.end(), cells.begin(), cells.end());
  }
  return p;
}

cv::FoldTrainer make_trainer(const Prepared& prepared, const ExperimentConfig& config,
                             std::span<const double> targets) {
  if (config.kind == ModelKind::kRidge) {
    cv::RidgeSpec spec;
    spec.lambda_grid = config.ridge.lambda_grid;
    spec.inner_folds = config.ridge.inner_folds;
    spec.seed = mix_seed(config.seed, 1);
    const std::size_t d = prepared.x.size() / prepared.view.rows.size();
    return cv::ridge_trainer(prepared.x, d, targets, spec);
  }
  cv::NetworkSpec spec;
  spec.model = prepared.model;
  spec.train = config.train;
  spec.train.seed = config.seed;
  return cv::network_trainer(prepared.inputs, targets, spec);
}

namespace {

run::RunResult base_result(const Prepared& p, const ExperimentConfig& config) {
  run::RunResult r;
  r.model = model_name(config.kind);
  r.dataset = config.dataset;
  r.trait = config.trait;
  r.folds = config.folds;
  r.seed = config.seed;
  if (config.kind == ModelKind::kRidge) {
    run::RidgeConfig rc = config.ridge;
    if (rc.lambda_grid.empty()) rc.lambda_grid = ridge::default_lambda_grid();
    r.ridge_config = rc;
  } else {
    r.model_config = p.model;
    r.train_config = config.train;
    r.train_config->seed = config.seed;
    r.layout = p.layout;
  }
  return r;
}

void fill_cv(run::RunResult& r, cv::CvReport&& rep) {
  r.fold_pcc = std::move(rep.fold_pcc);
  r.mean_pcc = rep.mean_pcc;
  r.undefined_folds = rep.undefined_folds;
  r.pooled_pcc = rep.pooled_pcc;
  r.loss_traces = std::move(rep.loss_traces);
  r.fold_lambda = std::move(rep.fold_lambda);
  r.zero_variance_folds = rep.zero_variance_folds;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

run::RunResult run_experiment(const geno::GenotypeDataset& ds,
                              const ExperimentConfig& config) {
  const auto t0 = std::chrono::steady_clock::now();
  const Prepared p = prepare(ds, config);
  auto trainer = make_trainer(p, config, p.view.targets);
  auto report = cv::cross_validate(p.view.targets, trainer,
                                   {config.folds, config.seed, config.jobs});
  run::RunResult r = base_result(p, config);
  fill_cv(r, std::move(report));
  r.wall_seconds = config.reproducible ? 0.0 : seconds_since(t0);
  return r;
}

GridSpec GridSpec::defaults(ModelKind kind) {
  GridSpec g;
  if (kind == ModelKind::kResGeneT) g.channels = {20, 50};
  return g;
}

std::vector<GridPoint> enumerate(const GridSpec& grid) {
  if (grid.batch_sizes.empty() || grid.learning_rates.empty() ||
      grid.dropouts.empty()) {
    throw UsageError("tuning grid has an empty axis");
  }
  std::vector<GridPoint> points;
  const std::vector<std::optional<std::size_t>> channels =
      grid.channels.empty()
          ? std::vector<std::optional<std::size_t>>{std::nullopt}
          : std::vector<std::optional<std::size_t>>(grid.channels.begin(),
                                                    grid.channels.end());
  for (std::size_t bs : grid.batch_sizes) {
    for (double lr : grid.learning_rates) {
      for (double d : grid.dropouts) {
        for (const auto& c : channels) points.push_back({bs, lr, d, c});
      }
    }
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  return points;
}

std::size_t select_best(const std::vector<GridPoint>& points,
                        const std::vector<std::optional<double>>& scores) {
  if (points.empty() || points.size() != scores.size()) {
    throw UsageError("select_best: need one score per grid point");
  }
  std::vector<std::size_t> order(points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  std::size_t best = order.front();
  for (std::size_t i : order) {
    if (!scores[i]) continue;
    if (!scores[best] || *scores[i] > *scores[best]) best = i;
  }
  return best;
}

ExperimentConfig apply(const ExperimentConfig& base, const GridPoint& point) {
  ExperimentConfig c = base;
  c.train.batch_size = point.batch_size;
  c.train.learning_rate = point.learning_rate;
  c.dropout = point.dropout;
  if (point.channels) c.channels = point.channels;
  return c;
}

TuneResult tune(const geno::GenotypeDataset& ds, const ExperimentConfig& base,
                const GridSpec& grid, bool nested) {
  if (base.kind == ModelKind::kRidge) {
    throw UsageError("tuning applies to resgene-2d and resgene-t");
  }
  TuneResult out;
  out.points = enumerate(grid);
  if (base.kind == ModelKind::kResGeneT &&
      std::any_of(out.points.begin(), out.points.end(),
                  [](const GridPoint& p) { return !p.channels; }) &&
      !base.channels) {
    throw UsageError("resgene-t tuning needs a channel axis or --channels");
  }
  if (base.kind == ModelKind::kResGene2d && !grid.channels.empty()) {
    throw UsageError("resgene-2d has no channel axis to tune");
  }
  std::vector<ExperimentConfig> configs;
  for (const auto& p : out.points) configs.push_back(apply(base, p));
  for (const auto& c : configs) validate(c);

  out.runs.resize(configs.size());
  // Grid cells share the job budget; folds inside a cell run serially.
  cv::parallel_for(configs.size(), base.jobs, [&](std::size_t i) {
    auto c = configs[i];
    c.jobs = 1;
    out.runs[i] = run_experiment(ds, c);
  });
  std::vector<std::optional<double>> scores;
  for (const auto& r : out.runs) scores.push_back(r.mean_pcc);
  out.best = select_best(out.points, scores);
  if (!nested) return out;

  // Nested: selection sees only the outer training rows.
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::optional<std::size_t>, Prepared> prepared;
  for (const auto& c : configs) {
    if (!prepared.count(c.channels)) prepared.emplace(c.channels, prepare(ds, c));
  }
  const auto& targets = prepared.begin()->second.view.targets;
  std::vector<cv::FoldTrainer> trainers;
  for (const auto& c : configs) {
    trainers.push_back(make_trainer(prepared.at(c.channels), c, targets));
  }
  const std::size_t inner_k = std::max<std::size_t>(2, base.folds - 1);
  std::vector<GridPoint> choices;
  cv::FoldTrainer outer = [&](std::span<const std::size_t> train_rows,
                              std::span<const std::size_t> test_rows) {
    const auto inner = stats::kfold_split(train_rows.size(),
                                          std::min(inner_k, train_rows.size()),
                                          mix_seed(base.seed, 2));
    std::vector<std::optional<double>> inner_scores;
    for (const auto& trainer : trainers) {
      double sum = 0;
      std::size_t defined = 0;
      for (const auto& fold : inner) {
        std::vector<bool> held(train_rows.size(), false);
        for (std::size_t i : fold) held[i] = true;
        std::vector<std::size_t> tr, te;
        for (std::size_t i = 0; i < train_rows.size(); ++i) {
          (held[i] ? te : tr).push_back(train_rows[i]);
        }
        const auto pred = trainer(tr, te);
        std::vector<double> obs;
        for (std::size_t i : te) obs.push_back(targets[i]);
        if (obs.size() < 2) continue;
        if (auto r = stats::try_pcc(obs, pred.predictions)) {
          sum += *r;
          ++defined;
        }
      }
      inner_scores.push_back(defined ? std::optional<double>(sum / defined)
                                     : std::nullopt);
    }
    const std::size_t pick = select_best(out.points, inner_scores);
    choices.push_back(out.points[pick]);
    return trainers[pick](train_rows, test_rows);
  };
  auto report = cv::cross_validate(targets, outer, {base.folds, base.seed, 1});
  run::RunResult r = base_result(prepared.begin()->second, base);
  r.model = model_name(base.kind) + "-nested";
  fill_cv(r, std::move(report));
  r.wall_seconds = base.reproducible ? 0.0 : seconds_since(t0);
  out.nested = std::move(r);
  out.nested_choices = std::move(choices);
  return out;
}

}  // namespace resgene::experiment
