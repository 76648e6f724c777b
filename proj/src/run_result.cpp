#include "resgene/run_result.hpp"

namespace resgene::run {

using nlohmann::json;

namespace {

json opt_to_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

std::optional<double> opt_from_json(const json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<double>();
}

json opt_vec(const std::vector<std::optional<double>>& v) {
  json arr = json::array();
  for (const auto& x : v) arr.push_back(opt_to_json(x));
  return arr;
}

std::vector<std::optional<double>> opt_vec_from(const json& j) {
  std::vector<std::optional<double>> out;
  for (const auto& x : j) out.push_back(opt_from_json(x));
  return out;
}

const json& field(const json& j, const char* key) {
  const auto it = j.find(key);
  if (it == j.end()) {
    throw SchemaError(std::string("run result: missing field '") + key + "'");
  }
  return *it;
}

json model_to_json(const net::ModelConfig& c) {
  json j{{"input_channels", c.input_channels},
         {"input_side", c.input_side},
         {"stem_kernel", c.stem_kernel},
         {"stem_stride", c.stem_stride},
         {"stem_padding",
          c.stem_padding ? json(*c.stem_padding) : json(nullptr)},
         {"use_maxpool", c.use_maxpool},
         {"widths", c.widths},
         {"blocks", c.blocks},
         {"dropout", c.dropout},
         {"seed", c.seed}};
  return j;
}

net::ModelConfig model_from_json(const json& j) {
  net::ModelConfig c;
  c.input_channels = field(j, "input_channels").get<std::size_t>();
  c.input_side = field(j, "input_side").get<std::size_t>();
  c.stem_kernel = field(j, "stem_kernel").get<std::size_t>();
  c.stem_stride = field(j, "stem_stride").get<std::size_t>();
  if (const auto& pad = field(j, "stem_padding"); !pad.is_null()) {
    c.stem_padding = pad.get<std::size_t>();
  }
  c.use_maxpool = field(j, "use_maxpool").get<bool>();
  c.widths = field(j, "widths").get<std::vector<std::size_t>>();
  c.blocks = field(j, "blocks").get<std::vector<std::size_t>>();
  c.dropout = field(j, "dropout").get<double>();
  c.seed = field(j, "seed").get<std::uint64_t>();
  return c;
}

json train_to_json(const train::TrainConfig& c) {
  return json{{"batch_size", c.batch_size},
              {"learning_rate", c.learning_rate},
              {"momentum", c.momentum},
              {"epochs", c.epochs},
              {"seed", c.seed},
              {"standardize", c.standardize}};
}

train::TrainConfig train_from_json(const json& j) {
  train::TrainConfig c;
  c.batch_size = field(j, "batch_size").get<std::size_t>();
  c.learning_rate = field(j, "learning_rate").get<double>();
  c.momentum = field(j, "momentum").get<double>();
  c.epochs = field(j, "epochs").get<std::size_t>();
  c.seed = field(j, "seed").get<std::uint64_t>();
  c.standardize = field(j, "standardize").get<bool>();
  return c;
}

json layout_to_json(const tensorize::SnpLayout& l) {
  return json{{"d", l.d},
              {"mode", l.mode == tensorize::LayoutMode::kImage2d ? "image2d" : "tensor3d"},
              {"channels", l.channels},
              {"side", l.side},
              {"pad_count", l.pad_count},
              {"pad_value", l.pad_value},
              {"fill_order", "row_major_contiguous"}};
}

tensorize::SnpLayout layout_from_json(const json& j) {
  tensorize::SnpLayout l;
  l.d = field(j, "d").get<std::size_t>();
  const auto mode = field(j, "mode").get<std::string>();
  if (mode == "image2d") {
    l.mode = tensorize::LayoutMode::kImage2d;
  } else if (mode == "tensor3d") {
    l.mode = tensorize::LayoutMode::kTensor3d;
  } else {
    throw SchemaError("run result: unknown layout mode '" + mode + "'");
  }
  l.channels = field(j, "channels").get<std::size_t>();
  l.side = field(j, "side").get<std::size_t>();
  l.pad_count = field(j, "pad_count").get<std::size_t>();
  l.pad_value = field(j, "pad_value").get<double>();
  return l;
}

}  // namespace

json to_json(const RunResult& r) {
  json j;
  j["schema"] = kSchemaVersion;
  j["version"] = r.version;
  j["model"] = r.model;
  j["dataset"] = r.dataset;
  j["trait"] = r.trait;
  j["seed"] = r.seed;
  j["folds"] = r.folds;
  j["config"] = json::object();
  if (r.model_config) j["config"]["model"] = model_to_json(*r.model_config);
  if (r.train_config) j["config"]["train"] = train_to_json(*r.train_config);
  if (r.layout) j["config"]["layout"] = layout_to_json(*r.layout);
  if (r.ridge_config) {
    j["config"]["ridge"] = {{"lambda_grid", r.ridge_config->lambda_grid},
                            {"inner_folds", r.ridge_config->inner_folds}};
  }
  j["fold_pcc"] = opt_vec(r.fold_pcc);
  j["mean_pcc"] = opt_to_json(r.mean_pcc);
  j["undefined_folds"] = r.undefined_folds;
  j["pooled_pcc"] = opt_to_json(r.pooled_pcc);
  j["fold_lambda"] = opt_vec(r.fold_lambda);
  j["zero_variance_folds"] = r.zero_variance_folds;
  j["loss_traces"] = r.loss_traces;
  j["wall_seconds"] = r.wall_seconds;
  return j;
}

RunResult from_json(const json& j) {
  const int schema = field(j, "schema").get<int>();
  if (schema != kSchemaVersion) {
    throw SchemaError("run result: unsupported schema " + std::to_string(schema));
  }
  RunResult r;
  r.version = field(j, "version").get<std::string>();
  r.model = field(j, "model").get<std::string>();
  r.dataset = field(j, "dataset").get<std::string>();
  r.trait = field(j, "trait").get<std::string>();
  r.seed = field(j, "seed").get<std::uint64_t>();
  r.folds = field(j, "folds").get<std::size_t>();
  const auto& config = field(j, "config");
  if (config.contains("model")) r.model_config = model_from_json(config["model"]);
  if (config.contains("train")) r.train_config = train_from_json(config["train"]);
  if (config.contains("layout")) r.layout = layout_from_json(config["layout"]);
  if (config.contains("ridge")) {
    RidgeConfig rc;
    rc.lambda_grid = field(config["ridge"], "lambda_grid").get<std::vector<double>>();
    rc.inner_folds = field(config["ridge"], "inner_folds").get<std::size_t>();
    r.ridge_config = rc;
  }
  r.fold_pcc = opt_vec_from(field(j, "fold_pcc"));
  r.mean_pcc = opt_from_json(field(j, "mean_pcc"));
  r.undefined_folds = field(j, "undefined_folds").get<std::size_t>();
  r.pooled_pcc = opt_from_json(field(j, "pooled_pcc"));
  r.fold_lambda = opt_vec_from(field(j, "fold_lambda"));
  r.zero_variance_folds = field(j, "zero_variance_folds").get<std::size_t>();
  r.loss_traces = field(j, "loss_traces").get<std::vector<std::vector<double>>>();
  r.wall_seconds = field(j, "wall_seconds").get<double>();
  return r;
}

std::string serialize(const RunResult& result) {
  return to_json(result).dump(2) + "\n";
}

RunResult parse(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(std::string("run result: ") + e.what());
  }
  try {
    return from_json(j);
  } catch (const json::exception& e) {
    throw SchemaError(std::string("run result: ") + e.what());
  }
}

}  // namespace resgene::run
