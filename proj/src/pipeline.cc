#include "rnnlens/pipeline.h"

#include "rnnlens/error.h"

namespace rnnlens {

Json RunConfig::ToJson() const {
  return Json{{"model", model.ToJson()},
              {"train", train.ToJson()},
              {"dataset", dataset.ToJson()},
              {"output", output.string()}};
}

RunConfig RunConfig::FromJson(const Json& j,
                              const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ConfigError("run config must be a JSON object");
  RequireKnownKeys(j, {"model", "train", "dataset", "output"}, "config");
  for (const char* key : {"model", "dataset", "output"}) {
    if (!j.contains(key)) {
      throw ConfigError(std::string("missing config key '") + key + "'");
    }
  }
  RunConfig c;
  c.dataset = DatasetConfig::FromJson(j["dataset"], base_dir);
  const Json& model = j["model"];
  if (!model.is_object()) throw ConfigError("config key 'model' must be an object");
  c.model = ModelConfig::FromJson(model);
  if (!model.contains("scheme")) c.model.scheme = c.dataset.scheme;
  c.train = TrainConfig::FromJson(j.value("train", Json::object()));
  if (!j["output"].is_string()) {
    throw ConfigError("config key 'output' must be a string");
  }
  c.output = j["output"].get<std::string>();
  if (c.output.is_relative() && !base_dir.empty()) c.output = base_dir / c.output;
  return c;
}

RunConfig LoadRunConfig(const std::filesystem::path& path) {
  Json j;
  try {
    j = Json::parse(ReadFile(path));
  } catch (const Json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " +
                      e.what());
  }
  return RunConfig::FromJson(
      j, std::filesystem::absolute(path).parent_path());
}

ModelCheckpoint InitModel(ModelConfig config, const Dataset& dataset) {
  if (config.scheme != dataset.scheme) {
    throw ConfigError("model scheme '" + std::string(SchemeName(config.scheme)) +
                      "' does not match the dataset scheme");
  }
  const int v = dataset.vocabulary.size();
  if (config.vocab_size == 0) config.vocab_size = v;
  if (config.num_classes == 0) config.num_classes = dataset.num_classes;
  if (config.vocab_size != v) {
    throw ConfigError("model.vocab_size " + std::to_string(config.vocab_size) +
                      " does not match the dataset vocabulary (" +
                      std::to_string(v) + ")");
  }
  if (config.num_classes != dataset.num_classes) {
    throw ConfigError("model.num_classes " +
                      std::to_string(config.num_classes) +
                      " does not match the dataset (" +
                      std::to_string(dataset.num_classes) + ")");
  }
  config.Validate();
  ModelCheckpoint ck;
  ck.config = config;
  ck.params = Parameters::Random(config, config.seed);
  ck.vocabulary = dataset.vocabulary;
  return ck;
}

RunResult RunTraining(const RunConfig& config, const EpochCallback& on_epoch) {
  const Dataset dataset = LoadDataset(config.dataset);
  RunResult r;
  r.checkpoint = InitModel(config.model, dataset);
  r.checkpoint.metadata.dataset = config.dataset.ToJson();
  r.report = Train(r.checkpoint, dataset, config.train, on_epoch);
  return r;
}

}  // namespace rnnlens
