#ifndef RNNLENS_PIPELINE_H_
#define RNNLENS_PIPELINE_H_

#include <filesystem>

#include "rnnlens/corpus.h"
#include "rnnlens/models.h"
#include "rnnlens/trainer.h"

namespace rnnlens {

// A complete training run:
//   {"model": {...}, "train": {...}, "dataset": {...}, "output": "path"}
// Unknown keys anywhere are a ConfigError naming the key. model.vocab_size
// and model.num_classes may be omitted (0) and are then taken from the
// dataset; model.scheme defaults to the dataset scheme.
struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  DatasetConfig dataset;
  std::filesystem::path output;

  Json ToJson() const;
  // Relative paths resolve against `base_dir`.
  static RunConfig FromJson(const Json& j,
                            const std::filesystem::path& base_dir = {});
};

RunConfig LoadRunConfig(const std::filesystem::path& path);

// Fresh, randomly initialised model sized for `dataset`. Throws ConfigError
// when explicit sizes disagree with the dataset.
ModelCheckpoint InitModel(ModelConfig config, const Dataset& dataset);

struct RunResult {
  ModelCheckpoint checkpoint;
  TrainReport report;
};

// Loads the dataset, trains, and records the dataset in the checkpoint
// metadata. Does not write the output file.
RunResult RunTraining(const RunConfig& config,
                      const EpochCallback& on_epoch = nullptr);

}  // namespace rnnlens

#endif  // RNNLENS_PIPELINE_H_
