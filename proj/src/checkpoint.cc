#include <set>

#include "rnnlens/error.h"
#include "rnnlens/models.h"

namespace rnnlens {

Json CheckpointToJson(const ModelCheckpoint& checkpoint) {
  Json tensors = Json::object();
  checkpoint.params.ForEach(
      checkpoint.config,
      [&](const std::string& name, const Eigen::MatrixXd& t) {
        Json data = Json::array();
        for (Eigen::Index r = 0; r < t.rows(); ++r) {
          for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(t(r, c));
        }
        tensors[name] = Json{{"shape", {t.rows(), t.cols()}},
                             {"data", std::move(data)}};
      });
  const auto& md = checkpoint.metadata;
  return Json{{"format_version", kCheckpointFormatVersion},
              {"config", checkpoint.config.ToJson()},
              {"vocabulary", checkpoint.vocabulary.ToJson()},
              {"tensors", std::move(tensors)},
              {"metadata",
               {{"epochs", md.epochs},
                {"final_metrics", md.final_metrics},
                {"seed", md.seed},
                {"train_report", md.train_report},
                {"dataset", md.dataset}}}};
}

ModelCheckpoint CheckpointFromJson(const Json& j) {
  if (!j.is_object() || !j.contains("format_version")) {
    throw CheckpointCorrupt("checkpoint: missing format_version");
  }
  int version = 0;
  try {
    version = j.at("format_version").get<int>();
  } catch (const nlohmann::json::exception&) {
    throw CheckpointCorrupt("checkpoint: format_version is not an integer");
  }
  if (version != kCheckpointFormatVersion) {
    throw CheckpointVersionError(
        "checkpoint format version " + std::to_string(version) +
        " is not supported (expected " +
        std::to_string(kCheckpointFormatVersion) + ")");
  }

  ModelCheckpoint ckpt;
  try {
    ckpt.config = ModelConfig::FromJson(j.at("config"));
    ckpt.config.Validate();
    ckpt.vocabulary = Vocabulary::FromJson(j.at("vocabulary"));
    const Json& md = j.at("metadata");
    ckpt.metadata.epochs = md.value("epochs", 0);
    ckpt.metadata.final_metrics =
        md.value("final_metrics", std::map<std::string, double>{});
    ckpt.metadata.seed = md.value("seed", std::uint64_t{0});
    ckpt.metadata.train_report = md.value("train_report", Json::object());
    ckpt.metadata.dataset = md.value("dataset", Json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointCorrupt(std::string("checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointCorrupt(std::string("checkpoint config: ") + e.what());
  } catch (const InvalidArgument& e) {
    throw CheckpointCorrupt(std::string("checkpoint: ") + e.what());
  }
  if (ckpt.vocabulary.size() != ckpt.config.vocab_size) {
    throw ShapeError("checkpoint vocabulary has " +
                     std::to_string(ckpt.vocabulary.size()) +
                     " tokens but config.vocab_size is " +
                     std::to_string(ckpt.config.vocab_size));
  }

  if (!j.contains("tensors") || !j.at("tensors").is_object()) {
    throw CheckpointCorrupt("checkpoint: missing tensors");
  }
  const Json& tensors = j.at("tensors");
  ckpt.params = Parameters::Zeros(ckpt.config);
  std::set<std::string> seen;
  ckpt.params.ForEach(ckpt.config, [&](const std::string& name,
                                       Eigen::MatrixXd& t) {
    auto it = tensors.find(name);
    if (it == tensors.end()) {
      throw CheckpointCorrupt("checkpoint: missing tensor " + name);
    }
    std::vector<Eigen::Index> shape;
    std::vector<double> data;
    try {
      shape = it->at("shape").get<std::vector<Eigen::Index>>();
      data = it->at("data").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointCorrupt("checkpoint tensor " + name + ": " + e.what());
    }
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols()) {
      throw ShapeError("checkpoint tensor " + name + " has the wrong shape");
    }
    if (static_cast<Eigen::Index>(data.size()) != t.size()) {
      throw CheckpointCorrupt("checkpoint tensor " + name +
                              ": data length does not match shape");
    }
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        t(r, c) = data[static_cast<std::size_t>(r * t.cols() + c)];
      }
    }
    seen.insert(name);
  });
  for (const auto& [name, value] : tensors.items()) {
    if (!seen.contains(name)) {
      throw ShapeError("checkpoint has unexpected tensor " + name);
    }
  }
  if (!ckpt.params.AllFinite()) {
    throw CheckpointCorrupt("checkpoint contains non-finite parameters");
  }
  return ckpt;
}

void SaveCheckpoint(const ModelCheckpoint& checkpoint,
                    const std::filesystem::path& path) {
  WriteFileAtomic(path, CheckpointToJson(checkpoint).dump());
}

ModelCheckpoint ParseCheckpoint(std::string_view text) {
  Json j = Json::parse(text, nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) throw CheckpointCorrupt("checkpoint is not valid JSON");
  return CheckpointFromJson(j);
}

ModelCheckpoint LoadCheckpoint(const std::filesystem::path& path) {
  return ParseCheckpoint(ReadFile(path));
}

}  // namespace rnnlens
