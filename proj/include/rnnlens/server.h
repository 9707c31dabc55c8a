#ifndef RNNLENS_SERVER_H_
#define RNNLENS_SERVER_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "rnnlens/cocluster.h"
#include "rnnlens/corpus.h"
#include "rnnlens/evaluator.h"
#include "rnnlens/models.h"

namespace rnnlens {

struct ServiceOptions {
  std::filesystem::path models_dir;
  std::filesystem::path cache_dir;
  // Optional `word<TAB>TAG` file for word-cloud colouring.
  std::filesystem::path lexicon_path;
  // Split that feeds the response estimator.
  std::string split = "test";
  int min_count = kDefaultMinCount;
  std::uint64_t seed = 0;
  // Default when a request does not name one.
  Affinity affinity = Affinity::kMagnitude;
};

struct ApiRequest {
  std::string method = "GET";
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

// Request handling for the explorer API, independent of any transport.
// Models are immutable once registered; derived artifacts are computed
// lazily, cached on disk keyed by the checkpoint hash, and computed at most
// once per key even under concurrent requests.
class ExplorerService {
 public:
  explicit ExplorerService(ServiceOptions options);

  // Registers every *.json checkpoint in options.models_dir (id = file stem).
  void LoadModelsDir();

  // Registers a checkpoint under `id`. `sequences`, when given, replace the
  // dataset split recorded in the checkpoint metadata.
  void AddModel(const std::string& id, ModelCheckpoint checkpoint,
                std::optional<std::vector<TokenSequence>> sequences = {});

  ApiResponse Handle(const ApiRequest& request);

  // Endpoint bodies. Throw NotFound / InvalidArgument on bad input.
  Json ListModels() const;
  Json Layout(const std::string& id, const std::map<std::string, std::string>& q);
  Json WordDetail(const std::string& id, const std::string& word,
                  const std::map<std::string, std::string>& q);
  Json UnitDetail(const std::string& id, const std::string& unit,
                  const std::map<std::string, std::string>& q);
  Json Sequence(const std::string& id, const Json& body);
  Json Compare(const std::map<std::string, std::string>& q);

  // Number of record / clustering computations actually run (not served
  // from memory or disk).
  int computations() const;

  // Registers one checkpoint file (id = file stem).
  void AddModelFile(const std::filesystem::path& path);

  struct Selection {
    int layer = 0;
    StateKind kind = StateKind::kHidden;
  };
  // Defaults: top layer, the cell's default state kind.
  Selection Select(const std::string& id,
                   const std::optional<std::string>& layer,
                   const std::optional<std::string>& state) const;

  const ModelCheckpoint& Checkpoint(const std::string& id) const;
  std::shared_ptr<const ResponseRecord> Responses(const std::string& id,
                                                  Selection sel);
  std::shared_ptr<const BipartiteGraph> Bipartite(const std::string& id,
                                                  Selection sel);
  std::shared_ptr<const CoClustering> Cocluster(
      const std::string& id, Selection sel, int k, std::uint64_t seed,
      Affinity affinity = Affinity::kMagnitude);
  // Empty when no cache directory is configured.
  std::filesystem::path ResponsesCacheFile(const std::string& id,
                                           Selection sel) const;
  std::filesystem::path CoclusterCacheFile(
      const std::string& id, Selection sel, int k, std::uint64_t seed,
      Affinity affinity = Affinity::kMagnitude) const;

  const ServiceOptions& options() const { return options_; }

 private:
  struct Model {
    std::string id;
    std::string sha256;
    ModelCheckpoint checkpoint;
    std::optional<std::vector<TokenSequence>> sequences;
  };
  const Model& GetModel(const std::string& id) const;
  Selection Select(const Model& model, const std::optional<std::string>& layer,
                   const std::optional<std::string>& state) const;
  std::vector<TokenSequence> EvaluationSequences(const Model& model) const;

  std::shared_ptr<const ResponseRecord> Record(const Model& model,
                                               Selection sel);
  std::shared_ptr<const CoClustering> Clustering(const Model& model,
                                                 Selection sel, int k,
                                                 std::uint64_t seed,
                                                 Affinity affinity);
  std::shared_ptr<const BipartiteGraph> Graph(const Model& model,
                                              Selection sel);

  std::filesystem::path CachePath(const Model& model,
                                  const std::string& name) const;
  std::string ResponsesName(Selection sel) const;
  static std::string CoclusterName(Selection sel, int k, std::uint64_t seed,
                                   Affinity affinity);

  // Single-flight memoisation: the first caller computes, later callers for
  // the same key wait for its result.
  template <typename T>
  std::shared_ptr<const T> Memo(
      const std::string& key,
      const std::function<std::shared_ptr<const T>()>& compute);

  ServiceOptions options_;
  PosLexicon lexicon_;
  std::map<std::string, std::shared_ptr<Model>> models_;

  mutable std::mutex mu_;
  std::map<std::string, std::shared_future<std::shared_ptr<const void>>>
      memo_;
  int computations_ = 0;
};

struct ServeOptions {
  std::string host = "127.0.0.1";
  int port = 8080;
  // Static assets served under "/" when the directory exists.
  std::filesystem::path ui_dir;
};

// Blocks serving `service` over HTTP until the process is stopped.
void Serve(ExplorerService& service, const ServeOptions& options);

}  // namespace rnnlens

#endif  // RNNLENS_SERVER_H_
