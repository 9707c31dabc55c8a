#include "rnnlens/server.h"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "rnnlens/error.h"
#include "rnnlens/io_util.h"
#include "rnnlens/seqprofile.h"

namespace rnnlens {

namespace {

using Query = std::map<std::string, std::string>;

std::optional<std::string> Param(const Query& q, const std::string& name) {
  auto it = q.find(name);
  if (it == q.end() || it->second.empty()) return std::nullopt;
  return it->second;
}

long long ParseInteger(const std::string& text, const std::string& name) {
  long long value = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw InvalidArgument("parameter '" + name + "' must be an integer, got '" +
                          text + "'");
  }
  return value;
}

double ParseReal(const std::string& text, const std::string& name) {
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw InvalidArgument("parameter '" + name + "' must be a number, got '" +
                          text + "'");
  }
  return value;
}

std::vector<std::string> SplitPath(const std::string& path) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : path) {
    if (c == '/') {
      if (!cur.empty()) parts.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(std::move(cur));
  return parts;
}

ApiResponse ErrorResponse(int status, const std::string& message) {
  return {status, "application/json", Json{{"error", message}}.dump()};
}

Json PercentilesJson(const ResponseDistribution& dist,
                     const std::vector<int>* order) {
  Json out = Json::object();
  for (std::size_t k = 0; k < kPercentileLevels.size(); ++k) {
    Eigen::VectorXd v = dist.percentiles[k];
    if (order) {
      Eigen::VectorXd sorted(v.size());
      for (std::size_t i = 0; i < order->size(); ++i) sorted[i] = v[(*order)[i]];
      v = sorted;
    }
    out["p" + std::to_string(static_cast<int>(kPercentileLevels[k]))] =
        VectorToJson(v, true);
  }
  return out;
}

Eigen::VectorXd Permute(const Eigen::VectorXd& v, const std::vector<int>& order) {
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < order.size(); ++i) out[i] = v[order[i]];
  return out;
}

}  // namespace

ExplorerService::ExplorerService(ServiceOptions options)
    : options_(std::move(options)) {
  if (!options_.lexicon_path.empty()) {
    lexicon_ = PosLexicon::Load(options_.lexicon_path);
  }
  if (options_.min_count < 1) throw ConfigError("min_count must be >= 1");
}

void ExplorerService::LoadModelsDir() {
  if (options_.models_dir.empty()) return;
  if (!std::filesystem::is_directory(options_.models_dir)) {
    throw NotFound("model directory " + options_.models_dir.string() +
                   " does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry :
       std::filesystem::directory_iterator(options_.models_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) AddModelFile(file);
}

void ExplorerService::AddModelFile(const std::filesystem::path& path) {
  const std::string text = ReadFile(path);
  auto model = std::make_shared<Model>();
  model->id = path.stem().string();
  model->sha256 = Sha256Hex(text);
  model->checkpoint = ParseCheckpoint(text);
  if (models_.contains(model->id)) {
    throw InvalidArgument("duplicate model id '" + model->id + "'");
  }
  models_.emplace(model->id, std::move(model));
}

void ExplorerService::AddModel(const std::string& id,
                               ModelCheckpoint checkpoint,
                               std::optional<std::vector<TokenSequence>> seqs) {
  if (id.empty() || id.find('/') != std::string::npos) {
    throw InvalidArgument("invalid model id '" + id + "'");
  }
  if (models_.contains(id)) {
    throw InvalidArgument("duplicate model id '" + id + "'");
  }
  auto model = std::make_shared<Model>();
  model->id = id;
  model->sha256 = Sha256Hex(CheckpointToJson(checkpoint).dump());
  model->checkpoint = std::move(checkpoint);
  model->sequences = std::move(seqs);
  models_.emplace(id, std::move(model));
}

int ExplorerService::computations() const {
  std::lock_guard<std::mutex> lock(mu_);
  return computations_;
}

const ExplorerService::Model& ExplorerService::GetModel(
    const std::string& id) const {
  auto it = models_.find(id);
  if (it == models_.end()) throw NotFound("unknown model '" + id + "'");
  return *it->second;
}

ExplorerService::Selection ExplorerService::Select(
    const std::string& id, const std::optional<std::string>& layer,
    const std::optional<std::string>& state) const {
  return Select(GetModel(id), layer, state);
}

ExplorerService::Selection ExplorerService::Select(
    const Model& model, const std::optional<std::string>& layer,
    const std::optional<std::string>& state) const {
  const ModelConfig& cfg = model.checkpoint.config;
  Selection sel;
  sel.layer = cfg.layers - 1;
  if (layer) {
    const long long l = ParseInteger(*layer, "layer");
    if (l < 0 || l >= cfg.layers) {
      throw InvalidArgument("layer must be in [0, " +
                            std::to_string(cfg.layers - 1) + "]");
    }
    sel.layer = static_cast<int>(l);
  }
  sel.kind = DefaultStateKind(cfg.cell);
  if (state) {
    try {
      sel.kind = ParseStateKind(*state);
    } catch (const Error& e) {
      throw InvalidArgument(e.what());
    }
    if (sel.kind == StateKind::kCell && cfg.cell != CellType::kLstm) {
      throw InvalidArgument("only LSTMs have a cell state");
    }
  }
  return sel;
}

std::vector<TokenSequence> ExplorerService::EvaluationSequences(
    const Model& model) const {
  if (model.sequences) return *model.sequences;
  const Json& ds = model.checkpoint.metadata.dataset;
  if (!ds.is_object() || ds.empty()) {
    throw InvalidArgument("model '" + model.id +
                          "' records no dataset to evaluate on");
  }
  const Dataset dataset = LoadDataset(DatasetConfig::FromJson(ds));
  if (!(dataset.vocabulary == model.checkpoint.vocabulary)) {
    throw VocabularyMismatch("dataset of model '" + model.id +
                             "' no longer matches its vocabulary");
  }
  const auto& split = dataset.Split(options_.split);
  if (split.empty()) {
    throw InvalidArgument("split '" + options_.split + "' of model '" +
                          model.id + "' is empty");
  }
  return split;
}

std::filesystem::path ExplorerService::CachePath(
    const Model& model, const std::string& name) const {
  if (options_.cache_dir.empty()) return {};
  return options_.cache_dir / model.id / name;
}

std::string ExplorerService::ResponsesName(Selection sel) const {
  return "responses_" + options_.split + "_L" + std::to_string(sel.layer) +
         "_" + std::string(StateKindName(sel.kind)) + ".json";
}

std::string ExplorerService::CoclusterName(Selection sel, int k,
                                           std::uint64_t seed,
                                           Affinity affinity) {
  return "cocluster_L" + std::to_string(sel.layer) + "_" +
         std::string(StateKindName(sel.kind)) + "_k" + std::to_string(k) +
         "_s" + std::to_string(seed) + "_" + std::string(AffinityName(affinity)) +
         ".json";
}

std::filesystem::path ExplorerService::ResponsesCacheFile(
    const std::string& id, Selection sel) const {
  return CachePath(GetModel(id), ResponsesName(sel));
}

std::filesystem::path ExplorerService::CoclusterCacheFile(
    const std::string& id, Selection sel, int k, std::uint64_t seed,
    Affinity affinity) const {
  return CachePath(GetModel(id), CoclusterName(sel, k, seed, affinity));
}

const ModelCheckpoint& ExplorerService::Checkpoint(const std::string& id) const {
  return GetModel(id).checkpoint;
}

std::shared_ptr<const ResponseRecord> ExplorerService::Responses(
    const std::string& id, Selection sel) {
  return Record(GetModel(id), sel);
}

std::shared_ptr<const BipartiteGraph> ExplorerService::Bipartite(
    const std::string& id, Selection sel) {
  return Graph(GetModel(id), sel);
}

std::shared_ptr<const CoClustering> ExplorerService::Cocluster(
    const std::string& id, Selection sel, int k, std::uint64_t seed,
    Affinity affinity) {
  const Model& model = GetModel(id);
  auto graph = Graph(model, sel);
  const auto limit = std::min(graph->weights.rows(), graph->weights.cols());
  if (k < 1 || k > limit) {
    throw InvalidArgument("k must be in [1, " + std::to_string(limit) + "]");
  }
  return Clustering(model, sel, k, seed, affinity);
}

template <typename T>
std::shared_ptr<const T> ExplorerService::Memo(
    const std::string& key,
    const std::function<std::shared_ptr<const T>()>& compute) {
  std::promise<std::shared_ptr<const void>> promise;
  std::shared_future<std::shared_ptr<const void>> future;
  bool owner = false;
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = memo_.find(key);
    if (it != memo_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      memo_.emplace(key, future);
      owner = true;
    }
  }
  if (owner) {
    try {
      promise.set_value(compute());
    } catch (...) {
      promise.set_exception(std::current_exception());
      std::lock_guard<std::mutex> lock(mu_);
      memo_.erase(key);
    }
  }
  return std::static_pointer_cast<const T>(future.get());
}

namespace {

// Reads `path` if it holds a payload for `sha256`; nullopt otherwise.
std::optional<Json> ReadCache(const std::filesystem::path& path,
                              const std::string& sha256) {
  if (path.empty() || !std::filesystem::exists(path)) return std::nullopt;
  try {
    Json j = Json::parse(ReadFile(path));
    if (j.value("checkpoint_sha256", "") != sha256) return std::nullopt;
    return j;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

void WriteCache(const std::filesystem::path& path, Json payload) {
  if (path.empty()) return;
  std::filesystem::create_directories(path.parent_path());
  WriteFileAtomic(path, payload.dump());
}

}  // namespace

std::shared_ptr<const ResponseRecord> ExplorerService::Record(
    const Model& model, Selection sel) {
  const std::string name = ResponsesName(sel);
  return Memo<ResponseRecord>("record|" + model.id + "|" + name, [&] {
    const auto path = CachePath(model, name);
    if (auto cached = ReadCache(path, model.sha256)) {
      try {
        return std::make_shared<const ResponseRecord>(
            ResponseRecord::FromJson(cached->at("record")));
      } catch (const std::exception&) {
        // Unreadable payload: fall through and recompute.
      }
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++computations_;
    }
    auto record = std::make_shared<const ResponseRecord>(
        RecordResponses(model.checkpoint, EvaluationSequences(model),
                        sel.layer, sel.kind, options_.seed));
    WriteCache(path, Json{{"checkpoint_sha256", model.sha256},
                          {"split", options_.split},
                          {"record", record->ToJson()}});
    return record;
  });
}

std::shared_ptr<const BipartiteGraph> ExplorerService::Graph(
    const Model& model, Selection sel) {
  auto record = Record(model, sel);
  const std::string key = "graph|" + model.id + "|" +
                          std::to_string(sel.layer) + "|" +
                          std::string(StateKindName(sel.kind));
  return Memo<BipartiteGraph>(key, [&] {
    return std::make_shared<const BipartiteGraph>(
        BuildBipartite(*record, options_.min_count));
  });
}

std::shared_ptr<const CoClustering> ExplorerService::Clustering(
    const Model& model, Selection sel, int k, std::uint64_t seed,
    Affinity affinity) {
  auto graph = Graph(model, sel);
  const std::string name = CoclusterName(sel, k, seed, affinity);
  return Memo<CoClustering>("cluster|" + model.id + "|" + name, [&] {
    const auto path = CachePath(model, name);
    if (auto cached = ReadCache(path, model.sha256)) {
      try {
        auto c = std::make_shared<const CoClustering>(
            CoClustering::FromJson(cached->at("clustering")));
        if (c->word_assignment.size() == graph->words.size() &&
            c->unit_assignment.size() == graph->units.size()) {
          return c;
        }
      } catch (const std::exception&) {
      }
    }
    {
      std::lock_guard<std::mutex> lock(mu_);
      ++computations_;
    }
    auto c = std::make_shared<const CoClustering>(
        SpectralCocluster(*graph, k, seed, affinity));
    WriteCache(path, Json{{"checkpoint_sha256", model.sha256},
                          {"clustering", c->ToJson()}});
    return c;
  });
}

Json ExplorerService::ListModels() const {
  Json out = Json::array();
  for (const auto& [id, model] : models_) {
    const ModelCheckpoint& ck = model->checkpoint;
    out.push_back({{"id", id},
                   {"config", ck.config.ToJson()},
                   {"metrics", ck.metadata.final_metrics},
                   {"train_report", ck.metadata.train_report},
                   {"epochs", ck.metadata.epochs},
                   {"vocabulary_size", ck.vocabulary.size()},
                   {"checkpoint_sha256", model->sha256}});
  }
  return out;
}

Json ExplorerService::Layout(const std::string& id, const Query& q) {
  const Model& model = GetModel(id);
  const Selection sel = Select(model, Param(q, "layer"), Param(q, "state"));
  auto graph = Graph(model, sel);
  const auto limit = static_cast<int>(
      std::min<Eigen::Index>(graph->weights.rows(), graph->weights.cols()));
  int k = std::min(kDefaultClusterCount, limit);
  if (auto kp = Param(q, "k")) {
    const long long v = ParseInteger(*kp, "k");
    if (v < 1 || v > limit) {
      throw InvalidArgument("k must be in [1, " + std::to_string(limit) + "]");
    }
    k = static_cast<int>(v);
  }
  double ratio = kDefaultEdgeFilterRatio;
  if (auto fp = Param(q, "filter")) {
    ratio = ParseReal(*fp, "filter");
    if (!(ratio >= 0.0 && ratio <= 1.0)) {
      throw InvalidArgument("filter must be in [0, 1]");
    }
  }
  std::uint64_t seed = options_.seed;
  if (auto sp = Param(q, "seed")) {
    const long long v = ParseInteger(*sp, "seed");
    if (v < 0) throw InvalidArgument("seed must be >= 0");
    seed = static_cast<std::uint64_t>(v);
  }
  Affinity affinity = options_.affinity;
  if (auto ap = Param(q, "affinity")) affinity = ParseAffinity(*ap);
  auto clustering = Clustering(model, sel, k, seed, affinity);

  Json units = Json::array();
  for (int c = 0; c < k; ++c) {
    std::vector<int> members;
    for (std::size_t j = 0; j < clustering->unit_assignment.size(); ++j) {
      if (clustering->unit_assignment[j] == c) {
        members.push_back(graph->units[j]);
      }
    }
    units.push_back({{"cluster", c},
                     {"units", members},
                     {"size", members.size()}});
  }
  Json clouds = Json::array();
  for (int c = 0; c < k; ++c) {
    Json words = Json::array();
    const bool nonempty =
        std::find(clustering->word_assignment.begin(),
                  clustering->word_assignment.end(),
                  c) != clustering->word_assignment.end();
    if (nonempty) {
      const WordCloud cloud = MakeWordCloud(*graph, *clustering, c,
                                            model.checkpoint.vocabulary,
                                            lexicon_);
      for (const auto& e : cloud.words) {
        words.push_back({{"word", e.word},
                         {"text", e.text},
                         {"weight", RoundSignificant(e.weight)},
                         {"pos", PosTagName(e.pos)}});
      }
    }
    clouds.push_back({{"cluster", c}, {"words", std::move(words)}});
  }
  const MaskedEdges edges = FilterEdges(clustering->cluster_edges, ratio);
  Json edge_list = Json::array();
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      edge_list.push_back({{"i", i},
                           {"j", j},
                           {"weight", RoundSignificant(edges.weights(i, j))},
                           {"visible", static_cast<bool>(edges.visible(i, j))}});
    }
  }
  return Json{{"k", k},
              {"unit_clusters", std::move(units)},
              {"word_clouds", std::move(clouds)},
              {"cluster_edges", std::move(edge_list)},
              {"params",
               {{"layer", sel.layer},
                {"state_kind", StateKindName(sel.kind)},
                {"k", k},
                {"filter_ratio", ratio},
                {"seed", seed},
                {"affinity", AffinityName(affinity)}}}};
}

Json ExplorerService::WordDetail(const std::string& id, const std::string& word,
                                 const Query& q) {
  const Model& model = GetModel(id);
  const Selection sel = Select(model, Param(q, "layer"), Param(q, "state"));
  const auto wid = model.checkpoint.vocabulary.Find(word);
  if (!wid) throw NotFound("word '" + word + "' is not in the vocabulary");
  auto record = Record(model, sel);
  const ExpectedResponse er = ComputeExpectedResponse(*record, *wid);
  const ResponseDistribution dist = ComputeResponseDistribution(*record, *wid);
  return Json{{"word", word},
              {"id", *wid},
              {"count", er.count},
              {"expected_response", VectorToJson(er.mean, true)},
              {"percentiles", PercentilesJson(dist, nullptr)},
              {"sort_order", SortDimensions(er.mean)},
              {"params",
               {{"layer", sel.layer}, {"state_kind", StateKindName(sel.kind)}}}};
}

Json ExplorerService::UnitDetail(const std::string& id, const std::string& unit,
                                 const Query& q) {
  const Model& model = GetModel(id);
  const Selection sel = Select(model, Param(q, "layer"), Param(q, "state"));
  const long long j = ParseInteger(unit, "unit");
  const int n = model.checkpoint.config.hidden_size;
  if (j < 0 || j >= n) {
    throw InvalidArgument("unit must be in [0, " + std::to_string(n - 1) + "]");
  }
  int m = 10;
  if (auto mp = Param(q, "m")) {
    const long long v = ParseInteger(*mp, "m");
    if (v < 1) throw InvalidArgument("m must be >= 1");
    m = static_cast<int>(std::min<long long>(v, 1 << 20));
  }
  auto record = Record(model, sel);
  const auto top = TopWordsForUnit(*record, model.checkpoint.vocabulary,
                                   static_cast<int>(j), m, options_.min_count);
  Json words = Json::array();
  for (const UnitWord& w : top) {
    const ResponseDistribution dist = ComputeResponseDistribution(*record, w.word);
    Json box = Json::object();
    for (std::size_t k = 0; k < kPercentileLevels.size(); ++k) {
      box["p" + std::to_string(static_cast<int>(kPercentileLevels[k]))] =
          RoundSignificant(dist.percentiles[k][j]);
    }
    words.push_back({{"word", w.word},
                     {"text", model.checkpoint.vocabulary.Token(w.word)},
                     {"response", RoundSignificant(w.response)},
                     {"count", w.count},
                     {"box", std::move(box)}});
  }
  return Json{{"unit", j},
              {"words", std::move(words)},
              {"params",
               {{"layer", sel.layer},
                {"state_kind", StateKindName(sel.kind)},
                {"m", m}}}};
}

Json ExplorerService::Sequence(const std::string& id, const Json& body) {
  const Model& model = GetModel(id);
  if (!body.is_object()) throw InvalidArgument("request body must be an object");
  RequireKnownKeys(body, {"text", "layer", "state", "k", "seed", "affinity"},
                   "sequence");
  if (!body.contains("text") || !body["text"].is_string()) {
    throw InvalidArgument("'text' must be a string");
  }
  auto as_text = [&](const char* key) -> std::optional<std::string> {
    if (!body.contains(key) || body[key].is_null()) return std::nullopt;
    const Json& v = body[key];
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    throw InvalidArgument(std::string("'") + key + "' has the wrong type");
  };
  const Json& ds = model.checkpoint.metadata.dataset;
  const bool lowercase =
      ds.is_object() && ds.contains("lowercase") ? ds["lowercase"].get<bool>()
                                                 : true;
  const auto tokens = Tokenize(body["text"].get<std::string>(), lowercase);
  if (tokens.empty()) throw InvalidArgument("empty text");

  Query q;
  if (auto v = as_text("layer")) q["layer"] = *v;
  if (auto v = as_text("state")) q["state"] = *v;
  if (auto v = as_text("k")) q["k"] = *v;
  if (auto v = as_text("seed")) q["seed"] = *v;
  if (auto v = as_text("affinity")) q["affinity"] = *v;
  const Json layout = Layout(id, q);
  const Selection sel = Select(model, Param(q, "layer"), Param(q, "state"));
  const int k = layout["k"].get<int>();
  const std::uint64_t seed = layout["params"]["seed"].get<std::uint64_t>();
  const Affinity affinity =
      ParseAffinity(layout["params"]["affinity"].get<std::string>());
  auto clustering = Clustering(model, sel, k, seed, affinity);

  const TokenSequence ids = model.checkpoint.vocabulary.Encode(tokens);
  const SequenceProfile profile =
      ProfileSequence(model.checkpoint, clustering->unit_assignment, k, ids,
                      sel.layer, sel.kind);
  Json out = profile.ToJson(true);
  out["tokens"] = tokens;
  out["params"] = layout["params"];
  return out;
}

Json ExplorerService::Compare(const Query& q) {
  const auto models_param = Param(q, "models");
  const auto word = Param(q, "word");
  if (!models_param || !word) {
    throw InvalidArgument("compare needs 'models' and 'word'");
  }
  std::vector<std::string> ids;
  std::stringstream ss(*models_param);
  for (std::string part; std::getline(ss, part, ',');) ids.push_back(part);
  if (ids.size() != 2 || ids[0].empty() || ids[1].empty()) {
    throw InvalidArgument("'models' must name exactly two models");
  }
  struct Side {
    const Model* model;
    Selection sel;
    int wid;
    ExpectedResponse er;
    ResponseDistribution dist;
  };
  std::vector<Side> sides;
  for (const auto& id : ids) {
    const Model& model = GetModel(id);
    const Selection sel = Select(model, Param(q, "layer"), Param(q, "state"));
    const auto wid = model.checkpoint.vocabulary.Find(*word);
    if (!wid) {
      throw NotFound("word '" + *word + "' is not in the vocabulary of '" +
                     id + "'");
    }
    auto record = Record(model, sel);
    sides.push_back({&model, sel, *wid, ComputeExpectedResponse(*record, *wid),
                     ComputeResponseDistribution(*record, *wid)});
  }
  const std::vector<int> reference = SortDimensions(sides[0].er.mean);
  const bool shared = sides[0].er.mean.size() == sides[1].er.mean.size();
  Json out_models = Json::array();
  for (const Side& s : sides) {
    const std::vector<int> order =
        (shared || &s == &sides[0]) ? reference : SortDimensions(s.er.mean);
    out_models.push_back(
        {{"id", s.model->id},
         {"word_id", s.wid},
         {"count", s.er.count},
         {"order", order},
         {"expected_response", VectorToJson(Permute(s.er.mean, order), true)},
         {"percentiles", PercentilesJson(s.dist, &order)},
         {"params",
          {{"layer", s.sel.layer},
           {"state_kind", StateKindName(s.sel.kind)}}}});
  }
  return Json{{"word", *word},
              {"shared_order", shared},
              {"models", std::move(out_models)}};
}

ApiResponse ExplorerService::Handle(const ApiRequest& request) {
  const auto parts = SplitPath(request.path);
  auto ok = [](const Json& j) {
    return ApiResponse{200, "application/json", j.dump()};
  };
  try {
    if (parts.size() < 2 || parts[0] != "api") {
      return ErrorResponse(404, "no route for " + request.path);
    }
    const bool get = request.method == "GET";
    const bool post = request.method == "POST";
    if (parts[1] == "compare" && parts.size() == 2) {
      if (!get) return ErrorResponse(405, "method not allowed");
      return ok(Compare(request.query));
    }
    if (parts[1] == "models") {
      if (parts.size() == 2) {
        if (!get) return ErrorResponse(405, "method not allowed");
        return ok(ListModels());
      }
      const std::string& id = parts[2];
      if (parts.size() == 4 && parts[3] == "cocluster") {
        if (!get) return ErrorResponse(405, "method not allowed");
        return ok(Layout(id, request.query));
      }
      if (parts.size() == 5 && parts[3] == "word") {
        if (!get) return ErrorResponse(405, "method not allowed");
        return ok(WordDetail(id, parts[4], request.query));
      }
      if (parts.size() == 5 && parts[3] == "unit") {
        if (!get) return ErrorResponse(405, "method not allowed");
        return ok(UnitDetail(id, parts[4], request.query));
      }
      if (parts.size() == 4 && parts[3] == "sequence") {
        if (!post) return ErrorResponse(405, "method not allowed");
        Json body;
        try {
          body = Json::parse(request.body);
        } catch (const Json::parse_error& e) {
          return ErrorResponse(400, std::string("invalid JSON body: ") + e.what());
        }
        return ok(Sequence(id, body));
      }
    }
    return ErrorResponse(404, "no route for " + request.path);
  } catch (const NotFound& e) {
    return ErrorResponse(404, e.what());
  } catch (const NoObservations& e) {
    return ErrorResponse(404, e.what());
  } catch (const InvalidArgument& e) {
    return ErrorResponse(400, e.what());
  } catch (const ConfigError& e) {
    return ErrorResponse(400, e.what());
  } catch (const ParseError& e) {
    return ErrorResponse(400, e.what());
  } catch (const VocabularyMismatch& e) {
    return ErrorResponse(400, e.what());
  } catch (const std::exception& e) {
    return ErrorResponse(500, e.what());
  }
}

}  // namespace rnnlens
