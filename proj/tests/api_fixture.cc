#include "api_fixture.h"

#include "rnnlens/fixtures.h"
#include "rnnlens/trainer.h"

namespace rnnlens::testing {

namespace fs = std::filesystem;

namespace {

ModelCheckpoint FixtureModel(CellType cell, int layers, std::uint64_t seed,
                             const Vocabulary& vocabulary) {
  ModelCheckpoint ck;
  ck.config.cell = cell;
  ck.config.layers = layers;
  ck.config.hidden_size = 8;
  ck.config.embedding_size = 6;
  ck.config.vocab_size = ck.config.num_classes = vocabulary.size();
  ck.config.seed = seed;
  ck.vocabulary = vocabulary;
  ck.params = Parameters::Random(ck.config, seed, 0.8);
  return ck;
}

}  // namespace

const ApiFixture& GetApiFixture() {
  static const ApiFixture fixture = [] {
    ApiFixture f;
    const auto lines = ParsePlainCorpus(GenerateToyCorpus(3000, 1), true, false);
    std::vector<std::vector<std::string>> tokens;
    for (const auto& l : lines) tokens.push_back(l.tokens);
    f.vocabulary = Vocabulary::Build(tokens, 40);
    for (std::size_t i = 0; i < 150 && i < tokens.size(); ++i) {
      f.sequences.push_back(f.vocabulary.Encode(tokens[i]));
    }
    f.lstm = FixtureModel(CellType::kLstm, 2, 3, f.vocabulary);
    TrainReport report;
    report.metric = "perplexity";
    report.epochs.push_back({});
    report.final_valid = 31.5;
    report.final_test = 32.25;
    f.lstm.metadata.epochs = 1;
    f.lstm.metadata.seed = 3;
    f.lstm.metadata.final_metrics = {{"valid_perplexity", 31.5},
                                     {"test_perplexity", 32.25}};
    f.lstm.metadata.train_report = report.ToJson();
    f.gru = FixtureModel(CellType::kGru, 1, 4, f.vocabulary);
    return f;
  }();
  return fixture;
}

std::unique_ptr<ExplorerService> MakeService(const fs::path& cache) {
  ServiceOptions opts;
  opts.cache_dir = cache;
  opts.lexicon_path = fs::path(RNNLENS_SOURCE_DIR) / "data" / "pos_lexicon.tsv";
  auto s = std::make_unique<ExplorerService>(opts);
  const ApiFixture& f = GetApiFixture();
  s->AddModel("lstm", f.lstm, f.sequences);
  s->AddModel("gru", f.gru, f.sequences);
  return s;
}

ApiRequest Get(const std::string& path, std::map<std::string, std::string> q) {
  ApiRequest r;
  r.path = path;
  r.query = std::move(q);
  return r;
}

ApiRequest Post(const std::string& path, const std::string& body) {
  ApiRequest r;
  r.method = "POST";
  r.path = path;
  r.body = body;
  return r;
}

std::vector<GoldenCase> GoldenCases() {
  return {
      {"models", Get("/api/models")},
      {"layout_default", Get("/api/models/lstm/cocluster")},
      {"layout_k3_hidden_layer0",
       Get("/api/models/lstm/cocluster",
           {{"k", "3"}, {"state", "hidden"}, {"layer", "0"}, {"filter", "0.5"}, {"seed", "2"}})},
      {"layout_signed", Get("/api/models/gru/cocluster", {{"k", "2"}, {"affinity", "signed"}})},
      {"word_detail", Get("/api/models/lstm/word/shares")},
      {"unit_detail", Get("/api/models/gru/unit/3", {{"m", "5"}})},
      {"sequence_lm",
       Post("/api/models/lstm/sequence",
            R"({"text": "The company said it planned to offer shares .", "k": 4})")},
      {"compare", Get("/api/compare", {{"models", "lstm,gru"}, {"word", "the"}})},
      {"error_unknown_model", Get("/api/models/nope/cocluster")},
      {"error_bad_k", Get("/api/models/lstm/cocluster", {{"k", "0"}})},
      {"error_unknown_word", Get("/api/models/lstm/word/zzzz")},
      {"error_unit_range", Get("/api/models/lstm/unit/8")},
      {"error_empty_text", Post("/api/models/lstm/sequence", R"({"text": "  "})")},
      {"error_method", Post("/api/models", "{}")},
      {"error_compare_missing_word",
       Get("/api/compare", {{"models", "lstm,gru"}, {"word", "zzzz"}})},
  };
}

std::string Serialize(const ApiResponse& r) {
  return std::to_string(r.status) + "\n" + r.body + "\n";
}

fs::path GoldenPath(const std::string& name) {
  return fs::path(RNNLENS_GOLDEN_DIR) / (name + ".txt");
}

}  // namespace rnnlens::testing
