// rnnlens command-line tool: train, evaluate, cocluster, serve, fixtures.

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rnnlens/cocluster.h"
#include "rnnlens/error.h"
#include "rnnlens/fixtures.h"
#include "rnnlens/io_util.h"
#include "rnnlens/pipeline.h"
#include "rnnlens/server.h"
#include "rnnlens/trainer.h"

namespace fs = std::filesystem;

namespace {

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

std::optional<std::string> OptionalText(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return s;
}

int CmdTrain(const fs::path& config_path, bool quiet) {
  const rnnlens::RunConfig config = rnnlens::LoadRunConfig(config_path);
  std::cerr << "training " << rnnlens::CellTypeName(config.model.cell)
            << " on " << config.dataset.name << "\n";
  auto on_epoch = [quiet](const rnnlens::EpochStats& s) {
    if (quiet) return;
    std::cerr << "epoch " << s.epoch << " lr " << s.learning_rate
              << " train_loss " << s.train_loss << " valid " << s.valid_metric
              << "\n";
  };
  rnnlens::RunResult result = rnnlens::RunTraining(config, on_epoch);
  if (!config.output.parent_path().empty()) {
    fs::create_directories(config.output.parent_path());
  }
  rnnlens::SaveCheckpoint(result.checkpoint, config.output);
  std::cerr << "wrote " << config.output.string() << "\n";
  std::cout << result.report.ToJson().dump(2) << "\n";
  return 0;
}

rnnlens::ServiceOptions BaseOptions(const fs::path& cache,
                                    const std::string& split,
                                    const fs::path& lexicon,
                                    std::uint64_t seed) {
  rnnlens::ServiceOptions opts;
  opts.cache_dir = cache;
  opts.split = split;
  opts.lexicon_path = lexicon;
  opts.seed = seed;
  return opts;
}

int CmdEvaluate(const fs::path& model_path, const std::string& split,
                const std::string& layer, const std::string& state,
                const fs::path& cache, std::uint64_t seed) {
  rnnlens::ExplorerService service(BaseOptions(cache, split, {}, seed));
  service.AddModelFile(model_path);
  const std::string id = model_path.stem().string();
  const auto& ck = service.Checkpoint(id);
  const auto sel = service.Select(id, OptionalText(layer), OptionalText(state));

  const rnnlens::Dataset dataset = rnnlens::LoadDataset(
      rnnlens::DatasetConfig::FromJson(ck.metadata.dataset));
  const auto& seqs = dataset.Split(split);
  if (seqs.empty()) throw rnnlens::InvalidArgument("split '" + split + "' is empty");
  const bool lm = ck.config.scheme == rnnlens::Scheme::kLanguageModel;
  const double value =
      lm ? rnnlens::Perplexity(ck.params, ck.config, seqs)
         : rnnlens::Accuracy(ck.params, ck.config, seqs, dataset.Labels(split));

  auto record = service.Responses(id, sel);
  rnnlens::Json out{{"model", id},
                    {"split", split},
                    {"metric", lm ? "perplexity" : "accuracy"},
                    {"value", value},
                    {"layer", sel.layer},
                    {"state_kind", rnnlens::StateKindName(sel.kind)},
                    {"words_observed", record->WordCount()},
                    {"cache", service.ResponsesCacheFile(id, sel).string()}};
  std::cout << out.dump(2) << "\n";
  return 0;
}

int CmdCocluster(const fs::path& model_path, const std::string& split,
                 const std::string& layer, const std::string& state, int k,
                 std::uint64_t seed, const std::string& affinity_name,
                 const fs::path& cache, const fs::path& lexicon_path) {
  const rnnlens::Affinity affinity = rnnlens::ParseAffinity(affinity_name);
  rnnlens::ExplorerService service(
      BaseOptions(cache, split, lexicon_path, seed));
  service.AddModelFile(model_path);
  const std::string id = model_path.stem().string();
  const auto sel = service.Select(id, OptionalText(layer), OptionalText(state));
  auto graph = service.Bipartite(id, sel);
  auto clustering = service.Cocluster(id, sel, k, seed, affinity);
  rnnlens::PosLexicon lexicon;
  if (!lexicon_path.empty()) lexicon = rnnlens::PosLexicon::Load(lexicon_path);

  std::cout << "model " << id << " layer " << sel.layer << " state "
            << rnnlens::StateKindName(sel.kind) << " k " << k << " words "
            << graph->words.size() << " units " << graph->units.size()
            << " affinity " << affinity_name << "\n";
  for (int c = 0; c < k; ++c) {
    int words = 0, units = 0;
    for (int a : clustering->word_assignment) words += a == c;
    for (int a : clustering->unit_assignment) units += a == c;
    std::cout << "cluster " << c << ": " << words << " words, " << units
              << " units";
    if (words > 0) {
      const auto cloud = rnnlens::MakeWordCloud(*graph, *clustering, c,
                                                service.Checkpoint(id).vocabulary,
                                                lexicon);
      std::cout << "; top:";
      for (std::size_t i = 0; i < cloud.words.size() && i < 5; ++i) {
        std::cout << ' ' << cloud.words[i].text;
      }
    }
    std::cout << "\n";
  }
  const auto path = service.CoclusterCacheFile(id, sel, k, seed, affinity);
  if (!path.empty()) std::cerr << "cache " << path.string() << "\n";
  return 0;
}

int CmdServe(const fs::path& models, const std::string& host, int port,
             const fs::path& cache, const fs::path& ui, const fs::path& lexicon,
             const std::string& split, std::uint64_t seed,
             const std::string& affinity) {
  rnnlens::ServiceOptions opts = BaseOptions(cache, split, lexicon, seed);
  opts.models_dir = models;
  opts.affinity = rnnlens::ParseAffinity(affinity);
  rnnlens::ExplorerService service(opts);
  service.LoadModelsDir();
  std::cerr << "loaded " << service.ListModels().size() << " model(s) from "
            << models.string() << "\n";
  rnnlens::ServeOptions serve;
  serve.host = host;
  serve.port = port;
  serve.ui_dir = ui;
  rnnlens::Serve(service, serve);
  return 0;
}

int CmdFixtures(const fs::path& out, std::uint64_t seed, int tokens,
                int sentiment_count) {
  fs::create_directories(out);
  auto write = [&](const std::string& name, const std::string& text) {
    rnnlens::WriteFileAtomic(out / name, text);
    std::cout << (out / name).string() << "\n";
  };
  write("toy_corpus.txt", rnnlens::GenerateToyCorpus(tokens, seed));
  write("pos_lexicon.tsv", rnnlens::ToyPosLexicon());
  for (auto [name, ratio] : {std::pair{"sentiment_unbalanced.tsv", 3.0},
                             std::pair{"sentiment_balanced.tsv", 1.0}}) {
    auto spec = rnnlens::DefaultSentimentSpec(ratio, seed);
    spec.count = sentiment_count;
    write(name, rnnlens::FormatLabeledCorpus(rnnlens::GenerateSentiment(spec)));
  }
  const auto planted = rnnlens::GeneratePlantedBipartite(30, 18, 3, 0.05, seed);
  rnnlens::Json weights = rnnlens::Json::array();
  for (Eigen::Index i = 0; i < planted.weights.rows(); ++i) {
    rnnlens::Json row = rnnlens::Json::array();
    for (Eigen::Index j = 0; j < planted.weights.cols(); ++j) {
      row.push_back(planted.weights(i, j));
    }
    weights.push_back(std::move(row));
  }
  write("planted_bipartite.json",
        rnnlens::Json{{"weights", weights},
                      {"row_labels", planted.row_labels},
                      {"col_labels", planted.col_labels}}
            .dump());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rnnlens: train recurrent models and inspect their hidden memory"};
  app.require_subcommand(1);

  fs::path config_path;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a model from a JSON run config");
  train->add_option("--config", config_path, "Run config (model, train, dataset, output)")
      ->required()
      ->check(CLI::ExistingFile);
  train->add_flag("--quiet", quiet, "Do not log per-epoch statistics");

  fs::path model_path, cache_dir = "cache", lexicon_path;
  std::string split = "test", layer, state;
  std::uint64_t seed = 0;
  auto add_model_opts = [&](CLI::App* cmd) {
    cmd->add_option("--model", model_path, "Checkpoint file")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--split", split, "Dataset split feeding the estimator")
        ->check(CLI::IsMember({"train", "valid", "test"}))
        ->capture_default_str();
    cmd->add_option("--layer", layer, "Layer index (default: top layer)");
    cmd->add_option("--state", state,
                    "State kind: h|hidden or c|cell (default: cell for lstm)");
    cmd->add_option("--cache", cache_dir, "Cache directory")->capture_default_str();
    cmd->add_option("--seed", seed, "Seed for sampling and clustering")
        ->capture_default_str();
  };
  auto* evaluate = app.add_subcommand(
      "evaluate", "Score a split and cache per-word state responses");
  add_model_opts(evaluate);

  int k = rnnlens::kDefaultClusterCount;
  std::string affinity = "magnitude";
  const auto affinity_check = CLI::IsMember({"magnitude", "signed"});
  auto* cocluster = app.add_subcommand(
      "cocluster", "Co-cluster words and hidden units and print a summary");
  add_model_opts(cocluster);
  cocluster->add_option("--k", k, "Number of co-clusters")->capture_default_str();
  cocluster->add_option("--lexicon", lexicon_path, "word<TAB>TAG lexicon")
      ->check(CLI::ExistingFile);
  cocluster->add_option("--affinity", affinity,
                        "magnitude (|response|) or signed")
      ->check(affinity_check)
      ->capture_default_str();

  fs::path models_dir, ui_dir;
  std::string host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the explorer JSON API");
  serve->add_option("--models", models_dir, "Directory of checkpoint files")
      ->required()
      ->check(CLI::ExistingDirectory);
  serve->add_option("--port", port, "Listen port")->capture_default_str();
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--cache", cache_dir, "Cache directory")->capture_default_str();
  serve->add_option("--ui", ui_dir, "Static UI asset directory")
      ->check(CLI::ExistingDirectory);
  serve->add_option("--lexicon", lexicon_path, "word<TAB>TAG lexicon")
      ->check(CLI::ExistingFile);
  serve->add_option("--split", split, "Dataset split feeding the estimator")
      ->check(CLI::IsMember({"train", "valid", "test"}))
      ->capture_default_str();
  serve->add_option("--seed", seed, "Default clustering seed")->capture_default_str();
  serve->add_option("--affinity", affinity,
                    "Default co-clustering affinity: magnitude or signed")
      ->check(affinity_check)
      ->capture_default_str();

  fs::path out_dir;
  int tokens = 50000, sentiment_count = 4000;
  auto* fixtures = app.add_subcommand(
      "fixtures", "Write the bundled synthetic corpora and planted matrices");
  fixtures->add_option("--out", out_dir, "Output directory")->required();
  fixtures->add_option("--seed", seed, "Generator seed")->capture_default_str();
  fixtures->add_option("--tokens", tokens, "Minimum toy corpus size")
      ->capture_default_str();
  fixtures->add_option("--sentiment-count", sentiment_count,
                       "Sequences per sentiment set")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kUsageError;
  }

  try {
    if (*train) return CmdTrain(config_path, quiet);
    if (*evaluate) {
      return CmdEvaluate(model_path, split, layer, state, cache_dir, seed);
    }
    if (*cocluster) {
      return CmdCocluster(model_path, split, layer, state, k, seed, affinity,
                          cache_dir, lexicon_path);
    }
    if (*serve) {
      return CmdServe(models_dir, host, port, cache_dir, ui_dir, lexicon_path,
                      split, seed, affinity);
    }
    if (*fixtures) return CmdFixtures(out_dir, seed, tokens, sentiment_count);
  } catch (const rnnlens::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
