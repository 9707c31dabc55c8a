#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "rnnlens/cocluster.h"
#include "rnnlens/error.h"
#include "rnnlens/evaluator.h"
#include "rnnlens/fixtures.h"
#include "rnnlens/models.h"
#include "rnnlens/pipeline.h"
#include "rnnlens/seqprofile.h"
#include "rnnlens/server.h"
#include "rnnlens/trainer.h"

namespace py = pybind11;
using namespace rnnlens;

namespace {

ModelCheckpoint ParseCheckpointJson(const std::string& text) {
  return ParseCheckpoint(text);
}

std::string TrainFromJson(const std::string& config_json,
                          const std::string& base_dir) {
  const RunConfig config = RunConfig::FromJson(Json::parse(config_json), base_dir);
  RunResult result = RunTraining(config);
  if (!config.output.empty()) {
    if (!config.output.parent_path().empty()) {
      std::filesystem::create_directories(config.output.parent_path());
    }
    SaveCheckpoint(result.checkpoint, config.output);
  }
  return result.report.ToJson().dump();
}

py::dict ClusteringDict(const CoClustering& c) {
  py::dict d;
  d["k"] = c.k;
  d["word_assignment"] = c.word_assignment;
  d["unit_assignment"] = c.unit_assignment;
  d["cluster_edges"] = c.cluster_edges;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Hidden-memory interpretation of recurrent language models";

  const auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<NotFound>(m, "NotFoundError", base);
  py::register_exception<NoObservations>(m, "NoObservationsError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<InvalidArgument>(m, "InvalidArgumentError", base);

  m.def("tokenize", &Tokenize, py::arg("text"), py::arg("lowercase") = true);

  py::class_<Vocabulary>(m, "Vocabulary")
      .def_static("build", &Vocabulary::Build, py::arg("sequences"),
                  py::arg("size_limit"))
      .def("__len__", &Vocabulary::size)
      .def("id", &Vocabulary::Id)
      .def("token", &Vocabulary::Token)
      .def("count", &Vocabulary::Count)
      .def("encode", &Vocabulary::Encode)
      .def_property_readonly("unk_id", &Vocabulary::unk_id)
      .def_property_readonly("tokens", &Vocabulary::tokens);

  py::class_<ModelCheckpoint>(m, "Model")
      .def_static("load", &LoadCheckpoint, py::arg("path"))
      .def_static("from_json", &ParseCheckpointJson, py::arg("text"))
      .def("save", [](const ModelCheckpoint& ck,
                      const std::filesystem::path& p) { SaveCheckpoint(ck, p); })
      .def("to_json",
           [](const ModelCheckpoint& ck) { return CheckpointToJson(ck).dump(); })
      .def_property_readonly(
          "config_json", [](const ModelCheckpoint& ck) { return ck.config.ToJson().dump(); })
      .def_readonly("vocabulary", &ModelCheckpoint::vocabulary)
      .def(
          "states",
          [](const ModelCheckpoint& ck, const TokenSequence& ids, int layer,
             const std::string& kind) {
            const SequenceOutput out = ck.Forward(ids, true);
            const StateKind sk = ParseStateKind(kind);
            Eigen::MatrixXd states(static_cast<Eigen::Index>(ids.size()),
                                   ck.config.hidden_size);
            for (std::size_t t = 0; t < ids.size(); ++t) {
              states.row(static_cast<Eigen::Index>(t)) =
                  SelectState(out.steps[t][layer], ck.config.cell, sk)
                      .col(0)
                      .transpose();
            }
            return states;
          },
          py::arg("ids"), py::arg("layer") = 0, py::arg("kind") = "hidden",
          "Per-step states as a (T x n) array.")
      .def(
          "probabilities",
          [](const ModelCheckpoint& ck, const TokenSequence& ids) {
            return ck.Forward(ids, false).probabilities;
          },
          py::arg("ids"));

  m.def("train", &TrainFromJson, py::arg("config_json"),
        py::arg("base_dir") = "",
        "Trains from a run config JSON string and returns the report as JSON.");

  py::class_<ResponseRecord>(m, "ResponseRecord")
      .def("count", &ResponseRecord::Count)
      .def("sum", &ResponseRecord::Sum)
      .def("samples", &ResponseRecord::Samples)
      .def("words", &ResponseRecord::Words)
      .def_property_readonly("dim", &ResponseRecord::dim)
      .def("expected_response",
           [](const ResponseRecord& r, int w) {
             return ComputeExpectedResponse(r, w).mean;
           })
      .def("percentiles", [](const ResponseRecord& r, int w) {
        const auto d = ComputeResponseDistribution(r, w);
        return std::vector<Eigen::VectorXd>(d.percentiles.begin(),
                                            d.percentiles.end());
      });

  m.def(
      "record_responses",
      [](const ModelCheckpoint& ck, const std::vector<TokenSequence>& seqs,
         int layer, const std::string& kind, std::uint64_t seed) {
        return RecordResponses(ck, seqs, layer, ParseStateKind(kind), seed);
      },
      py::arg("model"), py::arg("sequences"), py::arg("layer") = 0,
      py::arg("kind") = "hidden", py::arg("seed") = 0);

  m.def("sort_dimensions", &SortDimensions, py::arg("response"));
  m.def(
      "decompose_prediction",
      [](const ModelCheckpoint& ck, const TokenSequence& ids, int cls) {
        const auto d = DecomposePrediction(ck, ids, cls);
        py::dict out;
        out["log_factors"] = d.log_factors;
        out["factors"] = d.factors;
        out["final_logit_term"] = d.final_logit_term;
        return out;
      },
      py::arg("model"), py::arg("ids"), py::arg("cls"));

  m.def(
      "kmeans",
      [](const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
        const auto r = KMeans(points, k, seed);
        py::dict out;
        out["assignment"] = r.assignment;
        out["centroids"] = r.centroids;
        out["objective"] = r.objective;
        out["objective_history"] = r.objective_history;
        return out;
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0);

  m.def(
      "spectral_cocluster",
      [](const Eigen::MatrixXd& weights, int k, std::uint64_t seed,
         const std::string& affinity) {
        BipartiteGraph g;
        g.weights = weights;
        for (Eigen::Index i = 0; i < weights.rows(); ++i) {
          g.words.push_back(static_cast<int>(i));
        }
        for (Eigen::Index j = 0; j < weights.cols(); ++j) {
          g.units.push_back(static_cast<int>(j));
        }
        return ClusteringDict(
            SpectralCocluster(g, k, seed, ParseAffinity(affinity)));
      },
      py::arg("weights"), py::arg("k"), py::arg("seed") = 0,
      py::arg("affinity") = "magnitude");

  m.def(
      "aggregate_info",
      [](const Eigen::VectorXd& state, const std::vector<int>& assignment,
         int k) {
        const auto a = ComputeAggregateInfo(state, assignment, k);
        return py::make_tuple(a.positive, a.negative);
      },
      py::arg("state"), py::arg("assignment"), py::arg("k"));
  m.def(
      "preserved_info",
      [](const Eigen::VectorXd& prev, const Eigen::VectorXd& cur,
         const std::vector<int>& assignment, int k,
         std::optional<Eigen::VectorXd> gates) {
        return ComputePreservedInfo(prev, cur, assignment, k,
                                    gates ? &*gates : nullptr);
      },
      py::arg("previous"), py::arg("current"), py::arg("assignment"),
      py::arg("k"), py::arg("gates") = py::none());
  m.def(
      "profile_sequence",
      [](const ModelCheckpoint& ck, const std::vector<int>& assignment, int k,
         const TokenSequence& ids, int layer, const std::string& kind) {
        return ProfileSequence(ck, assignment, k, ids, layer,
                               ParseStateKind(kind))
            .ToJson(false)
            .dump();
      },
      py::arg("model"), py::arg("assignment"), py::arg("k"), py::arg("ids"),
      py::arg("layer") = 0, py::arg("kind") = "hidden");

  m.def("generate_toy_corpus", &GenerateToyCorpus, py::arg("min_tokens"),
        py::arg("seed") = 0);
  m.def("toy_pos_lexicon", &ToyPosLexicon);
  m.def(
      "generate_sentiment",
      [](double ratio, int count, std::uint64_t seed) {
        auto spec = DefaultSentimentSpec(ratio, seed);
        spec.count = count;
        std::vector<std::pair<std::vector<std::string>, int>> out;
        for (auto& ex : GenerateSentiment(spec)) {
          out.emplace_back(std::move(ex.tokens), ex.label);
        }
        return out;
      },
      py::arg("class_ratio"), py::arg("count"), py::arg("seed") = 0);
  m.def(
      "planted_bipartite",
      [](int rows, int cols, int blocks, double noise, std::uint64_t seed) {
        auto p = GeneratePlantedBipartite(rows, cols, blocks, noise, seed);
        return py::make_tuple(p.weights, p.row_labels, p.col_labels);
      },
      py::arg("rows"), py::arg("cols"), py::arg("blocks"),
      py::arg("noise") = 0.0, py::arg("seed") = 0);

  py::class_<ExplorerService>(m, "ExplorerService")
      .def(py::init([](const std::filesystem::path& models_dir,
                       const std::filesystem::path& cache_dir,
                       const std::string& split, std::uint64_t seed,
                       const std::string& affinity) {
             ServiceOptions o;
             o.affinity = ParseAffinity(affinity);
             o.models_dir = models_dir;
             o.cache_dir = cache_dir;
             o.split = split;
             o.seed = seed;
             auto s = std::make_unique<ExplorerService>(o);
             s->LoadModelsDir();
             return s;
           }),
           py::arg("models_dir"), py::arg("cache_dir") = "",
           py::arg("split") = "test", py::arg("seed") = 0,
           py::arg("affinity") = "magnitude")
      .def(
          "handle",
          [](ExplorerService& s, const std::string& method,
             const std::string& path,
             const std::map<std::string, std::string>& query,
             const std::string& body) {
            ApiRequest req{method, path, query, body};
            ApiResponse res;
            {
              py::gil_scoped_release release;
              res = s.Handle(req);
            }
            return py::make_tuple(res.status, res.body);
          },
          py::arg("method"), py::arg("path"),
          py::arg("query") = std::map<std::string, std::string>{},
          py::arg("body") = "");
}
