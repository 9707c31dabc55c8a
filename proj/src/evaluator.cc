#include "rnnlens/evaluator.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rnnlens/error.h"

namespace rnnlens {

ResponseRecord::ResponseRecord(int dim, int layer, StateKind kind,
                               std::uint64_t seed, std::size_t sample_capacity)
    : dim_(dim),
      layer_(layer),
      kind_(kind),
      capacity_(sample_capacity),
      seed_(seed),
      rng_(seed) {
  if (dim < 1) throw InvalidArgument("response dimension must be >= 1");
  if (sample_capacity < 1) throw InvalidArgument("sample capacity must be >= 1");
}

void ResponseRecord::PushSample(Entry& e, const double* row) {
  const std::size_t stored = e.samples.size() / static_cast<std::size_t>(dim_);
  if (stored < capacity_) {
    e.samples.insert(e.samples.end(), row, row + dim_);
    return;
  }
  // Reservoir step; e.count already includes this observation.
  std::uniform_int_distribution<std::int64_t> pick(0, e.count - 1);
  const std::int64_t slot = pick(rng_);
  if (slot < static_cast<std::int64_t>(capacity_)) {
    std::copy(row, row + dim_,
              e.samples.begin() + slot * static_cast<std::int64_t>(dim_));
  }
}

void ResponseRecord::Add(int word, const Eigen::VectorXd& delta) {
  if (delta.size() != dim_) {
    throw ShapeError("response delta has dimension " +
                     std::to_string(delta.size()) + ", expected " +
                     std::to_string(dim_));
  }
  auto [it, inserted] = entries_.try_emplace(word);
  Entry& e = it->second;
  if (inserted) e.sum = Eigen::VectorXd::Zero(dim_);
  ++e.count;
  e.sum += delta;
  PushSample(e, delta.data());
}

void ResponseRecord::Merge(const ResponseRecord& other) {
  if (other.dim_ != dim_ || other.layer_ != layer_ || other.kind_ != kind_) {
    throw InvalidArgument("cannot merge records of different layers/states");
  }
  const std::size_t d = static_cast<std::size_t>(dim_);
  for (const auto& [word, src] : other.entries_) {
    auto [it, inserted] = entries_.try_emplace(word);
    Entry& dst = it->second;
    if (inserted) dst.sum = Eigen::VectorXd::Zero(dim_);
    const std::int64_t count_a = dst.count;
    const std::int64_t count_b = src.count;
    dst.count += src.count;
    dst.sum += src.sum;

    const std::size_t stored_a = dst.samples.size() / d;
    const std::size_t stored_b = src.samples.size() / d;
    if (stored_a + stored_b <= capacity_ &&
        stored_a == static_cast<std::size_t>(count_a) &&
        stored_b == static_cast<std::size_t>(count_b)) {
      dst.samples.insert(dst.samples.end(), src.samples.begin(),
                         src.samples.end());
      continue;
    }
    // Weighted resampling: each slot draws from a side with probability
    // proportional to that side's remaining observation count.
    std::vector<std::size_t> ia(stored_a), ib(stored_b);
    std::iota(ia.begin(), ia.end(), 0);
    std::iota(ib.begin(), ib.end(), 0);
    std::shuffle(ia.begin(), ia.end(), rng_);
    std::shuffle(ib.begin(), ib.end(), rng_);
    const std::size_t target = std::min(capacity_, stored_a + stored_b);
    std::vector<double> merged;
    merged.reserve(target * d);
    std::size_t pa = 0, pb = 0;
    double wa = static_cast<double>(count_a), wb = static_cast<double>(count_b);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    while (merged.size() < target * d) {
      bool take_a;
      if (pa == stored_a) {
        take_a = false;
      } else if (pb == stored_b) {
        take_a = true;
      } else {
        take_a = u01(rng_) * (wa + wb) < wa;
      }
      const double* row = take_a ? &dst.samples[ia[pa++] * d]
                                 : &src.samples[ib[pb++] * d];
      merged.insert(merged.end(), row, row + d);
      if (take_a) {
        wa = std::max(0.0, wa - static_cast<double>(count_a) /
                                    static_cast<double>(stored_a));
      } else {
        wb = std::max(0.0, wb - static_cast<double>(count_b) /
                                    static_cast<double>(stored_b));
      }
    }
    dst.samples = std::move(merged);
  }
}

const ResponseRecord::Entry& ResponseRecord::At(int word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) {
    throw NoObservations("no observations for word id " +
                         std::to_string(word));
  }
  return it->second;
}

std::int64_t ResponseRecord::Count(int word) const {
  auto it = entries_.find(word);
  return it == entries_.end() ? 0 : it->second.count;
}

const Eigen::VectorXd& ResponseRecord::Sum(int word) const {
  return At(word).sum;
}

Eigen::MatrixXd ResponseRecord::Samples(int word) const {
  const Entry& e = At(word);
  const Eigen::Index rows =
      static_cast<Eigen::Index>(e.samples.size()) / dim_;
  Eigen::MatrixXd m(rows, dim_);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < dim_; ++c) m(r, c) = e.samples[r * dim_ + c];
  }
  return m;
}

std::vector<int> ResponseRecord::Words() const {
  std::vector<int> out;
  out.reserve(entries_.size());
  for (const auto& [w, e] : entries_) out.push_back(w);
  return out;
}

Json ResponseRecord::ToJson() const {
  Json words = Json::object();
  for (const auto& [w, e] : entries_) {
    words[std::to_string(w)] = Json{{"count", e.count},
                                    {"sum", VectorToJson(e.sum, false)},
                                    {"samples", e.samples}};
  }
  return Json{{"dim", dim_},
              {"layer", layer_},
              {"state_kind", StateKindName(kind_)},
              {"sample_capacity", capacity_},
              {"seed", seed_},
              {"words", std::move(words)}};
}

ResponseRecord ResponseRecord::FromJson(const Json& j) {
  ResponseRecord r(j.at("dim").get<int>(), j.at("layer").get<int>(),
                   ParseStateKind(j.at("state_kind").get<std::string>()),
                   j.at("seed").get<std::uint64_t>(),
                   j.at("sample_capacity").get<std::size_t>());
  for (const auto& [key, value] : j.at("words").items()) {
    Entry e;
    e.count = value.at("count").get<std::int64_t>();
    e.sum = VectorFromJson(value.at("sum"));
    e.samples = value.at("samples").get<std::vector<double>>();
    if (e.sum.size() != r.dim_ ||
        e.samples.size() % static_cast<std::size_t>(r.dim_) != 0) {
      throw ShapeError("response record entry has the wrong dimension");
    }
    r.entries_.emplace(std::stoi(key), std::move(e));
  }
  return r;
}

const Eigen::MatrixXd& SelectState(const LayerStep& step, CellType cell,
                                   StateKind kind) {
  if (kind == StateKind::kCell) {
    if (cell != CellType::kLstm) {
      throw InvalidArgument("only LSTMs have a cell state");
    }
    return step.c;
  }
  return step.h;
}

ResponseRecord RecordResponses(const ModelCheckpoint& model,
                               const std::vector<TokenSequence>& sequences,
                               int layer, StateKind kind, std::uint64_t seed) {
  const ModelConfig& cfg = model.config;
  if (layer < 0 || layer >= cfg.layers) {
    throw InvalidArgument("layer " + std::to_string(layer) + " out of range");
  }
  if (kind == StateKind::kCell && cfg.cell != CellType::kLstm) {
    throw InvalidArgument("only LSTMs have a cell state");
  }
  for (const auto& seq : sequences) {
    for (int id : seq) {
      if (id < 0 || id >= cfg.vocab_size) {
        throw VocabularyMismatch("token id " + std::to_string(id) +
                                 " does not belong to the model vocabulary");
      }
    }
  }
  ResponseRecord record(cfg.hidden_size, layer, kind, seed);
  for (const auto& seq : sequences) {
    if (seq.empty()) continue;
    auto out = model.Forward(seq, /*record=*/true);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(cfg.hidden_size);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      const Eigen::VectorXd cur = SelectState(out.steps[t][layer], cfg.cell, kind).col(0);
      record.Add(seq[t], cur - prev);
      prev = cur;
    }
  }
  return record;
}

ExpectedResponse ComputeExpectedResponse(const ResponseRecord& record,
                                         int word) {
  if (!record.Has(word)) {
    throw NoObservations("no observations for word id " +
                         std::to_string(word));
  }
  ExpectedResponse r;
  r.word = word;
  r.count = record.Count(word);
  r.mean = record.Sum(word) / static_cast<double>(r.count);
  return r;
}

double Percentile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw NoObservations("percentile of empty sample");
  const double pos = q / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

ResponseDistribution ComputeResponseDistribution(const ResponseRecord& record,
                                                 int word) {
  Eigen::MatrixXd samples = record.Samples(word);
  ResponseDistribution d;
  d.word = word;
  d.count = record.Count(word);
  for (auto& p : d.percentiles) p.resize(record.dim());
  std::vector<double> column(static_cast<std::size_t>(samples.rows()));
  for (Eigen::Index j = 0; j < samples.cols(); ++j) {
    for (Eigen::Index r = 0; r < samples.rows(); ++r) column[r] = samples(r, j);
    std::sort(column.begin(), column.end());
    for (std::size_t k = 0; k < kPercentileLevels.size(); ++k) {
      d.percentiles[k][j] = Percentile(column, kPercentileLevels[k]);
    }
  }
  return d;
}

std::vector<int> SortDimensions(const Eigen::VectorXd& response) {
  std::vector<int> perm(static_cast<std::size_t>(response.size()));
  std::iota(perm.begin(), perm.end(), 0);
  std::stable_sort(perm.begin(), perm.end(), [&](int a, int b) {
    return response[a] < response[b];
  });
  return perm;
}

PredictionDecomposition DecomposePrediction(const ModelCheckpoint& model,
                                            const TokenSequence& ids,
                                            int cls) {
  const ModelConfig& cfg = model.config;
  if (cfg.scheme != Scheme::kSequenceClassification) {
    throw InvalidArgument("prediction decomposition needs a classifier");
  }
  if (cls < 0 || cls >= cfg.num_classes) {
    throw InvalidArgument("class index out of range");
  }
  auto out = model.Forward(ids, /*record=*/true);
  const Eigen::VectorXd u = model.params.output.row(cls).transpose();
  PredictionDecomposition d;
  Eigen::VectorXd prev = Eigen::VectorXd::Zero(cfg.hidden_size);
  for (const auto& step : out.steps) {
    const Eigen::VectorXd h = step.back().h.col(0);
    const double term = u.dot(h - prev);
    d.log_factors.push_back(term);
    d.factors.push_back(std::exp(term));
    prev = h;
  }
  d.final_logit_term = u.dot(prev);
  return d;
}

std::vector<UnitWord> TopWordsForUnit(const ResponseRecord& record,
                                      const Vocabulary& vocabulary, int unit,
                                      int m, int min_count) {
  if (unit < 0 || unit >= record.dim()) {
    throw InvalidArgument("unit " + std::to_string(unit) + " out of range");
  }
  if (m < 1) throw InvalidArgument("m must be >= 1");
  std::vector<UnitWord> all;
  for (int w : record.Words()) {
    const std::int64_t count = record.Count(w);
    if (count < min_count) continue;
    all.push_back({w, record.Sum(w)[unit] / static_cast<double>(count), count});
  }
  std::sort(all.begin(), all.end(), [&](const UnitWord& a, const UnitWord& b) {
    const double ma = std::abs(a.response), mb = std::abs(b.response);
    if (ma != mb) return ma > mb;
    if (a.count != b.count) return a.count > b.count;
    return vocabulary.Token(a.word) < vocabulary.Token(b.word);
  });
  if (all.size() > static_cast<std::size_t>(m)) all.resize(m);
  return all;
}

}  // namespace rnnlens
