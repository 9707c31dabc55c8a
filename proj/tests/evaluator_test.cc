#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "rnnlens/error.h"
#include "rnnlens/evaluator.h"
#include "test_support.h"

namespace rnnlens {
namespace {

using Eigen::VectorXd;
using testing::RandomModel;
using testing::TinyConfig;

VectorXd Vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(RecordTest, SingleStepDeltaIsState) {
  for (CellType cell : {CellType::kRnn, CellType::kLstm, CellType::kGru}) {
    const ModelCheckpoint ck = RandomModel(TinyConfig(cell, Scheme::kLanguageModel), 3);
    const auto kind = DefaultStateKind(cell);
    const ResponseRecord r = RecordResponses(ck, {{2}}, 0, kind);
    ASSERT_EQ(r.Count(2), 1);
    const auto out = ck.Forward({2}, true);
    EXPECT_EQ(r.Sum(2), SelectState(out.steps[0][0], cell, kind).col(0));
    EXPECT_FALSE(r.Has(1));
    EXPECT_THROW(ComputeExpectedResponse(r, 1), NoObservations);
    EXPECT_THROW(ComputeResponseDistribution(r, 1), NoObservations);
  }
}

TEST(RecordTest, VocabularyMismatchRejected) {
  const ModelCheckpoint ck = RandomModel(TinyConfig(CellType::kGru, Scheme::kLanguageModel), 3);
  EXPECT_THROW(RecordResponses(ck, {{0, 9}}, 0, StateKind::kHidden),
               VocabularyMismatch);
}

TEST(RecordTest, CountsMatchTokenCounting) {
  const ModelCheckpoint ck = RandomModel(TinyConfig(CellType::kLstm, Scheme::kLanguageModel), 4);
  const auto seqs = testing::RandomSequences(60, 5, 15, 5, 8);
  std::map<int, std::int64_t> counts;
  std::size_t tokens = 0;
  for (const auto& s : seqs) {
    for (int w : s) ++counts[w];
    tokens += s.size();
  }
  ASSERT_GE(tokens, 500u);
  const ResponseRecord r = RecordResponses(ck, seqs, 0, StateKind::kCell);
  EXPECT_EQ(r.WordCount(), counts.size());
  for (const auto& [w, c] : counts) EXPECT_EQ(r.Count(w), c);
}

TEST(RecordTest, DeltasTelescopeToFinalState) {
  for (CellType cell : {CellType::kRnn, CellType::kLstm, CellType::kGru}) {
    const ModelConfig c = TinyConfig(cell, Scheme::kLanguageModel, 2);
    const ModelCheckpoint ck = RandomModel(c, 5);
    const TokenSequence seq{0, 1, 2, 3, 4, 0};
    const auto kind = DefaultStateKind(cell);
    const ResponseRecord r = RecordResponses(ck, {seq}, 1, kind);
    VectorXd total = VectorXd::Zero(c.hidden_size);
    for (int w : r.Words()) total += r.Sum(w);
    const auto out = ck.Forward(seq, true);
    const VectorXd final_state = SelectState(out.steps.back()[1], cell, kind).col(0);
    EXPECT_LT((total - final_state).cwiseAbs().maxCoeff(), 1e-14);
  }
}

TEST(RecordTest, TanhDeltasBounded) {
  for (CellType cell : {CellType::kRnn, CellType::kGru}) {
    const ModelCheckpoint ck = RandomModel(TinyConfig(cell, Scheme::kLanguageModel), 6, 3.0);
    const auto seqs = testing::RandomSequences(20, 5, 10, 5, 1);
    const ResponseRecord r = RecordResponses(ck, seqs, 0, StateKind::kHidden);
    for (int w : r.Words()) {
      EXPECT_LT(r.Samples(w).cwiseAbs().maxCoeff(), 2.0);
    }
  }
}

TEST(ExpectedResponseTest, Means) {
  ResponseRecord r(2, 0, StateKind::kHidden);
  r.Add(0, Vec({0.2, -0.1}));
  EXPECT_EQ(ComputeExpectedResponse(r, 0).mean, Vec({0.2, -0.1}));
  r.Add(1, Vec({1, -1}));
  r.Add(1, Vec({0, 0}));
  const auto e = ComputeExpectedResponse(r, 1);
  EXPECT_EQ(e.mean, Vec({0.5, -0.5}));
  EXPECT_EQ(e.count, 2);
}

TEST(ExpectedResponseTest, TwoPassBruteForce) {
  const ModelConfig c = TinyConfig(CellType::kGru, Scheme::kLanguageModel, 2);
  const ModelCheckpoint ck = RandomModel(c, 7);
  const auto seqs = testing::RandomSequences(40, 3, 12, 5, 9);
  const ResponseRecord r = RecordResponses(ck, seqs, 1, StateKind::kHidden);
  // Pass 1: count. Pass 2: sum deltas divided by the count.
  std::map<int, int> counts;
  for (const auto& s : seqs) {
    for (int w : s) ++counts[w];
  }
  std::map<int, VectorXd> means;
  for (const auto& s : seqs) {
    const auto out = ck.Forward(s, true);
    VectorXd prev = VectorXd::Zero(c.hidden_size);
    for (std::size_t t = 0; t < s.size(); ++t) {
      const VectorXd h = out.steps[t][1].h.col(0);
      auto [it, fresh] = means.try_emplace(s[t], VectorXd::Zero(c.hidden_size));
      it->second += (h - prev) / counts[s[t]];
      prev = h;
    }
  }
  for (const auto& [w, m] : means) {
    EXPECT_LT((ComputeExpectedResponse(r, w).mean - m).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(ExpectedResponseTest, MergeIsCountWeighted) {
  const ModelCheckpoint ck = RandomModel(TinyConfig(CellType::kLstm, Scheme::kLanguageModel), 8);
  const auto a_seqs = testing::RandomSequences(10, 3, 8, 5, 1);
  const auto b_seqs = testing::RandomSequences(17, 3, 8, 5, 2);
  const ResponseRecord a = RecordResponses(ck, a_seqs, 0, StateKind::kCell);
  const ResponseRecord b = RecordResponses(ck, b_seqs, 0, StateKind::kCell);
  ResponseRecord merged = a;
  merged.Merge(b);
  for (int w : merged.Words()) {
    const double ca = a.Has(w) ? a.Count(w) : 0, cb = b.Has(w) ? b.Count(w) : 0;
    VectorXd expected = VectorXd::Zero(3);
    if (ca > 0) expected += ca * ComputeExpectedResponse(a, w).mean;
    if (cb > 0) expected += cb * ComputeExpectedResponse(b, w).mean;
    expected /= ca + cb;
    EXPECT_LT((ComputeExpectedResponse(merged, w).mean - expected).cwiseAbs().maxCoeff(),
              1e-12);
    EXPECT_EQ(merged.Count(w), static_cast<std::int64_t>(ca + cb));
  }
}

TEST(ExpectedResponseTest, JsonRoundTripExact) {
  const ModelCheckpoint ck = RandomModel(TinyConfig(CellType::kLstm, Scheme::kLanguageModel), 8);
  const ResponseRecord r =
      RecordResponses(ck, testing::RandomSequences(10, 3, 8, 5, 1), 0, StateKind::kCell);
  const ResponseRecord back = ResponseRecord::FromJson(Json::parse(r.ToJson().dump()));
  for (int w : r.Words()) {
    EXPECT_EQ(back.Sum(w), r.Sum(w));
    EXPECT_EQ(back.Samples(w), r.Samples(w));
  }
}

double SortedPercentile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = q / 100.0 * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = static_cast<std::size_t>(std::ceil(pos));
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

TEST(DistributionTest, Percentiles) {
  ResponseRecord single(1, 0, StateKind::kHidden);
  single.Add(0, Vec({0.7}));
  const auto s = ComputeResponseDistribution(single, 0);
  for (const auto& p : s.percentiles) EXPECT_EQ(p[0], 0.7);

  ResponseRecord r(1, 0, StateKind::kHidden);
  std::vector<int> order(100);
  std::iota(order.begin(), order.end(), 1);
  std::shuffle(order.begin(), order.end(), std::mt19937_64(1));
  for (int v : order) r.Add(0, Vec({static_cast<double>(v)}));
  const auto d = ComputeResponseDistribution(r, 0);
  EXPECT_DOUBLE_EQ(d.percentiles[1][0], 25.75);
  EXPECT_DOUBLE_EQ(d.percentiles[3][0], 75.25);
  std::vector<double> values(order.begin(), order.end());
  for (std::size_t k = 0; k < kPercentileLevels.size(); ++k) {
    EXPECT_DOUBLE_EQ(d.percentiles[k][0], SortedPercentile(values, kPercentileLevels[k]));
  }
}

TEST(DistributionTest, MonotoneOnRandomData) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  ResponseRecord r(4, 0, StateKind::kHidden, 3, 64);
  for (int i = 0; i < 500; ++i) {
    VectorXd v(4);
    for (auto& x : v) x = normal(rng);
    r.Add(i % 3, v);
  }
  for (int w = 0; w < 3; ++w) {
    EXPECT_LE(r.Samples(w).rows(), 64);
    const auto d = ComputeResponseDistribution(r, w);
    for (std::size_t k = 1; k < d.percentiles.size(); ++k) {
      EXPECT_TRUE((d.percentiles[k - 1].array() <= d.percentiles[k].array()).all());
    }
  }
}

TEST(SortDimensionsTest, Examples) {
  EXPECT_EQ(SortDimensions(Vec({0.3, -0.2, 0.0})), (std::vector<int>{1, 2, 0}));
  EXPECT_EQ(SortDimensions(Vec({0.5, 0.5, 0.5, 0.5})), (std::vector<int>{0, 1, 2, 3}));
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> coarse(-3, 3);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd v(9);
    for (auto& x : v) x = coarse(rng) * 0.25;
    std::vector<std::pair<double, int>> pairs;
    for (int j = 0; j < 9; ++j) pairs.emplace_back(v[j], j);
    std::sort(pairs.begin(), pairs.end());
    std::vector<int> expected;
    for (const auto& p : pairs) expected.push_back(p.second);
    EXPECT_EQ(SortDimensions(v), expected);
  }
}

TEST(DecompositionTest, TelescopingIdentity) {
  for (CellType cell : {CellType::kRnn, CellType::kLstm, CellType::kGru}) {
    const ModelConfig c = TinyConfig(cell, Scheme::kSequenceClassification, 2);
    const ModelCheckpoint ck = RandomModel(c, 12, 0.9);
    const auto single = DecomposePrediction(ck, {3}, 1);
    ASSERT_EQ(single.factors.size(), 1u);
    const VectorXd h1 = ck.Forward({3}, true).steps[0][1].h.col(0);
    EXPECT_NEAR(single.factors[0], std::exp(ck.params.output.row(1).dot(h1)), 1e-12);

    for (const auto& seq : testing::RandomSequences(20, 1, 12, 5, 3)) {
      const auto d = DecomposePrediction(ck, seq, 0);
      const VectorXd hT = ck.Forward(seq, true).steps.back()[1].h.col(0);
      const double target = ck.params.output.row(0).dot(hT);
      double sum = 0.0, log_product = 0.0;
      for (std::size_t t = 0; t < d.log_factors.size(); ++t) {
        sum += d.log_factors[t];
        log_product += std::log(d.factors[t]);
      }
      EXPECT_LE(std::abs(sum - target), 1e-9 * std::max(1.0, std::abs(target)));
      EXPECT_LE(std::abs(log_product - target), 1e-9 * std::max(1.0, std::abs(target)));
      EXPECT_EQ(d.final_logit_term, target);
    }
  }
}

TEST(TopWordsTest, RankingAndFilter) {
  Vocabulary v = testing::SyntheticVocabulary(5);
  ResponseRecord r(1, 0, StateKind::kHidden);
  for (int i = 0; i < 5; ++i) {
    r.Add(0, Vec({0.9}));
    r.Add(1, Vec({-0.95}));
    r.Add(2, Vec({0.1}));
  }
  r.Add(3, Vec({5.0}));  // below min_count
  const auto top1 = TopWordsForUnit(r, v, 0, 1);
  ASSERT_EQ(top1.size(), 1u);
  EXPECT_EQ(top1[0].word, 1);
  EXPECT_DOUBLE_EQ(top1[0].response, -0.95);
  const auto all = TopWordsForUnit(r, v, 0, 100);
  ASSERT_EQ(all.size(), 3u);
  EXPECT_EQ(all[1].word, 0);
  EXPECT_EQ(all[2].word, 2);
  EXPECT_EQ(TopWordsForUnit(r, v, 0, 100, 1).size(), 4u);
}

TEST(TopWordsTest, MatchesFullSortOracle) {
  const ModelCheckpoint ck = RandomModel(TinyConfig(CellType::kGru, Scheme::kLanguageModel), 13);
  const ResponseRecord r =
      RecordResponses(ck, testing::RandomSequences(60, 4, 10, 5, 6), 0, StateKind::kHidden);
  for (int j = 0; j < 3; ++j) {
    std::vector<std::tuple<double, std::int64_t, std::string, int>> rows;
    for (int w : r.Words()) {
      if (r.Count(w) < 5) continue;
      const double s = ComputeExpectedResponse(r, w).mean[j];
      rows.emplace_back(-std::abs(s), -r.Count(w), ck.vocabulary.Token(w), w);
    }
    std::sort(rows.begin(), rows.end());
    const auto top = TopWordsForUnit(r, ck.vocabulary, j, 3);
    ASSERT_EQ(top.size(), std::min<std::size_t>(3, rows.size()));
    for (std::size_t i = 0; i < top.size(); ++i) EXPECT_EQ(top[i].word, std::get<3>(rows[i]));
  }
}

}  // namespace
}  // namespace rnnlens
