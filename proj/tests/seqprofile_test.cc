#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "rnnlens/corpus.h"
#include "rnnlens/error.h"
#include "rnnlens/evaluator.h"
#include "rnnlens/seqprofile.h"
#include "test_support.h"

namespace rnnlens {
namespace {

using Eigen::VectorXd;

VectorXd Vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

TEST(AggregateInfoTest, Examples) {
  const auto a = ComputeAggregateInfo(Vec({0.5, -0.3, 0.2}), {0, 0, 0}, 1);
  EXPECT_DOUBLE_EQ(a.positive[0], 0.7);
  EXPECT_DOUBLE_EQ(a.negative[0], -0.3);
  const auto z = ComputeAggregateInfo(VectorXd::Zero(4), {0, 1, 1, 0}, 2);
  EXPECT_EQ(z.positive, VectorXd::Zero(2));
  EXPECT_EQ(z.negative, VectorXd::Zero(2));
  EXPECT_THROW(ComputeAggregateInfo(Vec({1, 2}), {0}, 1), InvalidArgument);
  EXPECT_THROW(ComputeAggregateInfo(Vec({1, 2}), {0, 2}, 2), InvalidArgument);
}

TEST(AggregateInfoTest, MatchesFilterAndSum) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 20; ++trial) {
    VectorXd h(12);
    for (auto& x : h) x = normal(rng);
    std::vector<int> assign;
    for (int j = 0; j < 12; ++j) assign.push_back(static_cast<int>(rng() % 4));
    const auto a = ComputeAggregateInfo(h, assign, 4);
    for (int i = 0; i < 4; ++i) {
      double pos = 0.0, neg = 0.0;
      for (int j = 0; j < 12; ++j) {
        if (assign[static_cast<std::size_t>(j)] != i) continue;
        if (h[j] > 0) pos += h[j];
        if (h[j] < 0) neg += h[j];
      }
      EXPECT_EQ(a.positive[i], pos);
      EXPECT_EQ(a.negative[i], neg);
      EXPECT_GE(a.positive[i], 0.0);
      EXPECT_LE(a.negative[i], 0.0);
    }
  }
}

TEST(UpdatedInfoTest, Examples) {
  const auto a = ComputeAggregateInfo(Vec({0.5, -0.3}), {0, 1}, 2);
  const auto same = ComputeUpdatedInfo(a, a);
  EXPECT_EQ(same.positive, VectorXd::Zero(2));
  EXPECT_EQ(same.negative, VectorXd::Zero(2));
  const AggregateInfo zero{VectorXd::Zero(2), VectorXd::Zero(2)};
  const auto first = ComputeUpdatedInfo(zero, a);
  EXPECT_EQ(first.positive, a.positive);
  EXPECT_EQ(first.negative, a.negative);
  EXPECT_THROW(ComputeUpdatedInfo(AggregateInfo{VectorXd::Zero(1), VectorXd::Zero(1)}, a),
               ShapeError);
}

TEST(PreservedInfoTest, ClipExamples) {
  EXPECT_DOUBLE_EQ(ComputePreservedInfo(Vec({0.5, -0.5}), Vec({0.5, -0.5}), {0, 0}, 1)[0], 1.0);
  EXPECT_EQ(ComputePreservedInfo(Vec({0.5}), Vec({-0.5}), {0}, 1)[0], 0.0);
  const VectorXd prev = Vec({0.4, -0.8, 0.2});
  EXPECT_DOUBLE_EQ(ComputePreservedInfo(prev, 0.5 * prev, {0, 0, 0}, 1)[0],
                   0.5 * prev.cwiseAbs().sum());
  // Growth is clipped to full preservation; zero previous contributes nothing.
  EXPECT_DOUBLE_EQ(ComputePreservedInfo(Vec({0.2, 0.0}), Vec({0.9, 0.7}), {0, 0}, 1)[0], 0.2);
  EXPECT_THROW(ComputePreservedInfo(Vec({1, 2}), Vec({1}), {0, 0}, 1), ShapeError);
}

TEST(PreservedInfoTest, GateVariant) {
  const VectorXd prev = Vec({0.4, -0.8, 0.2, 0.1});
  const VectorXd ones = VectorXd::Ones(4);
  const VectorXd beta = ComputePreservedInfo(prev, Vec({9, 9, 9, 9}), {0, 1, 0, 1}, 2, &ones);
  EXPECT_DOUBLE_EQ(beta[0], 0.6);
  EXPECT_DOUBLE_EQ(beta[1], 0.9);
  const VectorXd gates = Vec({0.5, 0.25, 0.0, 1.0});
  const VectorXd g = ComputePreservedInfo(prev, prev, {0, 0, 0, 0}, 1, &gates);
  EXPECT_DOUBLE_EQ(g[0], 0.2 + 0.2 + 0.0 + 0.1);
  const VectorXd short_gates = Vec({1.0});
  EXPECT_THROW(ComputePreservedInfo(prev, prev, {0, 0, 0, 0}, 1, &short_gates), ShapeError);
}

TEST(PreservedInfoTest, BoundedByPreviousMagnitude) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> normal;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    VectorXd prev(8), cur(8), gates(8);
    for (auto& x : prev) x = normal(rng);
    for (auto& x : cur) x = normal(rng);
    for (auto& x : gates) x = unit(rng);
    std::vector<int> assign;
    for (int j = 0; j < 8; ++j) assign.push_back(static_cast<int>(rng() % 3));
    const auto before = ComputeAggregateInfo(prev, assign, 3);
    for (const VectorXd& beta : {ComputePreservedInfo(prev, cur, assign, 3),
                                 ComputePreservedInfo(prev, cur, assign, 3, &gates)}) {
      for (int i = 0; i < 3; ++i) {
        EXPECT_GE(beta[i], 0.0);
        EXPECT_LE(beta[i], before.positive[i] - before.negative[i] + 1e-15);
      }
    }
  }
}

struct ProfileCase {
  CellType cell;
  int layers;
  StateKind kind;
};

class ProfileTest : public ::testing::TestWithParam<ProfileCase> {
 protected:
  static ModelCheckpoint Model(const ProfileCase& c) {
    ModelConfig cfg;
    cfg.cell = c.cell;
    cfg.layers = c.layers;
    cfg.hidden_size = 9;
    cfg.embedding_size = 4;
    cfg.seed = 2;
    ModelCheckpoint ck;
    ck.vocabulary = Vocabulary::Build(
        {Tokenize("The company said it planned to offer 2 million shares .", true)}, 20);
    cfg.vocab_size = cfg.num_classes = ck.vocabulary.size();
    ck.config = cfg;
    ck.params = Parameters::Random(cfg, 4, 0.8);
    return ck;
  }
};

TEST_P(ProfileTest, MatchesStraightLineRecomputation) {
  const ProfileCase pc = GetParam();
  const ModelCheckpoint ck = Model(pc);
  const TokenSequence ids = ck.vocabulary.Encode(
      Tokenize("The company said it planned to offer 2 million shares .", true));
  const std::vector<int> assign{0, 1, 2, 0, 1, 2, 0, 0, 1};
  const int k = 3;
  const int layer = pc.layers - 1;
  const SequenceProfile p = ProfileSequence(ck, assign, k, ids, layer, pc.kind);
  ASSERT_EQ(p.steps.size(), ids.size());
  EXPECT_EQ(p.cluster_sizes, (std::vector<int>{4, 3, 2}));

  const auto out = ck.Forward(ids, true);
  VectorXd prev = VectorXd::Zero(9);
  VectorXd prev_pos = VectorXd::Zero(k), prev_neg = VectorXd::Zero(k);
  for (std::size_t t = 0; t < ids.size(); ++t) {
    const LayerStep& st = out.steps[t][static_cast<std::size_t>(layer)];
    const VectorXd cur = pc.kind == StateKind::kCell ? st.c.col(0) : st.h.col(0);
    VectorXd gate = VectorXd::Ones(9);
    bool gated = false;
    if (pc.cell == CellType::kLstm && pc.kind == StateKind::kCell) {
      gate = st.f.col(0);
      gated = true;
    } else if (pc.cell == CellType::kGru) {
      gate = (1.0 - st.z.col(0).array()).matrix();
      gated = true;
    }
    EXPECT_EQ(p.gated, gated);
    VectorXd pos = VectorXd::Zero(k), neg = VectorXd::Zero(k), beta = VectorXd::Zero(k);
    for (int j = 0; j < 9; ++j) {
      const int c = assign[static_cast<std::size_t>(j)];
      if (cur[j] > 0) pos[c] += cur[j];
      if (cur[j] < 0) neg[c] += cur[j];
      if (prev[j] != 0.0) {
        const double keep = gated ? gate[j] : std::min(1.0, std::max(0.0, cur[j] / prev[j]));
        beta[c] += std::abs(prev[j]) * keep;
      }
    }
    const ProfileStep& s = p.steps[t];
    EXPECT_EQ(s.word, ids[t]);
    EXPECT_LT((s.aggregate.positive - pos).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((s.aggregate.negative - neg).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((s.updated.positive - (pos - prev_pos)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((s.updated.negative - (neg - prev_neg)).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_LT((s.preserved - beta).cwiseAbs().maxCoeff(), 1e-14);
    // Partition identity.
    EXPECT_NEAR(s.aggregate.positive.sum() + s.aggregate.negative.sum(), cur.sum(), 1e-14);
    for (int c = 0; c < k; ++c) {
      const double net = (pos[c] - prev_pos[c]) + (neg[c] - prev_neg[c]);
      const int size = p.cluster_sizes[static_cast<std::size_t>(c)];
      EXPECT_NEAR(s.link_strength[c], std::abs(net) / size, 1e-15);
      EXPECT_EQ(s.link_sign[c], net > 0 ? 1.0 : (net < 0 ? -1.0 : 0.0));
      const double denom = pos[c] - neg[c];
      ASSERT_GT(denom, 0.0);
      EXPECT_FALSE(s.ratio_undefined[static_cast<std::size_t>(c)]);
      EXPECT_NEAR(s.preserved_ratio[c], std::min(1.0, std::max(0.0, beta[c] / denom)), 1e-15);
      if (t > 0) {
        EXPECT_LE(beta[c], prev_pos[c] - prev_neg[c] + 1e-14);
      }
    }
    ASSERT_EQ(s.top_predictions.size(), static_cast<std::size_t>(kTopPredictions));
    for (std::size_t r = 1; r < s.top_predictions.size(); ++r) {
      EXPECT_GE(s.top_predictions[r - 1].probability, s.top_predictions[r].probability);
    }
    EXPECT_EQ(s.top_predictions[0].probability, out.probabilities[t].maxCoeff());
    prev = cur;
    prev_pos = pos;
    prev_neg = neg;
  }
}

TEST_P(ProfileTest, SingleTokenHasNothingPreserved) {
  const ModelCheckpoint ck = Model(GetParam());
  const std::vector<int> assign(9, 0);
  const SequenceProfile p =
      ProfileSequence(ck, assign, 1, {ck.vocabulary.Id("company")},
                      GetParam().layers - 1, GetParam().kind);
  ASSERT_EQ(p.steps.size(), 1u);
  EXPECT_EQ(p.steps[0].preserved[0], 0.0);
  EXPECT_EQ(p.steps[0].updated.positive, p.steps[0].aggregate.positive);
  EXPECT_EQ(p.steps[0].updated.negative, p.steps[0].aggregate.negative);
}

INSTANTIATE_TEST_SUITE_P(
    Cells, ProfileTest,
    ::testing::Values(ProfileCase{CellType::kRnn, 1, StateKind::kHidden},
                      ProfileCase{CellType::kLstm, 2, StateKind::kCell},
                      ProfileCase{CellType::kLstm, 1, StateKind::kHidden},
                      ProfileCase{CellType::kGru, 2, StateKind::kHidden}),
    [](const auto& info) {
      return std::string(CellTypeName(info.param.cell)) + "_l" +
             std::to_string(info.param.layers) + "_" +
             (info.param.kind == StateKind::kCell ? "cell" : "hidden");
    });

TEST(ProfileSequenceTest, UngatedOptionUsesClipRatio) {
  const ModelCheckpoint ck =
      testing::RandomModel(testing::TinyConfig(CellType::kGru, Scheme::kLanguageModel), 2);
  const std::vector<int> assign{0, 0, 0};
  const auto p = ProfileSequence(ck, assign, 1, {1, 2, 3}, 0, StateKind::kHidden, false);
  EXPECT_FALSE(p.gated);
  const auto out = ck.Forward({1, 2, 3}, true);
  const VectorXd expected =
      ComputePreservedInfo(out.steps[1][0].h.col(0), out.steps[2][0].h.col(0), assign, 1);
  EXPECT_EQ(p.steps[2].preserved, expected);
}

TEST(ProfileSequenceTest, EmptyClusterRatioUndefined) {
  const ModelCheckpoint ck =
      testing::RandomModel(testing::TinyConfig(CellType::kRnn, Scheme::kLanguageModel), 2);
  const auto p = ProfileSequence(ck, {0, 0, 0}, 2, {1, 2}, 0, StateKind::kHidden);
  for (const auto& s : p.steps) {
    EXPECT_TRUE(s.ratio_undefined[1]);
    EXPECT_EQ(s.preserved_ratio[1], 1.0);
    EXPECT_EQ(s.link_strength[1], 0.0);
  }
}

TEST(ProfileSequenceTest, ClassificationFinalProbabilities) {
  const ModelCheckpoint ck = testing::RandomModel(
      testing::TinyConfig(CellType::kLstm, Scheme::kSequenceClassification), 2);
  const auto p = ProfileSequence(ck, {0, 1, 0}, 2, {1, 2, 4}, 0, StateKind::kCell);
  EXPECT_EQ(p.final_probabilities, ck.Forward({1, 2, 4}, false).probabilities.back());
  EXPECT_NEAR(p.final_probabilities.sum(), 1.0, 1e-12);
  for (const auto& s : p.steps) EXPECT_TRUE(s.top_predictions.empty());
}

TEST(ProfileSequenceTest, Errors) {
  const ModelCheckpoint ck =
      testing::RandomModel(testing::TinyConfig(CellType::kRnn, Scheme::kLanguageModel), 2);
  EXPECT_THROW(ProfileSequence(ck, {0, 0, 0}, 1, {}, 0, StateKind::kHidden), InvalidArgument);
  EXPECT_THROW(ProfileSequence(ck, {0, 0, 0}, 1, {1}, 0, StateKind::kCell), InvalidArgument);
  EXPECT_THROW(ProfileSequence(ck, {0, 0}, 1, {1}, 0, StateKind::kHidden), InvalidArgument);
  EXPECT_THROW(ProfileSequence(ck, {0, 0, 0}, 1, {7}, 0, StateKind::kHidden), VocabularyMismatch);
  EXPECT_THROW(ProfileSequence(ck, {0, 0, 0}, 1, {1}, 1, StateKind::kHidden), InvalidArgument);
}

TEST(ProfileSequenceTest, JsonHasNoNonFiniteValues) {
  const ModelCheckpoint ck =
      testing::RandomModel(testing::TinyConfig(CellType::kGru, Scheme::kLanguageModel), 5);
  const auto p = ProfileSequence(ck, {0, 1, 1}, 2, {0, 1, 2, 3}, 0, StateKind::kHidden);
  const Json j = p.ToJson(true);
  EXPECT_TRUE(j["final_probabilities"].is_null());
  const std::string s = j["steps"].dump();
  EXPECT_EQ(s.find("nan"), std::string::npos);
  EXPECT_EQ(s.find("null"), std::string::npos);
  EXPECT_EQ(p.ToJson(true).dump(), p.ToJson(true).dump());
}

}  // namespace
}  // namespace rnnlens
