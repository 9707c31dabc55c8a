#include <algorithm>
#include <fstream>
#include <map>
#include <random>
#include <regex>
#include <set>

#include <gtest/gtest.h>

#include "rnnlens/corpus.h"
#include "rnnlens/error.h"
#include "rnnlens/fixtures.h"
#include "test_support.h"

namespace rnnlens {
namespace {

TEST(VocabularyTest, CountsAndUnknownLast) {
  const Vocabulary v = Vocabulary::Build({{"a", "b", "a"}}, 3);
  ASSERT_EQ(v.size(), 3);
  EXPECT_EQ(v.Token(0), "a");
  EXPECT_EQ(v.Count(0), 2);
  EXPECT_EQ(v.Token(1), "b");
  EXPECT_EQ(v.Count(1), 1);
  EXPECT_EQ(v.Token(v.unk_id()), "<unk>");
}

TEST(VocabularyTest, TiesBrokenLexicographically) {
  const Vocabulary v = Vocabulary::Build({{"c", "b", "a"}}, 2);
  ASSERT_EQ(v.size(), 2);
  EXPECT_EQ(v.Token(0), "a");
  EXPECT_EQ(v.Id("b"), v.unk_id());
  EXPECT_EQ(v.Id("c"), v.unk_id());
  EXPECT_FALSE(v.Find("b").has_value());
}

TEST(VocabularyTest, EmptyCorpusRejected) {
  EXPECT_THROW(Vocabulary::Build({}, 5), InvalidArgument);
  EXPECT_THROW(Vocabulary::Build({{}, {}}, 5), InvalidArgument);
}

TEST(VocabularyTest, ZipfCorpusKeepsTopByCount) {
  std::mt19937_64 rng(4);
  std::vector<double> weights;
  for (int r = 1; r <= 400; ++r) weights.push_back(1.0 / r);
  std::discrete_distribution<int> zipf(weights.begin(), weights.end());
  std::vector<std::vector<std::string>> corpus(100);
  for (auto& line : corpus) {
    for (int i = 0; i < 100; ++i) line.push_back("t" + std::to_string(zipf(rng)));
  }
  std::map<std::string, std::int64_t> counts;
  for (const auto& line : corpus) {
    for (const auto& w : line) ++counts[w];
  }
  std::vector<std::pair<std::string, std::int64_t>> sorted(counts.begin(),
                                                           counts.end());
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });

  const Vocabulary v = Vocabulary::Build(corpus, 100);
  ASSERT_EQ(v.size(), 100);
  for (int i = 0; i < 99; ++i) {
    EXPECT_EQ(v.Token(i), sorted[static_cast<std::size_t>(i)].first);
    EXPECT_EQ(v.Count(i), sorted[static_cast<std::size_t>(i)].second);
  }
  std::int64_t dropped = 0;
  for (std::size_t i = 99; i < sorted.size(); ++i) dropped += sorted[i].second;
  EXPECT_EQ(v.Count(v.unk_id()), dropped);
}

TEST(VocabularyTest, RoundTripAndDenseIds) {
  const Vocabulary v = Vocabulary::Build({{"x", "y", "z", "x"}, {"y"}}, 10);
  for (int id = 0; id < v.size(); ++id) EXPECT_EQ(v.Id(v.Token(id)), id);
  EXPECT_EQ(Vocabulary::FromJson(v.ToJson()), v);
  for (int id = 0; id < v.size(); ++id) {
    if (id != v.unk_id()) {
      EXPECT_GE(v.Count(id), 1);
    }
  }
}

TEST(TokenizeTest, Rules) {
  EXPECT_EQ(Tokenize("I love it.", true),
            (std::vector<std::string>{"i", "love", "it", "."}));
  EXPECT_TRUE(Tokenize("", true).empty());
  EXPECT_TRUE(Tokenize("   \t ", true).empty());
  EXPECT_EQ(Tokenize("(Hi), \"there\"!", false),
            (std::vector<std::string>{"(", "Hi", ")", ",", "\"", "there",
                                      "\"", "!"}));
  EXPECT_EQ(Tokenize("U.S. e-mail", true),
            (std::vector<std::string>{"u.s", ".", "e-mail"}));
}

std::vector<std::string> RegexTokenize(const std::string& text) {
  static const std::regex word(R"(\S+)");
  static const std::regex parts(R"(^([.,;:!?"()]*)(.*?)([.,;:!?"()]*)$)");
  std::vector<std::string> out;
  for (auto it = std::sregex_iterator(text.begin(), text.end(), word);
       it != std::sregex_iterator(); ++it) {
    const std::string w = it->str();
    std::smatch m;
    std::regex_match(w, m, parts);
    for (char c : m[1].str()) out.emplace_back(1, c);
    if (m[2].length() > 0) out.push_back(m[2].str());
    for (char c : m[3].str()) out.emplace_back(1, c);
  }
  return out;
}

TEST(TokenizeTest, MatchesRegexSplitterOnSentences) {
  const std::string corpus = GenerateToyCorpus(20000, 3);
  std::vector<std::string> lines;
  std::string line;
  for (char c : corpus) {
    if (c == '\n') {
      lines.push_back(line);
      line.clear();
    } else {
      line += c;
    }
  }
  ASSERT_GE(lines.size(), 1000u);
  std::mt19937_64 rng(1);
  const std::string punct = ".,;:!?\"()";
  for (std::size_t i = 0; i < 1000; ++i) {
    std::string s = lines[i];
    // Glue some punctuation onto words so separation is exercised.
    for (auto& c : s) {
      if (c == ' ' && rng() % 7 == 0) c = punct[rng() % punct.size()];
    }
    EXPECT_EQ(Tokenize(s, false), RegexTokenize(s)) << s;
  }
}

TEST(PosLexiconTest, LookupAndUnknown) {
  const PosLexicon lex = PosLexicon::Parse(ToyPosLexicon());
  EXPECT_EQ(lex.Tag("the"), PosTag::kDet);
  EXPECT_EQ(lex.Tag("zzxqw"), PosTag::kOther);
  EXPECT_EQ(PosTagName(PosTag::kPunct), ".");
  for (PosTag t : kAllPosTags) EXPECT_EQ(ParsePosTag(PosTagName(t)), t);
}

TEST(PosLexiconTest, TagDistributionMatchesFileScan) {
  const auto path = std::filesystem::path(RNNLENS_SOURCE_DIR) / "data" /
                    "pos_lexicon.tsv";
  const PosLexicon lex = PosLexicon::Load(path);
  std::ifstream in(path);
  std::map<std::string, std::string> first;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    first.emplace(line.substr(0, tab), line.substr(tab + 1));
  }
  std::map<std::string, int> expected, actual;
  for (const auto& [w, t] : first) {
    ++expected[t];
    ++actual[std::string(PosTagName(lex.Tag(w)))];
  }
  EXPECT_EQ(lex.size(), first.size());
  EXPECT_EQ(actual, expected);
}

TEST(PosLexiconTest, BadTagNamesLine) {
  try {
    PosLexicon::Parse("the\tDET\ncat\tNOUNISH\n");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LabeledCorpusTest, MalformedLineNamesLine) {
  try {
    ParseLabeledCorpus("good food\t1\nno label here\n", true, false);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  EXPECT_THROW(ParseLabeledCorpus("x\t-1\n", true, false), ParseError);
}

TEST(LabeledCorpusTest, FiveStarMapping) {
  const auto ex = ParseLabeledCorpus("a\t1\nb\t2\nc\t3\nd\t4\ne\t5\n", true, true);
  ASSERT_EQ(ex.size(), 4u);
  EXPECT_EQ(ex[0].label, 0);
  EXPECT_EQ(ex[1].label, 0);
  EXPECT_EQ(ex[2].label, 1);
  EXPECT_EQ(ex[3].label, 1);
  EXPECT_EQ(ex[2].tokens, std::vector<std::string>{"d"});
}

DatasetConfig ToyConfig() {
  DatasetConfig c;
  c.name = "toy";
  c.path = (std::filesystem::path(RNNLENS_SOURCE_DIR) / "data" / "toy_corpus.txt")
               .string();
  c.seed = 5;
  return c;
}

TEST(DatasetTest, SplitsDeterministicAndComplete) {
  const Dataset a = LoadDataset(ToyConfig());
  const Dataset b = LoadDataset(ToyConfig());
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.valid, b.valid);
  EXPECT_EQ(a.test, b.test);
  EXPECT_EQ(a.vocabulary, b.vocabulary);

  const auto raw = ParsePlainCorpus(ReadFile(ToyConfig().path), true, true);
  const std::size_t total = a.train.size() + a.valid.size() + a.test.size();
  EXPECT_EQ(total, raw.size());
  EXPECT_NEAR(static_cast<double>(a.train.size()) / total, 0.8, 0.01);
  EXPECT_NEAR(static_cast<double>(a.valid.size()) / total, 0.1, 0.01);
  for (const auto* split : {&a.train, &a.valid, &a.test}) {
    for (const auto& seq : *split) {
      for (int id : seq) {
        EXPECT_GE(id, 0);
        EXPECT_LT(id, a.vocabulary.size());
      }
    }
  }

  DatasetConfig other = ToyConfig();
  other.seed = 6;
  EXPECT_NE(LoadDataset(other).train, a.train);
}

TEST(DatasetTest, TrainOovRateMatchesCount) {
  DatasetConfig c = ToyConfig();
  c.vocab_size = 50;
  const Dataset d = LoadDataset(c);
  std::int64_t tokens = 0, unk = 0;
  for (const auto& seq : d.train) {
    for (int id : seq) {
      ++tokens;
      unk += id == d.vocabulary.unk_id();
    }
  }
  std::int64_t kept = 0, all = 0;
  for (int id = 0; id < d.vocabulary.size(); ++id) {
    all += d.vocabulary.Count(id);
    if (id != d.vocabulary.unk_id()) kept += d.vocabulary.Count(id);
  }
  EXPECT_EQ(all, tokens);
  EXPECT_EQ(unk, all - kept);
  EXPECT_GT(unk, 0);
}

TEST(DatasetTest, LabeledFilesAndErrors) {
  const auto dir = testing::TempDir("corpus_labeled");
  WriteFileAtomic(dir / "set.tsv", "good food\t1\nbad food\t0\ngood\t1\nbad\t0\n");
  DatasetConfig c;
  c.scheme = Scheme::kSequenceClassification;
  c.path = (dir / "set.tsv").string();
  c.ratios = {0.5, 0.25, 0.25};
  const Dataset d = LoadDataset(c);
  EXPECT_EQ(d.num_classes, 2);
  EXPECT_EQ(d.train.size() + d.valid.size() + d.test.size(), 4u);
  EXPECT_EQ(d.train_labels.size(), d.train.size());
  for (int label : d.train_labels) EXPECT_TRUE(label == 0 || label == 1);

  EXPECT_THROW(DatasetConfig::FromJson(Json{{"scheme", "regression"}}),
               ConfigError);
  EXPECT_THROW(DatasetConfig::FromJson(Json{{"pth", "x"}}), ConfigError);
  c.path = (dir / "missing.tsv").string();
  EXPECT_THROW(LoadDataset(c), Error);
}

}  // namespace
}  // namespace rnnlens
