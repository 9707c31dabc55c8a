#ifndef RNNLENS_CORPUS_H_
#define RNNLENS_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "rnnlens/io_util.h"

namespace rnnlens {

using TokenSequence = std::vector<int>;

// Bounded word vocabulary with dense ids. Regular words are ordered by
// descending corpus frequency (ties lexicographic); `<unk>` takes the last id.
class Vocabulary {
 public:
  static constexpr std::string_view kUnknown = "<unk>";

  Vocabulary() = default;

  // Keeps the (size_limit - 1) most frequent tokens plus `<unk>`. A literal
  // "<unk>" in the corpus is counted towards the unknown token.
  static Vocabulary Build(const std::vector<std::vector<std::string>>& sequences,
                          int size_limit);

  // Rebuilds a vocabulary from stored tokens/counts (checkpoint loading).
  static Vocabulary FromTokens(std::vector<std::string> tokens,
                               std::vector<std::int64_t> counts, int size_limit);

  int size() const { return static_cast<int>(tokens_.size()); }
  int unk_id() const { return unk_id_; }
  int size_limit() const { return size_limit_; }

  // Id of `word`, or unk_id() if absent.
  int Id(std::string_view word) const;
  std::optional<int> Find(std::string_view word) const;
  const std::string& Token(int id) const;
  std::int64_t Count(int id) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::int64_t>& counts() const { return counts_; }

  TokenSequence Encode(const std::vector<std::string>& words) const;

  Json ToJson() const;
  static Vocabulary FromJson(const Json& j);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_ &&
           size_limit_ == other.size_limit_;
  }

 private:
  void Reindex();

  std::vector<std::string> tokens_;
  std::vector<std::int64_t> counts_;
  std::unordered_map<std::string, int> index_;
  int unk_id_ = 0;
  int size_limit_ = 0;
};

// Whitespace split plus separation of leading/trailing . , ; : ! ? " ( )
// into standalone tokens.
std::vector<std::string> Tokenize(std::string_view text, bool lowercase);

// The 12-tag universal part-of-speech set.
enum class PosTag {
  kNoun,
  kVerb,
  kAdj,
  kAdv,
  kPron,
  kDet,
  kAdp,
  kNum,
  kConj,
  kPrt,
  kPunct,
  kOther,
};

inline constexpr std::array<PosTag, 12> kAllPosTags = {
    PosTag::kNoun, PosTag::kVerb, PosTag::kAdj,  PosTag::kAdv,
    PosTag::kPron, PosTag::kDet,  PosTag::kAdp,  PosTag::kNum,
    PosTag::kConj, PosTag::kPrt,  PosTag::kPunct, PosTag::kOther};

std::string_view PosTagName(PosTag tag);
std::optional<PosTag> ParsePosTag(std::string_view name);

// Most-frequent-tag lexicon; unknown words are tagged X.
class PosLexicon {
 public:
  PosLexicon() = default;

  // Parses `word<TAB>TAG` lines. Blank lines and lines starting with '#'
  // are skipped. Bad tags raise ParseError with the line number.
  static PosLexicon Parse(std::string_view tsv);
  static PosLexicon Load(const std::filesystem::path& path);

  void Add(std::string word, PosTag tag) { entries_[std::move(word)] = tag; }
  PosTag Tag(std::string_view word) const;
  std::size_t size() const { return entries_.size(); }
  const std::unordered_map<std::string, PosTag>& entries() const {
    return entries_;
  }

 private:
  std::unordered_map<std::string, PosTag> entries_;
};

enum class Scheme { kLanguageModel, kSequenceClassification };

std::string_view SchemeName(Scheme scheme);
Scheme ParseScheme(std::string_view name);

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

// Where a dataset comes from and how it is cut up. Either `path` (one file,
// split by ratios) or all three of train/valid/test_path must be set.
struct DatasetConfig {
  std::string name = "dataset";
  Scheme scheme = Scheme::kLanguageModel;
  std::string path;
  std::string train_path;
  std::string valid_path;
  std::string test_path;
  int vocab_size = 10000;
  bool lowercase = true;
  SplitRatios ratios;
  bool shuffle = true;
  std::uint64_t seed = 0;
  // Appends an end-of-sentence token to each line (language models only).
  bool append_eos = true;
  // Maps 1-2 stars to 0 (negative), 4-5 to 1 (positive) and drops 3.
  bool five_star = false;
  // Drops sequences longer than this many tokens (0 = unlimited).
  int max_length = 0;

  Json ToJson() const;
  // Strict: unknown keys are a ConfigError. Relative paths are resolved
  // against `base_dir`.
  static DatasetConfig FromJson(const Json& j,
                                const std::filesystem::path& base_dir = {});
};

struct Dataset {
  std::string name;
  Scheme scheme = Scheme::kLanguageModel;
  std::vector<TokenSequence> train;
  std::vector<TokenSequence> valid;
  std::vector<TokenSequence> test;
  // Parallel to the splits above; empty for language models.
  std::vector<int> train_labels;
  std::vector<int> valid_labels;
  std::vector<int> test_labels;
  int num_classes = 0;
  Vocabulary vocabulary;

  const std::vector<TokenSequence>& Split(std::string_view name) const;
  const std::vector<int>& Labels(std::string_view name) const;
};

inline constexpr std::string_view kEndOfSentence = "<eos>";

// A labeled or unlabeled raw example before vocabulary lookup.
struct RawExample {
  std::vector<std::string> tokens;
  int label = -1;
};

// Reads a plain-text corpus (one sequence per line).
std::vector<RawExample> ParsePlainCorpus(std::string_view text,
                                         bool lowercase, bool append_eos);

// Reads `text<TAB>label` lines. Malformed lines raise ParseError naming the
// line number. With `five_star`, labels are remapped and 3-star lines dropped.
std::vector<RawExample> ParseLabeledCorpus(std::string_view text,
                                           bool lowercase, bool five_star);

// Builds the dataset: split, vocabulary on the train split, encoding.
Dataset MakeDataset(const DatasetConfig& config, std::vector<RawExample> train,
                    std::vector<RawExample> valid,
                    std::vector<RawExample> test);

// Splits `examples` by the configured ratios (after an optional seeded
// shuffle) and then calls MakeDataset.
Dataset MakeDataset(const DatasetConfig& config,
                    std::vector<RawExample> examples);

Dataset LoadDataset(const DatasetConfig& config);

}  // namespace rnnlens

#endif  // RNNLENS_CORPUS_H_
