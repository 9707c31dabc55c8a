#include "rnnlens/corpus.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <charconv>
#include <map>
#include <random>

#include "rnnlens/error.h"

namespace rnnlens {

// ---------------------------------------------------------------------------
// Vocabulary

Vocabulary Vocabulary::Build(
    const std::vector<std::vector<std::string>>& sequences, int size_limit) {
  if (size_limit < 2) {
    throw InvalidArgument("vocabulary size limit must be at least 2");
  }
  std::map<std::string, std::int64_t> freq;
  std::int64_t total = 0;
  for (const auto& seq : sequences) {
    for (const auto& tok : seq) {
      ++freq[tok];
      ++total;
    }
  }
  if (total == 0) throw InvalidArgument("empty corpus");

  std::int64_t unk_count = 0;
  std::vector<std::pair<std::string, std::int64_t>> ranked;
  ranked.reserve(freq.size());
  for (auto& [tok, count] : freq) {
    if (tok == kUnknown) {
      unk_count += count;
    } else {
      ranked.emplace_back(tok, count);
    }
  }
  // std::map iteration is already lexicographic, so a stable sort by count
  // gives the tie rule for free.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) {
                     return a.second > b.second;
                   });
  const std::size_t keep =
      std::min(ranked.size(), static_cast<std::size_t>(size_limit - 1));

  Vocabulary vocab;
  vocab.size_limit_ = size_limit;
  for (std::size_t i = 0; i < keep; ++i) {
    vocab.tokens_.push_back(ranked[i].first);
    vocab.counts_.push_back(ranked[i].second);
  }
  for (std::size_t i = keep; i < ranked.size(); ++i) {
    unk_count += ranked[i].second;
  }
  vocab.tokens_.emplace_back(kUnknown);
  vocab.counts_.push_back(unk_count);
  vocab.Reindex();
  return vocab;
}

Vocabulary Vocabulary::FromTokens(std::vector<std::string> tokens,
                                  std::vector<std::int64_t> counts,
                                  int size_limit) {
  if (tokens.size() != counts.size()) {
    throw InvalidArgument("vocabulary tokens/counts length mismatch");
  }
  Vocabulary vocab;
  vocab.tokens_ = std::move(tokens);
  vocab.counts_ = std::move(counts);
  vocab.size_limit_ = size_limit;
  vocab.Reindex();
  if (vocab.tokens_.empty() || vocab.Token(vocab.unk_id_) != kUnknown) {
    throw InvalidArgument("vocabulary has no <unk> token");
  }
  return vocab;
}

void Vocabulary::Reindex() {
  index_.clear();
  unk_id_ = -1;
  for (int i = 0; i < size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) {
      throw InvalidArgument("duplicate vocabulary token: " + tokens_[i]);
    }
    if (tokens_[i] == kUnknown) unk_id_ = i;
  }
  if (unk_id_ < 0) unk_id_ = 0;
}

int Vocabulary::Id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? unk_id_ : it->second;
}

std::optional<int> Vocabulary::Find(std::string_view word) const {
  auto it = index_.find(std::string(word));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

const std::string& Vocabulary::Token(int id) const {
  if (id < 0 || id >= size()) {
    throw InvalidArgument("token id out of range: " + std::to_string(id));
  }
  return tokens_[id];
}

std::int64_t Vocabulary::Count(int id) const {
  if (id < 0 || id >= size()) {
    throw InvalidArgument("token id out of range: " + std::to_string(id));
  }
  return counts_[id];
}

TokenSequence Vocabulary::Encode(const std::vector<std::string>& words) const {
  TokenSequence ids;
  ids.reserve(words.size());
  for (const auto& w : words) ids.push_back(Id(w));
  return ids;
}

Json Vocabulary::ToJson() const {
  return Json{{"tokens", tokens_},
              {"counts", counts_},
              {"unk_id", unk_id_},
              {"size_limit", size_limit_}};
}

Vocabulary Vocabulary::FromJson(const Json& j) {
  return FromTokens(j.at("tokens").get<std::vector<std::string>>(),
                    j.at("counts").get<std::vector<std::int64_t>>(),
                    j.at("size_limit").get<int>());
}

// ---------------------------------------------------------------------------
// Tokenizer

namespace {

bool IsSplitPunct(char c) {
  switch (c) {
    case '.':
    case ',':
    case ';':
    case ':':
    case '!':
    case '?':
    case '"':
    case '(':
    case ')':
      return true;
    default:
      return false;
  }
}

bool IsSpace(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

}  // namespace

std::vector<std::string> Tokenize(std::string_view text, bool lowercase) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < text.size()) {
    while (pos < text.size() && IsSpace(text[pos])) ++pos;
    std::size_t end = pos;
    while (end < text.size() && !IsSpace(text[end])) ++end;
    if (end == pos) break;
    std::string_view word = text.substr(pos, end - pos);
    pos = end;

    std::size_t lead = 0;
    while (lead < word.size() && IsSplitPunct(word[lead])) ++lead;
    std::size_t trail = word.size();
    while (trail > lead && IsSplitPunct(word[trail - 1])) --trail;

    for (std::size_t i = 0; i < lead; ++i) out.emplace_back(1, word[i]);
    if (trail > lead) {
      std::string core(word.substr(lead, trail - lead));
      if (lowercase) {
        for (char& c : core) {
          c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
      }
      out.push_back(std::move(core));
    }
    for (std::size_t i = trail; i < word.size(); ++i) {
      out.emplace_back(1, word[i]);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// POS lexicon

namespace {

constexpr std::array<std::string_view, 12> kPosNames = {
    "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET",
    "ADP",  "NUM",  "CONJ", "PRT", ".",   "X"};

std::string_view TrimLine(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) {
    line.remove_suffix(1);
  }
  return line;
}

template <typename Fn>
void ForEachLine(std::string_view text, Fn&& fn) {
  std::size_t start = 0;
  int line_no = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    ++line_no;
    fn(TrimLine(text.substr(start, nl - start)), line_no);
    if (nl == text.size()) break;
    start = nl + 1;
  }
}

}  // namespace

std::string_view PosTagName(PosTag tag) {
  return kPosNames[static_cast<std::size_t>(tag)];
}

std::optional<PosTag> ParsePosTag(std::string_view name) {
  for (std::size_t i = 0; i < kPosNames.size(); ++i) {
    if (kPosNames[i] == name) return static_cast<PosTag>(i);
  }
  return std::nullopt;
}

PosLexicon PosLexicon::Parse(std::string_view tsv) {
  PosLexicon lex;
  ForEachLine(tsv, [&](std::string_view line, int line_no) {
    if (line.empty() || line.front() == '#') return;
    std::size_t tab = line.find('\t');
    if (tab == std::string_view::npos || tab == 0) {
      throw ParseError("lexicon line " + std::to_string(line_no) +
                       ": expected word<TAB>TAG");
    }
    auto tag = ParsePosTag(line.substr(tab + 1));
    if (!tag) {
      throw ParseError("lexicon line " + std::to_string(line_no) +
                       ": unknown tag '" + std::string(line.substr(tab + 1)) +
                       "'");
    }
    lex.Add(std::string(line.substr(0, tab)), *tag);
  });
  return lex;
}

PosLexicon PosLexicon::Load(const std::filesystem::path& path) {
  return Parse(ReadFile(path));
}

PosTag PosLexicon::Tag(std::string_view word) const {
  auto it = entries_.find(std::string(word));
  return it == entries_.end() ? PosTag::kOther : it->second;
}

// ---------------------------------------------------------------------------
// Datasets

std::string_view SchemeName(Scheme scheme) {
  return scheme == Scheme::kLanguageModel ? "language_model"
                                          : "sequence_classification";
}

Scheme ParseScheme(std::string_view name) {
  if (name == "language_model") return Scheme::kLanguageModel;
  if (name == "sequence_classification") {
    return Scheme::kSequenceClassification;
  }
  throw ConfigError("unknown scheme '" + std::string(name) + "'");
}

Json DatasetConfig::ToJson() const {
  Json j{{"name", name},
         {"scheme", SchemeName(scheme)},
         {"vocab_size", vocab_size},
         {"lowercase", lowercase},
         {"split_ratios", {ratios.train, ratios.valid, ratios.test}},
         {"shuffle", shuffle},
         {"seed", seed},
         {"append_eos", append_eos},
         {"five_star", five_star},
         {"max_length", max_length}};
  if (!path.empty()) j["path"] = path;
  if (!train_path.empty()) j["train_path"] = train_path;
  if (!valid_path.empty()) j["valid_path"] = valid_path;
  if (!test_path.empty()) j["test_path"] = test_path;
  return j;
}

DatasetConfig DatasetConfig::FromJson(const Json& j,
                                      const std::filesystem::path& base_dir) {
  constexpr std::string_view kCtx = "dataset";
  RequireKnownKeys(j,
                   {"name", "scheme", "path", "train_path", "valid_path",
                    "test_path", "vocab_size", "lowercase", "split_ratios",
                    "shuffle", "seed", "append_eos", "five_star",
                    "max_length"},
                   kCtx);
  DatasetConfig c;
  c.name = GetOr<std::string>(j, "name", c.name, kCtx);
  if (!j.contains("scheme")) {
    throw ConfigError("config key 'dataset.scheme' is required");
  }
  c.scheme = ParseScheme(GetOr<std::string>(j, "scheme", "", kCtx));
  auto resolve = [&](const std::string& key) -> std::string {
    std::string p = GetOr<std::string>(j, key, "", kCtx);
    if (p.empty()) return p;
    std::filesystem::path fp(p);
    if (fp.is_relative() && !base_dir.empty()) fp = base_dir / fp;
    return fp.lexically_normal().string();
  };
  c.path = resolve("path");
  c.train_path = resolve("train_path");
  c.valid_path = resolve("valid_path");
  c.test_path = resolve("test_path");
  c.vocab_size = GetOr<int>(j, "vocab_size", c.vocab_size, kCtx);
  c.lowercase = GetOr<bool>(j, "lowercase", c.lowercase, kCtx);
  if (j.contains("split_ratios")) {
    auto r = GetOr<std::vector<double>>(j, "split_ratios", {}, kCtx);
    if (r.size() != 3) {
      throw ConfigError("config key 'dataset.split_ratios' needs 3 values");
    }
    c.ratios = {r[0], r[1], r[2]};
  }
  c.shuffle = GetOr<bool>(j, "shuffle", c.shuffle, kCtx);
  c.seed = GetOr<std::uint64_t>(j, "seed", c.seed, kCtx);
  c.append_eos = GetOr<bool>(j, "append_eos", c.append_eos, kCtx);
  c.five_star = GetOr<bool>(j, "five_star", c.five_star, kCtx);
  c.max_length = GetOr<int>(j, "max_length", c.max_length, kCtx);

  const bool single = !c.path.empty();
  const bool triple = !c.train_path.empty() || !c.valid_path.empty() ||
                      !c.test_path.empty();
  if (single == triple) {
    throw ConfigError(
        "dataset needs either 'path' or all of 'train_path', 'valid_path', "
        "'test_path'");
  }
  if (triple && (c.train_path.empty() || c.valid_path.empty() ||
                 c.test_path.empty())) {
    throw ConfigError(
        "dataset needs all of 'train_path', 'valid_path', 'test_path'");
  }
  if (c.vocab_size < 2) {
    throw ConfigError("config key 'dataset.vocab_size' must be >= 2");
  }
  const double sum = c.ratios.train + c.ratios.valid + c.ratios.test;
  if (c.ratios.train <= 0 || c.ratios.valid < 0 || c.ratios.test < 0 ||
      std::abs(sum - 1.0) > 1e-9) {
    throw ConfigError(
        "config key 'dataset.split_ratios' must be non-negative and sum to 1");
  }
  return c;
}

const std::vector<TokenSequence>& Dataset::Split(std::string_view name) const {
  if (name == "train") return train;
  if (name == "valid") return valid;
  if (name == "test") return test;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

const std::vector<int>& Dataset::Labels(std::string_view name) const {
  if (name == "train") return train_labels;
  if (name == "valid") return valid_labels;
  if (name == "test") return test_labels;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

std::vector<RawExample> ParsePlainCorpus(std::string_view text,
                                         bool lowercase, bool append_eos) {
  std::vector<RawExample> out;
  ForEachLine(text, [&](std::string_view line, int) {
    auto tokens = Tokenize(line, lowercase);
    if (tokens.empty()) return;
    if (append_eos) tokens.emplace_back(kEndOfSentence);
    out.push_back({std::move(tokens), -1});
  });
  return out;
}

std::vector<RawExample> ParseLabeledCorpus(std::string_view text,
                                           bool lowercase, bool five_star) {
  std::vector<RawExample> out;
  ForEachLine(text, [&](std::string_view line, int line_no) {
    if (line.empty()) return;
    std::size_t tab = line.rfind('\t');
    auto fail = [&](const std::string& why) {
      throw ParseError("line " + std::to_string(line_no) + ": " + why);
    };
    if (tab == std::string_view::npos) fail("expected text<TAB>label");
    std::string_view label_text = line.substr(tab + 1);
    int label = -1;
    auto [ptr, ec] = std::from_chars(
        label_text.data(), label_text.data() + label_text.size(), label);
    if (ec != std::errc() || ptr != label_text.data() + label_text.size() ||
        label < 0) {
      fail("label '" + std::string(label_text) +
           "' is not a non-negative integer");
    }
    if (five_star) {
      if (label < 1 || label > 5) fail("star rating must be 1-5");
      if (label == 3) return;
      label = label >= 4 ? 1 : 0;
    }
    auto tokens = Tokenize(line.substr(0, tab), lowercase);
    if (tokens.empty()) fail("empty text");
    out.push_back({std::move(tokens), label});
  });
  return out;
}

Dataset MakeDataset(const DatasetConfig& config, std::vector<RawExample> train,
                    std::vector<RawExample> valid,
                    std::vector<RawExample> test) {
  const bool labeled = config.scheme == Scheme::kSequenceClassification;
  auto length_ok = [&](const RawExample& ex) {
    return config.max_length <= 0 ||
           static_cast<int>(ex.tokens.size()) <= config.max_length;
  };
  for (auto* split : {&train, &valid, &test}) {
    std::erase_if(*split, [&](const RawExample& ex) { return !length_ok(ex); });
  }

  std::vector<std::vector<std::string>> train_tokens;
  train_tokens.reserve(train.size());
  for (const auto& ex : train) train_tokens.push_back(ex.tokens);

  Dataset ds;
  ds.name = config.name;
  ds.scheme = config.scheme;
  ds.vocabulary = Vocabulary::Build(train_tokens, config.vocab_size);

  int max_label = -1;
  auto encode = [&](const std::vector<RawExample>& src,
                    std::vector<TokenSequence>& seqs,
                    std::vector<int>& labels) {
    for (const auto& ex : src) {
      seqs.push_back(ds.vocabulary.Encode(ex.tokens));
      if (labeled) {
        if (ex.label < 0) {
          throw InvalidArgument("classification example without a label");
        }
        labels.push_back(ex.label);
        max_label = std::max(max_label, ex.label);
      }
    }
  };
  encode(train, ds.train, ds.train_labels);
  encode(valid, ds.valid, ds.valid_labels);
  encode(test, ds.test, ds.test_labels);
  ds.num_classes = labeled ? std::max(2, max_label + 1) : ds.vocabulary.size();
  return ds;
}

Dataset MakeDataset(const DatasetConfig& config,
                    std::vector<RawExample> examples) {
  if (config.shuffle) {
    std::mt19937_64 rng(config.seed);
    std::shuffle(examples.begin(), examples.end(), rng);
  }
  const std::size_t n = examples.size();
  const auto n_train = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * config.ratios.train + 1e-9));
  const auto n_valid = std::min(
      n - n_train, static_cast<std::size_t>(std::floor(
                       static_cast<double>(n) * config.ratios.valid + 1e-9)));
  auto begin = std::make_move_iterator(examples.begin());
  std::vector<RawExample> train(begin, begin + n_train);
  std::vector<RawExample> valid(begin + n_train, begin + n_train + n_valid);
  std::vector<RawExample> test(begin + n_train + n_valid,
                               std::make_move_iterator(examples.end()));
  return MakeDataset(config, std::move(train), std::move(valid),
                     std::move(test));
}

Dataset LoadDataset(const DatasetConfig& config) {
  auto parse = [&](const std::string& path) {
    std::string text = ReadFile(path);
    if (config.scheme == Scheme::kLanguageModel) {
      return ParsePlainCorpus(text, config.lowercase, config.append_eos);
    }
    return ParseLabeledCorpus(text, config.lowercase, config.five_star);
  };
  if (!config.path.empty()) return MakeDataset(config, parse(config.path));
  return MakeDataset(config, parse(config.train_path),
                     parse(config.valid_path), parse(config.test_path));
}

}  // namespace rnnlens
