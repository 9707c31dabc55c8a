#include "rnnlens/fixtures.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "rnnlens/error.h"

namespace rnnlens {

double FixtureRng::Uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

int FixtureRng::Between(int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

std::size_t FixtureRng::Weighted(const std::vector<double>& weights) {
  double total = 0.0;
  for (double w : weights) total += w;
  double target = Uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    target -= weights[i];
    if (target < 0.0) return i;
  }
  return weights.size() - 1;
}

namespace {

template <typename T>
void Shuffle(std::vector<T>& items, FixtureRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.Between(0, static_cast<int>(i) - 1)]);
  }
}

// ---------------------------------------------------------------------------
// Toy newswire grammar.

struct WordList {
  PosTag tag;
  std::vector<std::string> words;
  std::vector<double> weights;  // Zipf-like by position

  WordList(PosTag t, std::vector<std::string> w) : tag(t), words(std::move(w)) {
    for (std::size_t i = 0; i < words.size(); ++i) {
      weights.push_back(1.0 / std::pow(static_cast<double>(i + 1), 0.9));
    }
  }
  const std::string& Pick(FixtureRng& rng) const {
    return words[rng.Weighted(weights)];
  }
};

struct Grammar {
  WordList det{PosTag::kDet,
               {"the", "a", "its", "their", "this", "some", "each", "no"}};
  WordList noun_sg{
      PosTag::kNoun,
      {"company", "market", "year",     "stock",    "price",     "bank",
       "group",   "quarter", "unit",    "government", "firm",    "plan",
       "offer",   "business", "industry", "week",   "deal",      "board",
       "chairman", "president", "analyst", "index",  "fund",     "rate",
       "profit",  "loss",    "issue",   "report",   "agreement", "contract",
       "program", "debt",    "dollar",  "economy",  "state",     "court",
       "judge",   "bill",    "tax",     "system",   "product",   "service",
       "computer", "plant",  "division", "subsidiary", "exchange", "month",
       "value",   "yield",   "demand",  "period",   "bid",       "merger",
       "venture", "spokesman", "executive", "partner", "network"}};
  WordList noun_pl{
      PosTag::kNoun,
      {"shares",   "investors", "prices",   "sales",     "earnings",
       "securities", "stocks",  "bonds",    "rates",     "officials",
       "analysts", "traders",   "employees", "workers",  "customers",
       "markets",  "banks",     "companies", "funds",    "profits",
       "losses",   "assets",    "costs",    "products",  "operations",
       "orders",   "notes",     "futures",  "options",   "contracts",
       "dollars",  "points",    "years",    "months",    "executives"}};
  WordList name{PosTag::kNoun,
                {"ibm", "ford", "sony", "boeing", "chrysler", "exxon",
                 "texaco", "honda", "nissan", "apple", "intel", "motorola",
                 "citicorp", "toyota", "xerox", "digital", "kodak", "pepsico"}};
  WordList adj{
      PosTag::kAdj,
      {"new",      "common",   "big",       "major",    "federal",
       "financial", "net",     "recent",    "other",    "first",
       "annual",   "current",  "average",   "foreign",  "national",
       "high",     "low",      "strong",    "weak",     "large",
       "small",    "early",    "public",    "private",  "total",
       "former",   "chief",    "senior",    "additional", "corporate",
       "industrial", "economic", "political", "domestic", "international",
       "preferred", "quarterly", "previous", "similar",  "modest"}};
  WordList verb_trans{
      PosTag::kVerb,
      {"acquired", "bought",  "sold",     "offered",   "posted",
       "raised",   "cut",     "increased", "reduced",  "approved",
       "rejected", "completed", "received", "issued",  "filed",
       "lost",     "expanded", "launched", "signed",   "reached",
       "owns",     "has",     "makes",    "needs",     "controls"}};
  WordList verb_say{PosTag::kVerb,
                    {"said", "announced", "noted", "added", "reported",
                     "indicated", "disclosed", "estimated", "believes",
                     "expects"}};
  WordList verb_plan{PosTag::kVerb,
                     {"planned", "agreed", "decided", "wants", "expects",
                      "tried", "intends", "hopes", "plans", "needs"}};
  WordList verb_base{
      PosTag::kVerb,
      {"offer", "buy",    "sell",     "acquire",   "raise",  "cut",
       "increase", "reduce", "issue",  "pay",      "build",  "expand",
       "close", "open",   "hire",     "purchase",  "boost",  "complete",
       "redeem", "finance", "restructure", "sign", "make",  "seek"}};
  WordList verb_intr{
      PosTag::kVerb,
      {"rose",   "fell",    "climbed", "declined", "dropped", "slipped",
       "jumped", "surged",  "gained",  "eased",    "edged",   "plunged",
       "soared", "advanced", "tumbled", "rallied"}};
  WordList prep{PosTag::kAdp,
                {"of", "in", "for", "on", "with", "at", "by", "from", "about",
                 "after", "over", "under", "into", "during", "against"}};
  WordList adv{PosTag::kAdv,
               {"also", "still", "recently", "sharply", "only", "already",
                "nearly", "slightly", "significantly", "currently",
                "previously", "yesterday", "today", "later", "again"}};
  WordList pron{PosTag::kPron, {"it", "they", "he", "she", "we"}};
  WordList num{PosTag::kNum,
               {"10", "2", "5", "1", "3", "20", "15", "50", "25", "100",
                "1.5", "2.5", "4", "8", "30"}};
  WordList scale{PosTag::kNum, {"million", "billion"}};
  WordList conj{PosTag::kConj, {"and", "but", "or"}};
  WordList aux{PosTag::kVerb, {"will", "would", "could", "may", "might"}};
  WordList copula{PosTag::kVerb, {"was", "is", "were", "are"}};

  // Words emitted outside the lists above.
  std::vector<std::pair<std::string, PosTag>> extras{
      {"to", PosTag::kPrt},      {"that", PosTag::kAdp},
      {"percent", PosTag::kNoun}, {"number", PosTag::kNoun},
      {"not", PosTag::kPrt},     {"up", PosTag::kPrt},
      {".", PosTag::kPunct},     {",", PosTag::kPunct}};

  std::vector<const WordList*> Lists() const {
    return {&det,  &noun_sg, &noun_pl, &name, &adj,  &verb_trans,
            &verb_say, &verb_plan, &verb_base, &verb_intr, &prep, &adv,
            &pron, &num,  &scale, &conj, &aux, &copula};
  }
};

class SentenceWriter {
 public:
  SentenceWriter(const Grammar& g, FixtureRng& rng) : g_(g), rng_(rng) {}

  std::vector<std::string> Sentence() {
    out_.clear();
    const double r = rng_.Uniform();
    if (r < 0.35) {
      Subject();
      VerbPhrase();
    } else if (r < 0.60) {
      Subject();
      Emit(g_.verb_say);
      if (rng_.Uniform() < 0.2) out_.push_back("that");
      if (rng_.Uniform() < 0.5) {
        out_.push_back("it");
      } else {
        Subject();
      }
      VerbPhrase();
    } else if (r < 0.75) {
      Subject();
      VerbPhrase();
      out_.push_back(",");
      Emit(g_.conj);
      Subject();
      VerbPhrase();
    } else if (r < 0.88) {
      Subject();
      VerbPhrase();
      out_.push_back(",");
      if (rng_.Uniform() < 0.5) {
        Emit(g_.noun_pl);
      } else {
        NounPhrase(1);
      }
      Emit(g_.verb_say);
    } else {
      // Share offering announcements.
      Subject();
      out_.push_back("said");
      out_.push_back("it");
      Emit(g_.verb_plan);
      out_.push_back("to");
      out_.push_back(rng_.Uniform() < 0.6 ? "offer" : g_.verb_base.Pick(rng_));
      out_.push_back("a");
      out_.push_back("number");
      out_.push_back("of");
      if (rng_.Uniform() < 0.6) out_.push_back("common");
      out_.push_back("shares");
      if (rng_.Uniform() < 0.7) {
        out_.push_back("in");
        out_.push_back("exchange");
        out_.push_back("for");
        NounPhrase(1);
      }
    }
    out_.push_back(".");
    return out_;
  }

 private:
  void Emit(const WordList& list) { out_.push_back(list.Pick(rng_)); }

  void NounPhrase(int depth) {
    const double r = rng_.Uniform();
    if (r < 0.45) {
      Emit(g_.det);
      if (rng_.Uniform() < 0.35) Emit(g_.adj);
      Emit(g_.noun_sg);
    } else if (r < 0.65) {
      if (rng_.Uniform() < 0.5) out_.push_back("the");
      if (rng_.Uniform() < 0.35) Emit(g_.adj);
      Emit(g_.noun_pl);
    } else if (r < 0.80) {
      Emit(g_.name);
    } else if (r < 0.90) {
      out_.push_back("a");
      out_.push_back("number");
      out_.push_back("of");
      if (rng_.Uniform() < 0.4) Emit(g_.adj);
      Emit(g_.noun_pl);
    } else {
      Emit(g_.num);
      if (rng_.Uniform() < 0.6) Emit(g_.scale);
      Emit(g_.noun_pl);
    }
    if (depth == 0 && rng_.Uniform() < 0.3) {
      Emit(g_.prep);
      NounPhrase(1);
    }
  }

  void Subject() {
    if (rng_.Uniform() < 0.2) {
      Emit(g_.pron);
    } else {
      NounPhrase(0);
    }
  }

  void Amount() {
    Emit(g_.num);
    out_.push_back("percent");
    if (rng_.Uniform() < 0.4) {
      out_.push_back("to");
      Emit(g_.num);
      if (rng_.Uniform() < 0.5) Emit(g_.scale);
      out_.push_back("dollars");
    }
  }

  void VerbPhrase() {
    const double r = rng_.Uniform();
    if (r < 0.30) {
      if (rng_.Uniform() < 0.15) Emit(g_.adv);
      Emit(g_.verb_trans);
      NounPhrase(0);
    } else if (r < 0.48) {
      Emit(g_.verb_plan);
      out_.push_back("to");
      Emit(g_.verb_base);
      NounPhrase(0);
    } else if (r < 0.68) {
      Emit(g_.verb_intr);
      Amount();
      if (rng_.Uniform() < 0.3) {
        Emit(g_.prep);
        NounPhrase(1);
      }
    } else if (r < 0.80) {
      Emit(g_.aux);
      if (rng_.Uniform() < 0.15) out_.push_back("not");
      Emit(g_.verb_base);
      NounPhrase(0);
    } else if (r < 0.90) {
      Emit(g_.copula);
      if (rng_.Uniform() < 0.3) Emit(g_.adv);
      Emit(g_.adj);
    } else {
      Emit(g_.verb_intr);
      if (rng_.Uniform() < 0.4) out_.push_back("up");
      Emit(g_.adv);
    }
  }

  const Grammar& g_;
  FixtureRng& rng_;
  std::vector<std::string> out_;
};

}  // namespace

std::string GenerateToyCorpus(int min_tokens, std::uint64_t seed) {
  if (min_tokens < 1) throw InvalidArgument("min_tokens must be >= 1");
  const Grammar grammar;
  FixtureRng rng(seed);
  SentenceWriter writer(grammar, rng);
  std::string text;
  int produced = 0;
  while (produced < min_tokens) {
    const auto words = writer.Sentence();
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (i > 0) text += ' ';
      text += words[i];
    }
    text += '\n';
    produced += static_cast<int>(words.size());
  }
  return text;
}

std::string ToyPosLexicon() {
  const Grammar grammar;
  // First tag wins for words that appear in several lists.
  std::vector<std::pair<std::string, PosTag>> entries;
  std::set<std::string> seen;
  for (const WordList* list : grammar.Lists()) {
    for (const auto& w : list->words) {
      if (seen.insert(w).second) entries.emplace_back(w, list->tag);
    }
  }
  for (const auto& [w, tag] : grammar.extras) {
    if (seen.insert(w).second) entries.emplace_back(w, tag);
  }
  std::sort(entries.begin(), entries.end());
  std::string out = "# word\ttag\n";
  for (const auto& [w, tag] : entries) {
    out += w;
    out += '\t';
    out += PosTagName(tag);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Synthetic sentiment.

SentimentSpec DefaultSentimentSpec(double class_ratio, std::uint64_t seed) {
  SentimentSpec spec;
  spec.positive = {"great",   "delicious", "friendly", "amazing",
                   "excellent", "fresh",   "perfect",  "tasty",
                   "wonderful", "awesome", "lovely",   "fantastic"};
  spec.negative = {"terrible", "rude",   "bland",  "awful",
                   "horrible", "dirty",  "stale",  "greasy",
                   "soggy",    "overpriced", "disgusting", "mediocre"};
  spec.filler = {
      "the",     "food",    "was",     "service", "and",     "we",
      "ordered", "place",   "i",       "staff",   "our",     "table",
      "a",       "restaurant", "pizza", "burger", "waiter",  "dinner",
      "lunch",   "menu",    "they",    "it",      "to",      "of",
      "had",     "with",    "for",     "my",      "wife",    "friends",
      "came",    "here",    "there",   "very",    "really",  "this",
      "is",      "at",      "night",   "drinks",  "dessert", "salad",
      "chicken", "fries",   "price",   "wait",    "time",    "served",
      "portions", "kitchen", "bar",    "music",   "parking", "coffee",
      "breakfast", "sauce", "steak",   "pasta",   "soup",    "room",
      "went",    "back",    "visit",   "plate",   "in",      "on",
      "so",      "but",     "too",     "also",    "just",    "quite"};
  spec.lukewarm = {"okay",  "average", "fine",   "decent",      "ordinary",
                   "slow",  "pricey",  "plain",  "forgettable", "alright"};
  spec.class_ratio = class_ratio;
  spec.seed = seed;
  return spec;
}

std::vector<RawExample> GenerateSentiment(const SentimentSpec& spec) {
  if (spec.positive.empty() || spec.negative.empty() || spec.filler.empty()) {
    throw InvalidArgument("sentiment keyword and filler sets must be non-empty");
  }
  if (spec.min_length < 3 || spec.max_length < spec.min_length) {
    throw InvalidArgument("sentiment lengths must satisfy 3 <= min <= max");
  }
  if (!(spec.class_ratio > 0.0) || spec.count < 2) {
    throw InvalidArgument("class ratio must be positive and count >= 2");
  }
  for (double rate : {spec.negative_lukewarm_rate, spec.positive_lukewarm_rate}) {
    if (!(rate >= 0.0 && rate <= 1.0)) {
      throw InvalidArgument("lukewarm rates must lie in [0, 1]");
    }
  }
  const int positives = static_cast<int>(
      std::lround(spec.count * spec.class_ratio / (spec.class_ratio + 1.0)));
  FixtureRng rng(spec.seed);
  auto pick = [&](const std::vector<std::string>& words) {
    return words[rng.Between(0, static_cast<int>(words.size()) - 1)];
  };

  std::vector<RawExample> out;
  out.reserve(static_cast<std::size_t>(spec.count));
  for (int n = 0; n < spec.count; ++n) {
    const bool positive = n < positives;
    const int length = rng.Between(spec.min_length, spec.max_length);
    std::vector<std::string> keywords;
    const double lukewarm_rate = positive ? spec.positive_lukewarm_rate
                                          : spec.negative_lukewarm_rate;
    if (!spec.lukewarm.empty() && rng.Uniform() < lukewarm_rate) {
      const int count = rng.Between(1, 2);
      for (int i = 0; i < count; ++i) keywords.push_back(pick(spec.lukewarm));
    } else if (positive) {
      const int count = rng.Between(1, 2);
      for (int i = 0; i < count; ++i) keywords.push_back(pick(spec.positive));
    } else {
      keywords.push_back(pick(spec.negative));
      if (rng.Uniform() < 0.5) keywords.push_back(pick(spec.positive));
    }
    RawExample ex;
    ex.label = positive ? 1 : 0;
    for (int i = 0; i < length; ++i) ex.tokens.push_back(pick(spec.filler));
    // Distinct random positions for the keywords.
    std::vector<int> slots(static_cast<std::size_t>(length));
    for (int i = 0; i < length; ++i) slots[i] = i;
    Shuffle(slots, rng);
    for (std::size_t i = 0; i < keywords.size(); ++i) {
      ex.tokens[slots[i]] = keywords[i];
    }
    out.push_back(std::move(ex));
  }
  Shuffle(out, rng);
  return out;
}

std::string FormatLabeledCorpus(const std::vector<RawExample>& examples) {
  std::string out;
  for (const auto& ex : examples) {
    for (std::size_t i = 0; i < ex.tokens.size(); ++i) {
      if (i > 0) out += ' ';
      out += ex.tokens[i];
    }
    out += '\t';
    out += std::to_string(ex.label);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------

PlantedBipartite GeneratePlantedBipartite(int rows, int cols, int blocks,
                                          double noise, std::uint64_t seed) {
  if (blocks < 1 || blocks > rows || blocks > cols) {
    throw InvalidArgument("blocks must be in [1, min(rows, cols)]");
  }
  if (noise < 0.0) throw InvalidArgument("noise must be >= 0");
  PlantedBipartite p;
  p.row_labels.resize(static_cast<std::size_t>(rows));
  p.col_labels.resize(static_cast<std::size_t>(cols));
  for (int i = 0; i < rows; ++i) p.row_labels[i] = i * blocks / rows;
  for (int j = 0; j < cols; ++j) p.col_labels[j] = j * blocks / cols;
  FixtureRng rng(seed);
  p.weights.resize(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      const double base = p.row_labels[i] == p.col_labels[j] ? 1.0 : 0.0;
      p.weights(i, j) = base + noise * rng.Uniform();
    }
  }
  return p;
}

}  // namespace rnnlens
