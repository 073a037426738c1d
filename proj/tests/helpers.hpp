#pragma once

// Shared fixtures: synthetic corpus generators with known ground truth, and
// independent brute-force oracles kept free of the library's implementation
// paths.

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "causalkit/types.hpp"

namespace testkit {

// ---------------------------------------------------------------------------
// Independent tokenization oracle (naive re-implementation for cross-checks)
// ---------------------------------------------------------------------------

inline std::vector<std::string> naive_tokens(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string word;
  while (in >> word) {
    std::size_t b = 0, e = word.size();
    auto is_punct = [](char c) {
      return static_cast<unsigned char>(c) < 0x80 &&
             std::ispunct(static_cast<unsigned char>(c));
    };
    while (b < e && is_punct(word[b])) ++b;
    while (e > b && is_punct(word[e - 1])) --e;
    if (e <= b) continue;
    std::string t = word.substr(b, e - b);
    for (char& c : t) {
      if (static_cast<unsigned char>(c) < 0x80) {
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      }
    }
    out.push_back(t);
  }
  return out;
}

inline std::map<std::string, long long> naive_frequencies(
    const std::vector<std::string>& documents) {
  std::map<std::string, long long> counts;
  for (const auto& doc : documents) {
    for (const auto& t : naive_tokens(doc)) ++counts[t];
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Counting oracle for co-occurrence statistics
// ---------------------------------------------------------------------------

struct CountOracle {
  std::map<std::string, long long> cause, effect;
  std::map<std::pair<std::string, std::string>, long long> joint;
  long long total = 0;

  void add(const std::string& c, const std::string& e, long long n = 1) {
    cause[c] += n;
    effect[e] += n;
    joint[{c, e}] += n;
    total += n;
  }

  double cs_nec(const std::string& c, const std::string& e, double alpha) const {
    auto it = joint.find({c, e});
    if (it == joint.end() || it->second == 0) return 0.0;
    const double n = static_cast<double>(total);
    const double pj = static_cast<double>(it->second) / n;
    const double pc = static_cast<double>(cause.at(c)) / n;
    const double pe = static_cast<double>(effect.at(e)) / n;
    return pj / (std::pow(pc, alpha) * pe);
  }

  double pmi(const std::string& c, const std::string& e) const {
    return std::log(cs_nec(c, e, 1.0));
  }
};

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

struct PlantedPair {
  std::string cause;
  std::string effect;
  int count = 0;
};

struct PlantedCorpus {
  std::vector<std::string> documents;  // one document per line
  std::vector<PlantedPair> word_pairs; // ground truth for the word miner
};

/// Distractor sentences plus hyphenated causal templates planted with known
/// frequencies. Both participle directions appear, including the canonical
/// "virus-caused infection" / "sleep-inducing pills" forms.
inline PlantedCorpus make_planted_corpus(int n_distractors, causalkit::Rng& rng) {
  PlantedCorpus corpus;
  const std::vector<std::string> filler = {
      "the weather report arrived late today",
      "markets opened flat after a quiet week",
      "engineers reviewed the updated blueprint",
      "a committee discussed the new schedule",
      "students practiced scales before class",
      "cancer causing chemicals were not mentioned here",
      "the causing clause has no hyphen in it",
  };
  for (int i = 0; i < n_distractors; ++i) {
    corpus.documents.push_back(filler[rng.index(filler.size())]);
  }
  struct Plant {
    const char* sentence;
    const char* cause;
    const char* effect;
  };
  const std::vector<Plant> plants = {
      {"doctors described the virus-caused infection in detail", "virus", "infection"},
      {"patients bought sleep-inducing pills at the pharmacy", "pills", "sleep"},
      {"the storm-caused outage lasted for hours", "storm", "outage"},
      {"a drought-induced famine spread through the region", "drought", "famine"},
      {"they sold panic-inducing headlines all week", "headlines", "panic"},
      {"the leak-caused damage appeared slowly", "leak", "damage"},
      {"stress-induced headaches kept him home", "stress", "headaches"},
  };
  for (const auto& plant : plants) {
    const int copies = 1 + static_cast<int>(rng.index(4));
    for (int c = 0; c < copies; ++c) {
      corpus.documents.push_back(plant.sentence);
    }
    corpus.word_pairs.push_back({plant.cause, plant.effect, copies});
  }
  rng.shuffle(corpus.documents);
  return corpus;
}

// ---------------------------------------------------------------------------
// Planted causal lexicon (bijection c_k -> e_k)
// ---------------------------------------------------------------------------

struct Lexicon {
  std::vector<std::string> cause_words;   // cause_words[k] maps to effect_words[k]
  std::vector<std::string> effect_words;
  int size() const { return static_cast<int>(cause_words.size()); }
};

inline Lexicon make_lexicon(int n) {
  Lexicon lex;
  for (int k = 0; k < n; ++k) {
    lex.cause_words.push_back("c" + std::to_string(k));
    lex.effect_words.push_back("e" + std::to_string(k));
  }
  return lex;
}

/// Positive pairs: 1-2 cause words and the matching effect words, so the
/// bijection is learnable word-by-word while test combinations stay unseen.
inline std::vector<std::pair<std::string, std::string>> lexicon_positives(
    const Lexicon& lex, int n_pairs, causalkit::Rng& rng) {
  std::vector<std::pair<std::string, std::string>> out;
  for (int i = 0; i < n_pairs; ++i) {
    const int width = rng.bernoulli(0.5) ? 1 : 2;
    std::set<int> ks;
    while (static_cast<int>(ks.size()) < width) {
      ks.insert(static_cast<int>(rng.index(static_cast<std::size_t>(lex.size()))));
    }
    std::string cause, effect;
    for (int k : ks) {
      if (!cause.empty()) cause += ' ';
      if (!effect.empty()) effect += ' ';
      cause += lex.cause_words[static_cast<std::size_t>(k)];
      effect += lex.effect_words[static_cast<std::size_t>(k)];
    }
    out.emplace_back(cause, effect);
  }
  return out;
}

/// Pair-agnostic stage-1 sentences: random word soup over the lexicon
/// vocabulary (no bijection signal).
inline std::vector<std::string> lexicon_lm_corpus(const Lexicon& lex, int n_sentences,
                                                  causalkit::Rng& rng) {
  std::vector<std::string> all;
  all.insert(all.end(), lex.cause_words.begin(), lex.cause_words.end());
  all.insert(all.end(), lex.effect_words.begin(), lex.effect_words.end());
  std::vector<std::string> docs;
  for (int i = 0; i < n_sentences; ++i) {
    std::string line;
    const int len = 4 + static_cast<int>(rng.index(4));
    for (int t = 0; t < len; ++t) {
      if (t) line += ' ';
      line += all[rng.index(all.size())];
    }
    docs.push_back(line);
  }
  return docs;
}

// ---------------------------------------------------------------------------
// Relative error helper for gradient checks
// ---------------------------------------------------------------------------

inline double rel_err(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-6});
  return std::abs(a - b) / scale;
}

}  // namespace testkit
