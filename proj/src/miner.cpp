#include "causalkit/miner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "causalkit/types.hpp"

namespace causalkit {

namespace {

bool is_alphabetic(const std::string& s) {
  if (s.empty()) return false;
  for (unsigned char c : s) {
    if (c >= 0x80) continue;
    if (c < 'a' || c > 'z') return false;
  }
  return true;
}

}  // namespace

MinerConfig::MinerConfig() : stopwords(default_stopwords()) {}

const std::set<std::string>& default_stopwords() {
  static const std::set<std::string> words = {
      "the", "a",    "an",   "of",   "to",    "in",    "and",  "or",
      "but", "if",   "then", "than", "that",  "this",  "these", "those",
      "is",  "are",  "was",  "were", "be",    "been",  "being", "it",
      "its", "he",   "she",  "they", "them",  "his",   "her",  "their",
      "we",  "you",  "i",    "me",   "my",    "your",  "our",  "us",
      "as",  "at",   "by",   "for",  "from",  "on",    "with", "not",
      "no",  "so"};
  return words;
}

std::vector<PatternSpec> default_patterns() {
  using Side = PatternSpec::Side;
  // Multi-word triggers listed before their single-word prefixes.
  return {
      {"because of", Side::right}, {"because", Side::right},
      {"due to", Side::right},     {"caused by", Side::right},
      {"as a result", Side::left}, {"leads to", Side::left},
      {"results in", Side::left},  {"therefore", Side::left},
  };
}

std::vector<PatternSpec> load_patterns(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read pattern file: " + path);
  std::vector<PatternSpec> out;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected trigger<TAB>cause_side");
    }
    PatternSpec p;
    p.trigger = line.substr(0, tab);
    const std::string side = line.substr(tab + 1);
    if (side == "left") {
      p.cause_side = PatternSpec::Side::left;
    } else if (side == "right") {
      p.cause_side = PatternSpec::Side::right;
    } else {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": cause_side must be left or right, got " + side);
    }
    if (p.trigger.empty()) {
      throw DataError(path + ":" + std::to_string(lineno) + ": empty trigger");
    }
    out.push_back(std::move(p));
  }
  return out;
}

void save_patterns(const std::string& path, const std::vector<PatternSpec>& patterns) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pattern file: " + path);
  for (const auto& p : patterns) {
    out << p.trigger << '\t'
        << (p.cause_side == PatternSpec::Side::left ? "left" : "right") << '\n';
  }
}

std::set<std::string> load_stopwords(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read stopword file: " + path);
  std::set<std::string> out;
  std::string line;
  while (std::getline(in, line)) {
    for (const auto& tok : tokenize(line)) out.insert(tok.surface);
  }
  return out;
}

std::vector<CausalPair> mine_word_pairs(const Sentence& sentence,
                                        const MinerConfig& config) {
  std::vector<CausalPair> out;
  const auto& toks = sentence.tokens;
  for (std::size_t i = 0; i < toks.size(); ++i) {
    if (!toks[i].has_internal_hyphen) continue;
    const std::string& surf = toks[i].surface;
    const auto hy = surf.rfind('-');
    if (hy == std::string::npos || hy == 0 || hy + 1 >= surf.size()) continue;
    const std::string head = surf.substr(0, hy);
    const std::string verb = surf.substr(hy + 1);

    const bool past = std::find(config.past_triggers.begin(),
                                config.past_triggers.end(),
                                verb) != config.past_triggers.end();
    const bool present = !past && std::find(config.present_triggers.begin(),
                                            config.present_triggers.end(),
                                            verb) != config.present_triggers.end();
    if (!past && !present) continue;

    // Collect up to max_phrase_tokens following content tokens.
    std::string following;
    int taken = 0;
    for (std::size_t j = i + 1; j < toks.size() && taken < config.max_phrase_tokens; ++j) {
      const std::string& next = toks[j].surface;
      if (!is_alphabetic(next) || config.stopwords.count(next)) break;
      if (taken) following += ' ';
      following += next;
      ++taken;
    }
    if (following.empty()) continue;

    CausalPair p;
    p.level = PairLevel::word;
    p.source = PairSource::template_;
    p.label = 1;
    if (past) {
      p.cause = head;       // "virus-caused infection": virus -> infection
      p.effect = following;
    } else {
      p.cause = following;  // "sleep-inducing pills": pills -> sleep
      p.effect = head;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CausalPair> mine_sentence_pairs(const Sentence& sentence,
                                            const std::vector<PatternSpec>& patterns) {
  std::vector<CausalPair> out;
  const auto& toks = sentence.tokens;
  for (const auto& pat : patterns) {
    const auto trigger = tokenize(pat.trigger);
    if (trigger.empty() || trigger.size() > toks.size()) continue;
    for (std::size_t i = 0; i + trigger.size() <= toks.size(); ++i) {
      bool match = true;
      for (std::size_t k = 0; k < trigger.size(); ++k) {
        if (toks[i + k].surface != trigger[k].surface) { match = false; break; }
      }
      if (!match) continue;

      Sentence left, right;
      left.tokens.assign(toks.begin(), toks.begin() + static_cast<long>(i));
      right.tokens.assign(toks.begin() + static_cast<long>(i + trigger.size()),
                          toks.end());
      if (left.tokens.empty() || right.tokens.empty()) return out;

      CausalPair p;
      p.level = PairLevel::sentence;
      p.source = PairSource::template_;
      p.label = 1;
      if (pat.cause_side == PatternSpec::Side::right) {
        p.cause = right.text();
        p.effect = left.text();
      } else {
        p.cause = left.text();
        p.effect = right.text();
      }
      out.push_back(std::move(p));
      return out;  // first matching trigger only
    }
  }
  return out;
}

namespace {

using PairCounts = std::map<std::pair<std::string, std::string>, long long>;

struct ChunkResult {
  PairCounts counts;
  long long sentences = 0;
  long long occurrences = 0;
};

ChunkResult mine_chunk(const std::vector<std::string>& docs, std::size_t begin,
                       std::size_t end, MineMode mode, const MinerConfig& config,
                       const std::vector<PatternSpec>& patterns) {
  ChunkResult r;
  for (std::size_t d = begin; d < end; ++d) {
    for (const auto& sent : split_sentences(docs[d])) {
      ++r.sentences;
      const auto pairs = mode == MineMode::word
                             ? mine_word_pairs(sent, config)
                             : mine_sentence_pairs(sent, patterns);
      for (const auto& p : pairs) {
        ++r.occurrences;
        ++r.counts[{p.cause, p.effect}];
      }
    }
  }
  return r;
}

}  // namespace

MineSummary mine_corpus(const std::string& corpus_path, MineMode mode,
                        std::vector<CausalPair>& out_pairs,
                        const MinerConfig& config,
                        const std::vector<PatternSpec>& patterns, int threads) {
  const auto docs = read_documents(corpus_path);
  if (threads < 1) threads = 1;
  const std::size_t n = docs.size();
  const std::size_t nchunks =
      std::min<std::size_t>(static_cast<std::size_t>(threads), std::max<std::size_t>(n, 1));

  std::vector<ChunkResult> results(nchunks);
  if (nchunks <= 1) {
    results[0] = mine_chunk(docs, 0, n, mode, config, patterns);
  } else {
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < nchunks; ++c) {
      const std::size_t b = n * c / nchunks;
      const std::size_t e = n * (c + 1) / nchunks;
      workers.emplace_back([&, c, b, e] {
        results[c] = mine_chunk(docs, b, e, mode, config, patterns);
      });
    }
    for (auto& w : workers) w.join();
  }

  // Commutative merge: integer count addition is order-independent.
  MineSummary summary;
  summary.documents = static_cast<long long>(n);
  PairCounts merged;
  for (const auto& r : results) {
    summary.sentences += r.sentences;
    summary.occurrences += r.occurrences;
    for (const auto& [key, cnt] : r.counts) merged[key] += cnt;
  }

  out_pairs.clear();
  out_pairs.reserve(merged.size());
  for (const auto& [key, cnt] : merged) {
    CausalPair p;
    p.cause = key.first;
    p.effect = key.second;
    p.level = mode == MineMode::word ? PairLevel::word : PairLevel::sentence;
    p.source = PairSource::template_;
    p.label = 1;
    p.count = cnt;
    out_pairs.push_back(std::move(p));
  }
  std::sort(out_pairs.begin(), out_pairs.end(),
            [](const CausalPair& a, const CausalPair& b) {
              if (a.count != b.count) return a.count > b.count;
              if (a.cause != b.cause) return a.cause < b.cause;
              return a.effect < b.effect;
            });
  summary.distinct_pairs = static_cast<long long>(out_pairs.size());
  return summary;
}

}  // namespace causalkit
