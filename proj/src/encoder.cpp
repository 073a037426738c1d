#include "causalkit/encoder.hpp"

namespace causalkit {

const char* to_string(Objective o) { return o == Objective::cls ? "cls" : "rank"; }
const char* to_string(Arch a) { return a == Arch::pool ? "pool" : "attn"; }

Objective objective_from_string(const std::string& s) {
  if (s == "cls") return Objective::cls;
  if (s == "rank") return Objective::rank;
  throw ConfigError("unknown objective: " + s);
}

Arch arch_from_string(const std::string& s) {
  if (s == "pool") return Arch::pool;
  if (s == "attn") return Arch::attn;
  throw ConfigError("unknown arch: " + s);
}

std::vector<int> build_pair_ids(const std::string& cause_text,
                                const std::string& effect_text,
                                const Vocab& vocab, int max_len) {
  std::vector<int> cause_ids, effect_ids;
  for (const auto& t : tokenize(cause_text)) cause_ids.push_back(vocab.id(t.surface));
  for (const auto& t : tokenize(effect_text)) effect_ids.push_back(vocab.id(t.surface));
  if (cause_ids.empty() && effect_ids.empty()) {
    throw std::invalid_argument("both pair sides are empty after tokenization");
  }
  if (max_len < 5) throw std::invalid_argument("max_len must be >= 5");

  const auto budget = static_cast<std::size_t>(max_len - 3);
  while (cause_ids.size() + effect_ids.size() > budget) {
    if (cause_ids.empty()) {
      effect_ids.pop_back();
    } else if (effect_ids.empty()) {
      cause_ids.pop_back();
    } else if (effect_ids.size() >= cause_ids.size()) {
      if (effect_ids.size() > 1) {
        effect_ids.pop_back();
      } else {
        cause_ids.pop_back();
      }
    } else {
      if (cause_ids.size() > 1) {
        cause_ids.pop_back();
      } else {
        effect_ids.pop_back();
      }
    }
  }

  std::vector<int> ids;
  ids.reserve(cause_ids.size() + effect_ids.size() + 3);
  ids.push_back(Vocab::kCls);
  ids.insert(ids.end(), cause_ids.begin(), cause_ids.end());
  ids.push_back(Vocab::kSep);
  ids.insert(ids.end(), effect_ids.begin(), effect_ids.end());
  ids.push_back(Vocab::kSep);
  return ids;
}

std::vector<int> build_sentence_ids(const Sentence& sentence, const Vocab& vocab,
                                    int max_len) {
  if (max_len < 3) throw std::invalid_argument("max_len must be >= 3");
  std::vector<int> ids;
  ids.push_back(Vocab::kCls);
  for (const auto& t : sentence.tokens) {
    if (ids.size() + 1 >= static_cast<std::size_t>(max_len)) break;
    ids.push_back(vocab.id(t.surface));
  }
  ids.push_back(Vocab::kSep);
  return ids;
}

std::vector<RankGroup> make_rank_groups(const std::vector<LabeledExample>& examples) {
  std::vector<RankGroup> groups;
  for (const auto& ex : examples) {
    if (ex.origin == ExampleOrigin::original) {
      RankGroup g;
      g.positive = ex;
      groups.push_back(std::move(g));
    } else {
      if (groups.empty()) {
        throw std::invalid_argument("negative example precedes any positive");
      }
      groups.back().negatives.push_back(ex);
    }
  }
  return groups;
}

}  // namespace causalkit
