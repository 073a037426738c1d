#pragma once

#include <optional>
#include <string>
#include <vector>

namespace causalkit {

enum class PairLevel { word, phrase, sentence };
enum class PairSource { template_, causalnet, embedding, conceptnet, causalbank, manual };

const char* to_string(PairLevel level);
const char* to_string(PairSource source);
PairLevel pair_level_from_string(const std::string& s);
PairSource pair_source_from_string(const std::string& s);

/// A directed cause-effect pair.
struct CausalPair {
  std::string cause;
  std::string effect;
  PairLevel level = PairLevel::word;
  PairSource source = PairSource::template_;
  int label = 1;
  std::optional<double> weight;  // if present, > 0 is not enforced for scores
  long long count = 1;
};

/// JSON-lines pair file: one object per pair
///   {"cause","effect","level","source","label","count"[,"weight"]}
/// An optional leading meta object ({"type":"meta",...}) carries the tool
/// version and effective config; readers skip it.
void save_pairs(const std::string& path, const std::vector<CausalPair>& pairs,
                const std::string& meta_json = "");

std::vector<CausalPair> load_pairs(const std::string& path);

}  // namespace causalkit
