#pragma once

#include <set>
#include <string>
#include <vector>

#include "causalkit/corpus.hpp"
#include "causalkit/pairs.hpp"

namespace causalkit {

/// One sentence-level connective pattern. cause_side names which span of the
/// split sentence holds the cause.
struct PatternSpec {
  std::string trigger;               // connective text, possibly multi-word
  enum class Side { left, right } cause_side = Side::right;
};

struct MinerConfig {
  // Hyphenated participle triggers. Past participles put the cause before
  // the hyphen ("virus-caused infection"); present participles put it after
  // ("sleep-inducing pills").
  std::vector<std::string> past_triggers = {"caused", "induced"};
  std::vector<std::string> present_triggers = {"causing", "inducing"};
  std::set<std::string> stopwords;   // empty -> default_stopwords()
  int max_phrase_tokens = 1;         // up to 3 following content tokens

  MinerConfig();
};

/// The bundled 50-entry function-word list.
const std::set<std::string>& default_stopwords();

/// The bundled sentence-level connective patterns, in priority order.
std::vector<PatternSpec> default_patterns();

/// Pattern file: one `trigger<TAB>cause_side` per line, priority = file order.
std::vector<PatternSpec> load_patterns(const std::string& path);
void save_patterns(const std::string& path, const std::vector<PatternSpec>& patterns);

std::set<std::string> load_stopwords(const std::string& path);

/// Word-level template mining over one tokenized sentence.
std::vector<CausalPair> mine_word_pairs(const Sentence& sentence,
                                        const MinerConfig& config = MinerConfig());

/// Sentence-level connective mining: the first pattern (in list order) whose
/// trigger occurs in the sentence splits it into cause/effect spans. Empty
/// spans suppress emission.
std::vector<CausalPair> mine_sentence_pairs(const Sentence& sentence,
                                            const std::vector<PatternSpec>& patterns);

enum class MineMode { word, sentence };

struct MineSummary {
  long long documents = 0;
  long long sentences = 0;
  long long occurrences = 0;  // pair emissions before dedup
  long long distinct_pairs = 0;
};

/// Mine a corpus (file or directory, one document per line) into deduplicated
/// pairs with occurrence counts. Output order: descending count, then
/// lexicographic (cause, effect). Thread-count invariant.
MineSummary mine_corpus(const std::string& corpus_path, MineMode mode,
                        std::vector<CausalPair>& out_pairs,
                        const MinerConfig& config = MinerConfig(),
                        const std::vector<PatternSpec>& patterns = default_patterns(),
                        int threads = 1);

}  // namespace causalkit
