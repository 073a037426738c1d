#pragma once

#include <functional>
#include <string>
#include <vector>

#include "causalkit/causalnet.hpp"

namespace causalkit {

/// Any (cause_text, effect_text) -> score function: encoder heads, PMI or
/// CS_nec aggregates, oracles in tests.
using PairScorer = std::function<double(const std::string&, const std::string&)>;

struct TwoChoiceItem {
  std::string premise;
  std::string choice1;
  std::string choice2;
  enum class AsksFor { cause, effect } asks_for = AsksFor::effect;
  int gold = 1;  // 1 or 2
};

struct NChoiceItem {
  std::string question;
  std::vector<std::string> candidates;
  int gold = 0;  // 0-based index
  enum class Direction { answer_is_cause, answer_is_effect } direction =
      Direction::answer_is_effect;
};

struct EvalReport {
  std::string task;
  double precision = 0, recall = 0, f1 = 0, accuracy = 0;
  bool has_pr = false;  // pair tasks carry P/R/F1; choice tasks accuracy only
  long long ties = 0;
  std::vector<int> predictions;        // predicted label / choice index
  std::vector<double> scores;          // pair task: raw score per example
  std::string config_echo;             // effective config JSON
  bool zero_shot = false;
};

/// Positive-class precision/recall/F1 and overall accuracy at the given
/// threshold (prediction is positive when score >= threshold).
EvalReport pair_report(const std::vector<double>& predictions,
                       const std::vector<int>& gold_labels, double threshold = 0.5);

/// COPA-style evaluation. asks_for=effect scores f(premise, choice_i);
/// asks_for=cause scores f(choice_i, premise); swap_direction flips that
/// convention. Exact ties predict choice1 and increment the tie counter.
EvalReport two_choice_eval(const std::vector<TwoChoiceItem>& items,
                           const PairScorer& scorer, bool swap_direction = false);

/// Argmax over all candidates; ties resolve to the lowest index.
EvalReport n_choice_eval(const std::vector<NChoiceItem>& items,
                         const PairScorer& scorer, bool swap_direction = false);

/// Mean PMI over cross token pairs with observed joint counts; 0 when none
/// observed.
PairScorer phrase_pmi_scorer(const CausalNetwork& net);

/// Same aggregation over CS_nec.
PairScorer phrase_csnec_scorer(const CausalNetwork& net,
                               const StrengthConfig& config = StrengthConfig());

// ---------------------------------------------------------------------------
// Task files
// ---------------------------------------------------------------------------

/// JSON-lines {"premise","choice1","choice2","asks_for","gold"}.
std::vector<TwoChoiceItem> load_two_choice(const std::string& path);
void save_two_choice(const std::string& path, const std::vector<TwoChoiceItem>& items,
                     const std::string& meta_json = "");

/// JSON-lines {"question","candidates":[...],"gold","direction"}.
std::vector<NChoiceItem> load_n_choice(const std::string& path);
void save_n_choice(const std::string& path, const std::vector<NChoiceItem>& items,
                   const std::string& meta_json = "");

/// Convert the original COPA XML corpus into two-choice JSON lines.
std::vector<TwoChoiceItem> parse_copa_xml(const std::string& path);

/// Report JSON with metrics, tie count, per-example records, and the
/// effective config.
void save_report(const std::string& path, const EvalReport& report);

}  // namespace causalkit
