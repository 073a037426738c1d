#include "causalkit/eval.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "causalkit/corpus.hpp"
#include "causalkit/types.hpp"
#include "causalkit/version.hpp"

namespace causalkit {

using ordered_json = nlohmann::ordered_json;

EvalReport pair_report(const std::vector<double>& predictions,
                       const std::vector<int>& gold_labels, double threshold) {
  if (predictions.empty()) throw std::invalid_argument("pair_report on empty input");
  if (predictions.size() != gold_labels.size()) {
    throw std::invalid_argument("pair_report length mismatch");
  }
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  EvalReport r;
  r.task = "pairs";
  r.has_pr = true;
  r.scores = predictions;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int gold = gold_labels[i];
    if (gold != 0 && gold != 1) throw std::invalid_argument("gold label not in {0,1}");
    const int pred = predictions[i] >= threshold ? 1 : 0;
    r.predictions.push_back(pred);
    if (pred == 1 && gold == 1) ++tp;
    if (pred == 1 && gold == 0) ++fp;
    if (pred == 0 && gold == 1) ++fn;
    if (pred == 0 && gold == 0) ++tn;
  }
  r.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  r.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  r.f1 = r.precision + r.recall > 0
             ? 2 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  r.accuracy = static_cast<double>(tp + tn) / static_cast<double>(predictions.size());
  return r;
}

namespace {

double directed_score(const PairScorer& scorer, const std::string& premise,
                      const std::string& choice, bool choice_is_cause) {
  // The alternative fills the queried role: asks_for=cause puts the choice in
  // the cause slot.
  return choice_is_cause ? scorer(choice, premise) : scorer(premise, choice);
}

}  // namespace

EvalReport two_choice_eval(const std::vector<TwoChoiceItem>& items,
                           const PairScorer& scorer, bool swap_direction) {
  EvalReport r;
  r.task = "two-choice";
  long long correct = 0;
  for (const auto& item : items) {
    bool choice_is_cause = item.asks_for == TwoChoiceItem::AsksFor::cause;
    if (swap_direction) choice_is_cause = !choice_is_cause;
    const double s1 = directed_score(scorer, item.premise, item.choice1, choice_is_cause);
    const double s2 = directed_score(scorer, item.premise, item.choice2, choice_is_cause);
    int pred = 1;
    if (s2 > s1) {
      pred = 2;
    } else if (s2 == s1) {
      ++r.ties;  // ties predict choice1
    }
    r.predictions.push_back(pred);
    if (pred == item.gold) ++correct;
  }
  r.accuracy = items.empty() ? 0.0
                             : static_cast<double>(correct) /
                                   static_cast<double>(items.size());
  return r;
}

EvalReport n_choice_eval(const std::vector<NChoiceItem>& items,
                         const PairScorer& scorer, bool swap_direction) {
  EvalReport r;
  r.task = "n-choice";
  long long correct = 0;
  for (const auto& item : items) {
    if (item.candidates.size() < 2) {
      throw std::invalid_argument("n-choice item needs >= 2 candidates");
    }
    bool answer_is_cause = item.direction == NChoiceItem::Direction::answer_is_cause;
    if (swap_direction) answer_is_cause = !answer_is_cause;
    int best = 0;
    double best_score = 0;
    bool tied = false;
    for (std::size_t c = 0; c < item.candidates.size(); ++c) {
      const double s =
          directed_score(scorer, item.question, item.candidates[c], answer_is_cause);
      if (c == 0 || s > best_score) {
        best = static_cast<int>(c);
        best_score = s;
        tied = false;
      } else if (s == best_score) {
        tied = true;  // lower index retained
      }
    }
    if (tied) ++r.ties;
    r.predictions.push_back(best);
    if (best == item.gold) ++correct;
  }
  r.accuracy = items.empty() ? 0.0
                             : static_cast<double>(correct) /
                                   static_cast<double>(items.size());
  return r;
}

PairScorer phrase_pmi_scorer(const CausalNetwork& net) {
  return [&net](const std::string& cause_text, const std::string& effect_text) {
    double sum = 0;
    long long observed = 0;
    for (const auto& ct : tokenize(cause_text)) {
      for (const auto& et : tokenize(effect_text)) {
        if (net.n_joint(ct.surface, et.surface) > 0) {
          sum += net.pmi(ct.surface, et.surface);
          ++observed;
        }
      }
    }
    return observed > 0 ? sum / static_cast<double>(observed) : 0.0;
  };
}

PairScorer phrase_csnec_scorer(const CausalNetwork& net, const StrengthConfig& config) {
  return [&net, config](const std::string& cause_text, const std::string& effect_text) {
    double sum = 0;
    long long observed = 0;
    for (const auto& ct : tokenize(cause_text)) {
      for (const auto& et : tokenize(effect_text)) {
        if (net.n_joint(ct.surface, et.surface) > 0) {
          sum += net.cs_nec(ct.surface, et.surface, config);
          ++observed;
        }
      }
    }
    return observed > 0 ? sum / static_cast<double>(observed) : 0.0;
  };
}

// ---------------------------------------------------------------------------
// Task files
// ---------------------------------------------------------------------------

std::vector<TwoChoiceItem> load_two_choice(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read two-choice file: " + path);
  std::vector<TwoChoiceItem> items;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    if (j.contains("type") && j["type"] == "meta") continue;
    try {
      TwoChoiceItem item;
      item.premise = j.at("premise").get<std::string>();
      item.choice1 = j.at("choice1").get<std::string>();
      item.choice2 = j.at("choice2").get<std::string>();
      const std::string asks = j.at("asks_for").get<std::string>();
      if (asks == "cause") {
        item.asks_for = TwoChoiceItem::AsksFor::cause;
      } else if (asks == "effect") {
        item.asks_for = TwoChoiceItem::AsksFor::effect;
      } else {
        throw DataError("asks_for must be cause or effect");
      }
      item.gold = j.at("gold").get<int>();
      if (item.gold != 1 && item.gold != 2) throw DataError("gold must be 1 or 2");
      if (item.choice1 == item.choice2) throw DataError("choices must be distinct");
      items.push_back(std::move(item));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

void save_two_choice(const std::string& path, const std::vector<TwoChoiceItem>& items,
                     const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write two-choice file: " + path);
  if (!meta_json.empty()) out << meta_json << '\n';
  for (const auto& item : items) {
    ordered_json j;
    j["premise"] = item.premise;
    j["choice1"] = item.choice1;
    j["choice2"] = item.choice2;
    j["asks_for"] = item.asks_for == TwoChoiceItem::AsksFor::cause ? "cause" : "effect";
    j["gold"] = item.gold;
    out << j.dump() << '\n';
  }
}

std::vector<NChoiceItem> load_n_choice(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read n-choice file: " + path);
  std::vector<NChoiceItem> items;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad JSON: " + e.what());
    }
    if (j.contains("type") && j["type"] == "meta") continue;
    try {
      NChoiceItem item;
      item.question = j.at("question").get<std::string>();
      item.candidates = j.at("candidates").get<std::vector<std::string>>();
      item.gold = j.at("gold").get<int>();
      const std::string dir = j.at("direction").get<std::string>();
      if (dir == "answer-is-cause") {
        item.direction = NChoiceItem::Direction::answer_is_cause;
      } else if (dir == "answer-is-effect") {
        item.direction = NChoiceItem::Direction::answer_is_effect;
      } else {
        throw DataError("direction must be answer-is-cause or answer-is-effect");
      }
      if (item.candidates.size() < 2) throw DataError("need >= 2 candidates");
      if (item.gold < 0 || item.gold >= static_cast<int>(item.candidates.size())) {
        throw DataError("gold index out of range");
      }
      items.push_back(std::move(item));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return items;
}

void save_n_choice(const std::string& path, const std::vector<NChoiceItem>& items,
                   const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write n-choice file: " + path);
  if (!meta_json.empty()) out << meta_json << '\n';
  for (const auto& item : items) {
    ordered_json j;
    j["question"] = item.question;
    j["candidates"] = item.candidates;
    j["gold"] = item.gold;
    j["direction"] = item.direction == NChoiceItem::Direction::answer_is_cause
                         ? "answer-is-cause"
                         : "answer-is-effect";
    out << j.dump() << '\n';
  }
}

namespace {

std::string xml_attr(const std::string& tag, const std::string& name) {
  const auto key = name + "=\"";
  const auto pos = tag.find(key);
  if (pos == std::string::npos) return "";
  const auto end = tag.find('"', pos + key.size());
  if (end == std::string::npos) return "";
  return tag.substr(pos + key.size(), end - pos - key.size());
}

std::string xml_element(const std::string& body, const std::string& name,
                        std::size_t& cursor) {
  const auto open = body.find("<" + name + ">", cursor);
  if (open == std::string::npos) return "";
  const auto start = open + name.size() + 2;
  const auto close = body.find("</" + name + ">", start);
  if (close == std::string::npos) return "";
  cursor = close + name.size() + 3;
  return body.substr(start, close - start);
}

std::string xml_unescape(std::string s) {
  const std::pair<const char*, const char*> reps[] = {
      {"&lt;", "<"}, {"&gt;", ">"}, {"&quot;", "\""}, {"&apos;", "'"}, {"&amp;", "&"}};
  for (const auto& [from, to] : reps) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
      s.replace(pos, std::strlen(from), to);
      pos += std::strlen(to);
    }
  }
  return s;
}

}  // namespace

std::vector<TwoChoiceItem> parse_copa_xml(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read COPA xml: " + path);
  std::string body((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  std::vector<TwoChoiceItem> items;
  std::size_t cursor = 0;
  while (true) {
    const auto open = body.find("<item ", cursor);
    if (open == std::string::npos) break;
    const auto tag_end = body.find('>', open);
    if (tag_end == std::string::npos) {
      throw DataError(path + ": unterminated <item> tag");
    }
    const std::string tag = body.substr(open, tag_end - open + 1);
    const auto item_close = body.find("</item>", tag_end);
    if (item_close == std::string::npos) {
      throw DataError(path + ": unterminated item element");
    }
    std::size_t inner = tag_end + 1;
    TwoChoiceItem item;
    const std::string asks = xml_attr(tag, "asks-for");
    if (asks == "cause") {
      item.asks_for = TwoChoiceItem::AsksFor::cause;
    } else if (asks == "effect") {
      item.asks_for = TwoChoiceItem::AsksFor::effect;
    } else {
      throw DataError(path + ": item missing asks-for attribute");
    }
    const std::string gold = xml_attr(tag, "most-plausible-alternative");
    if (gold != "1" && gold != "2") {
      throw DataError(path + ": item missing most-plausible-alternative");
    }
    item.gold = gold == "1" ? 1 : 2;
    item.premise = xml_unescape(xml_element(body, "p", inner));
    item.choice1 = xml_unescape(xml_element(body, "a1", inner));
    item.choice2 = xml_unescape(xml_element(body, "a2", inner));
    if (item.premise.empty() || item.choice1.empty() || item.choice2.empty()) {
      throw DataError(path + ": item missing p/a1/a2 elements");
    }
    items.push_back(std::move(item));
    cursor = item_close + 7;
  }
  return items;
}

void save_report(const std::string& path, const EvalReport& report) {
  ordered_json j;
  j["task"] = report.task;
  j["tool_version"] = kToolVersion;
  j["zero_shot"] = report.zero_shot;
  ordered_json metrics;
  if (report.has_pr) {
    metrics["precision"] = report.precision;
    metrics["recall"] = report.recall;
    metrics["f1"] = report.f1;
  }
  metrics["accuracy"] = report.accuracy;
  j["metrics"] = metrics;
  j["ties"] = report.ties;
  if (!report.config_echo.empty()) {
    j["config"] = ordered_json::parse(report.config_echo);
  }
  ordered_json examples = ordered_json::array();
  for (std::size_t i = 0; i < report.predictions.size(); ++i) {
    ordered_json e;
    e["index"] = i;
    e["prediction"] = report.predictions[i];
    if (i < report.scores.size()) e["score"] = report.scores[i];
    examples.push_back(e);
  }
  j["examples"] = examples;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + path);
  out << j.dump(2) << '\n';
  if (!out) throw DataError("failed writing report: " + path);
}

}  // namespace causalkit
