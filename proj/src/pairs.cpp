#include "causalkit/pairs.hpp"

#include <fstream>

#include "json.hpp"

#include "causalkit/types.hpp"

namespace causalkit {

using ordered_json = nlohmann::ordered_json;

const char* to_string(PairLevel level) {
  switch (level) {
    case PairLevel::word: return "word";
    case PairLevel::phrase: return "phrase";
    case PairLevel::sentence: return "sentence";
  }
  return "word";
}

const char* to_string(PairSource source) {
  switch (source) {
    case PairSource::template_: return "template";
    case PairSource::causalnet: return "causalnet";
    case PairSource::embedding: return "embedding";
    case PairSource::conceptnet: return "conceptnet";
    case PairSource::causalbank: return "causalbank";
    case PairSource::manual: return "manual";
  }
  return "manual";
}

PairLevel pair_level_from_string(const std::string& s) {
  if (s == "word") return PairLevel::word;
  if (s == "phrase") return PairLevel::phrase;
  if (s == "sentence") return PairLevel::sentence;
  throw DataError("unknown pair level: " + s);
}

PairSource pair_source_from_string(const std::string& s) {
  if (s == "template") return PairSource::template_;
  if (s == "causalnet") return PairSource::causalnet;
  if (s == "embedding") return PairSource::embedding;
  if (s == "conceptnet") return PairSource::conceptnet;
  if (s == "causalbank") return PairSource::causalbank;
  if (s == "manual") return PairSource::manual;
  throw DataError("unknown pair source: " + s);
}

void save_pairs(const std::string& path, const std::vector<CausalPair>& pairs,
                const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write pair file: " + path);
  if (!meta_json.empty()) out << meta_json << '\n';
  for (const auto& p : pairs) {
    ordered_json j;
    j["cause"] = p.cause;
    j["effect"] = p.effect;
    j["level"] = to_string(p.level);
    j["source"] = to_string(p.source);
    j["label"] = p.label;
    j["count"] = p.count;
    if (p.weight) j["weight"] = *p.weight;
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing pair file: " + path);
}

std::vector<CausalPair> load_pairs(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read pair file: " + path);
  std::vector<CausalPair> pairs;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": bad JSON: " + e.what());
    }
    if (j.contains("type") && j["type"] == "meta") continue;
    try {
      CausalPair p;
      p.cause = j.at("cause").get<std::string>();
      p.effect = j.at("effect").get<std::string>();
      p.level = pair_level_from_string(j.at("level").get<std::string>());
      p.source = pair_source_from_string(j.at("source").get<std::string>());
      p.label = j.at("label").get<int>();
      p.count = j.value("count", 1LL);
      if (j.contains("weight")) p.weight = j["weight"].get<double>();
      if (p.cause.empty() || p.effect.empty()) {
        throw DataError("empty cause or effect");
      }
      if (p.label != 0 && p.label != 1) throw DataError("label not in {0,1}");
      pairs.push_back(std::move(p));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return pairs;
}

}  // namespace causalkit
