#include "causalkit/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "causalkit/types.hpp"

namespace causalkit {

using ordered_json = nlohmann::ordered_json;

const char* to_string(ExampleOrigin origin) {
  switch (origin) {
    case ExampleOrigin::original: return "original";
    case ExampleOrigin::corrupted_cause: return "corrupted-cause";
    case ExampleOrigin::corrupted_effect: return "corrupted-effect";
  }
  return "original";
}

ExampleOrigin example_origin_from_string(const std::string& s) {
  if (s == "original") return ExampleOrigin::original;
  if (s == "corrupted-cause") return ExampleOrigin::corrupted_cause;
  if (s == "corrupted-effect") return ExampleOrigin::corrupted_effect;
  throw DataError("unknown example origin: " + s);
}

std::vector<LabeledExample> negative_sample(const std::vector<CausalPair>& positives,
                                            const SamplerConfig& config,
                                            SampleStats* stats) {
  if (config.k < 1) throw std::invalid_argument("sampler k must be >= 1");
  std::set<std::pair<std::string, std::string>> known;
  for (const auto& p : positives) known.insert({p.cause, p.effect});
  if (known.size() < 2) {
    throw std::invalid_argument("negative sampling needs >= 2 distinct positives");
  }

  Rng rng(config.seed, /*stream=*/0x5a3f);
  std::vector<LabeledExample> out;
  out.reserve(positives.size() * static_cast<std::size_t>(1 + config.k));
  SampleStats local;

  for (std::size_t i = 0; i < positives.size(); ++i) {
    const auto& pos = positives[i];
    LabeledExample ex;
    ex.cause = pos.cause;
    ex.effect = pos.effect;
    ex.label = 1;
    ex.origin = ExampleOrigin::original;
    out.push_back(ex);
    ++local.positives;

    for (int k = 0; k < config.k; ++k) {
      bool emitted = false;
      for (int attempt = 0; attempt < config.max_resample; ++attempt) {
        const bool corrupt_cause = rng.bernoulli(0.5);
        std::size_t j = rng.index(positives.size());
        while (j == i) j = rng.index(positives.size());
        LabeledExample neg;
        neg.cause = corrupt_cause ? positives[j].cause : pos.cause;
        neg.effect = corrupt_cause ? pos.effect : positives[j].effect;
        if (known.count({neg.cause, neg.effect})) continue;
        neg.label = 0;
        neg.origin = corrupt_cause ? ExampleOrigin::corrupted_cause
                                   : ExampleOrigin::corrupted_effect;
        out.push_back(std::move(neg));
        ++local.negatives;
        emitted = true;
        break;
      }
      if (!emitted) ++local.skipped;
    }
  }
  if (stats) *stats = local;
  return out;
}

std::array<double, 2> class_weights(std::vector<LabeledExample>& examples,
                                    WeightingMode mode) {
  std::array<long long, 2> counts = {0, 0};
  for (const auto& ex : examples) {
    if (ex.label != 0 && ex.label != 1) {
      throw std::invalid_argument("label not in {0,1}");
    }
    ++counts[static_cast<std::size_t>(ex.label)];
  }
  if (counts[0] == 0 || counts[1] == 0) {
    throw std::invalid_argument("class_weights requires both labels present");
  }
  const double total = static_cast<double>(counts[0] + counts[1]);
  std::array<double, 2> w{};
  for (int y = 0; y < 2; ++y) {
    const auto ny = static_cast<double>(counts[static_cast<std::size_t>(y)]);
    w[static_cast<std::size_t>(y)] =
        mode == WeightingMode::balanced ? total / (2.0 * ny) : ny / total;
  }
  for (auto& ex : examples) {
    ex.class_weight = w[static_cast<std::size_t>(ex.label)];
  }
  return w;
}

namespace {

// Group = a positive plus the negatives that follow it in the interleaved
// layout.
std::vector<std::pair<std::size_t, std::size_t>> group_ranges(
    const std::vector<LabeledExample>& examples) {
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  std::size_t start = 0;
  bool open = false;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (examples[i].origin == ExampleOrigin::original) {
      if (open) groups.emplace_back(start, i);
      start = i;
      open = true;
    } else if (!open) {
      throw std::invalid_argument("split input does not start with a positive");
    }
  }
  if (open) groups.emplace_back(start, examples.size());
  return groups;
}

}  // namespace

DatasetSplits split(const std::vector<LabeledExample>& examples,
                    const std::array<double, 3>& fractions, std::uint64_t seed) {
  double sum = 0;
  for (double f : fractions) {
    if (f <= 0) throw std::invalid_argument("split fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) {
    throw std::invalid_argument("split fractions must sum to 1");
  }
  const auto groups = group_ranges(examples);
  if (groups.size() < 3) {
    throw std::invalid_argument("fewer groups than splits");
  }

  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed, /*stream=*/0x9d11);
  rng.shuffle(order);

  // Largest-remainder apportionment of group counts.
  const auto g = static_cast<double>(groups.size());
  std::array<std::size_t, 3> take{};
  std::array<double, 3> frac{};
  std::size_t assigned = 0;
  for (int s = 0; s < 3; ++s) {
    const double exact = fractions[static_cast<std::size_t>(s)] * g;
    take[static_cast<std::size_t>(s)] = static_cast<std::size_t>(exact);
    frac[static_cast<std::size_t>(s)] = exact - std::floor(exact);
    assigned += take[static_cast<std::size_t>(s)];
  }
  while (assigned < groups.size()) {
    int best = 0;
    for (int s = 1; s < 3; ++s) {
      if (frac[static_cast<std::size_t>(s)] > frac[static_cast<std::size_t>(best)]) best = s;
    }
    ++take[static_cast<std::size_t>(best)];
    frac[static_cast<std::size_t>(best)] = -1;
    ++assigned;
  }

  DatasetSplits out;
  std::size_t cursor = 0;
  for (int s = 0; s < 3; ++s) {
    std::vector<std::size_t> mine(order.begin() + static_cast<long>(cursor),
                                  order.begin() + static_cast<long>(cursor + take[static_cast<std::size_t>(s)]));
    cursor += take[static_cast<std::size_t>(s)];
    std::sort(mine.begin(), mine.end());  // keep original group order within a split
    auto& dst = s == 0 ? out.train : s == 1 ? out.dev : out.test;
    for (const std::size_t gi : mine) {
      for (std::size_t i = groups[gi].first; i < groups[gi].second; ++i) {
        dst.push_back(examples[i]);
      }
    }
  }
  return out;
}

void save_examples(const std::string& path, const std::vector<LabeledExample>& examples,
                   const std::string& meta_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write example file: " + path);
  if (!meta_json.empty()) out << meta_json << '\n';
  for (const auto& ex : examples) {
    ordered_json j;
    j["cause"] = ex.cause;
    j["effect"] = ex.effect;
    j["label"] = ex.label;
    j["class_weight"] = ex.class_weight;
    j["origin"] = to_string(ex.origin);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("failed writing example file: " + path);
}

std::vector<LabeledExample> load_examples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read example file: " + path);
  std::vector<LabeledExample> out;
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
      LabeledExample ex;
      ex.cause = j.at("cause").get<std::string>();
      ex.effect = j.at("effect").get<std::string>();
      ex.label = j.at("label").get<int>();
      ex.class_weight = j.value("class_weight", 1.0);
      ex.origin = example_origin_from_string(j.value("origin", std::string("original")));
      if (ex.label != 0 && ex.label != 1) throw DataError("label not in {0,1}");
      if (ex.class_weight <= 0) throw DataError("class_weight must be > 0");
      out.push_back(std::move(ex));
    } catch (const DataError&) {
      throw;
    } catch (const std::exception& e) {
      throw DataError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ingestion adapters
// ---------------------------------------------------------------------------

namespace {

// Minimal RFC-4180 field splitter for two-column rows.
std::vector<std::string> parse_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

std::vector<CausalPair> load_conceptnet_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read csv file: " + path);
  std::vector<CausalPair> out;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = parse_csv_row(line);
    if (fields.size() < 2 || fields[0].empty() || fields[1].empty()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected two non-empty columns");
    }
    CausalPair p;
    p.cause = fields[0];
    p.effect = fields[1];
    p.level = PairLevel::phrase;
    p.source = PairSource::conceptnet;
    p.label = 1;
    out.push_back(std::move(p));
  }
  return out;
}

std::vector<CausalPair> load_causalbank_tsv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read tsv file: " + path);
  std::vector<CausalPair> out;
  std::string line;
  long long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0 || tab + 1 >= line.size()) {
      throw DataError(path + ":" + std::to_string(lineno) +
                      ": expected cause<TAB>effect");
    }
    CausalPair p;
    p.cause = line.substr(0, tab);
    p.effect = line.substr(tab + 1);
    p.level = PairLevel::sentence;
    p.source = PairSource::causalbank;
    p.label = 1;
    out.push_back(std::move(p));
  }
  return out;
}

}  // namespace causalkit
