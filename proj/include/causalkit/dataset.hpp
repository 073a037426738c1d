#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "causalkit/pairs.hpp"

namespace causalkit {

enum class ExampleOrigin { original, corrupted_cause, corrupted_effect };

const char* to_string(ExampleOrigin origin);
ExampleOrigin example_origin_from_string(const std::string& s);

struct LabeledExample {
  std::string cause;
  std::string effect;
  int label = 1;  // 1 iff origin == original
  double class_weight = 1.0;
  ExampleOrigin origin = ExampleOrigin::original;
};

struct SamplerConfig {
  int k = 2;              // negatives per positive
  std::uint64_t seed = 42;
  int max_resample = 20;  // rejection attempts per negative
};

struct SampleStats {
  long long positives = 0;
  long long negatives = 0;
  long long skipped = 0;  // negatives abandoned after max_resample rejections
};

/// Corrupt each positive K times: a fair coin picks the side, the replacement
/// comes from that field of a uniformly chosen other positive, and candidates
/// that recreate any known positive pair are rejected and resampled. Output
/// interleaves each positive with its negatives (the group layout split()
/// relies on). Requires at least 2 distinct positives.
std::vector<LabeledExample> negative_sample(const std::vector<CausalPair>& positives,
                                            const SamplerConfig& config,
                                            SampleStats* stats = nullptr);

enum class WeightingMode {
  balanced,   // w_y = N_total / (n_labels * N_y)
  frequency,  // w_y = N_y / N_total (the literal reading; upweights majority)
};

/// Per-label weights, also written into each example's class_weight field.
/// Index by label. Errors when a label class is empty.
std::array<double, 2> class_weights(std::vector<LabeledExample>& examples,
                                    WeightingMode mode = WeightingMode::balanced);

struct DatasetSplits {
  std::vector<LabeledExample> train;
  std::vector<LabeledExample> dev;
  std::vector<LabeledExample> test;
};

/// Group-wise split: each positive travels with the negatives derived from it
/// (groups are reconstructed from the interleaved layout: a group starts at
/// every origin=original example). Fractions must be positive and sum to 1.
DatasetSplits split(const std::vector<LabeledExample>& examples,
                    const std::array<double, 3>& fractions, std::uint64_t seed);

/// JSON-lines {"cause","effect","label","class_weight","origin"} with an
/// optional meta first line.
void save_examples(const std::string& path, const std::vector<LabeledExample>& examples,
                   const std::string& meta_json = "");
std::vector<LabeledExample> load_examples(const std::string& path);

// ---------------------------------------------------------------------------
// Ingestion adapters
// ---------------------------------------------------------------------------

/// ConceptNet Causes-relation CSV: two phrase columns (quoting per RFC 4180),
/// mapped to positive phrase-level pairs.
std::vector<CausalPair> load_conceptnet_csv(const std::string& path);

/// CausalBank-style TSV: cause<TAB>effect per line, positive sentence-level
/// pairs.
std::vector<CausalPair> load_causalbank_tsv(const std::string& path);

}  // namespace causalkit
