#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "causalkit/causalnet.hpp"
#include "causalkit/dataset.hpp"
#include "causalkit/embed.hpp"
#include "causalkit/encoder.hpp"
#include "causalkit/miner.hpp"

namespace causalkit {

/// The merged view of all module knobs, with every field defaulted. The
/// effective config is echoed into every output artifact; threads and log
/// format are execution environment, not semantics, and stay out of the echo.
struct RunConfig {
  std::uint64_t seed = 42;
  int threads = 0;  // 0 -> machine parallelism

  // causalnet
  double alpha = 0.66;

  // corpus
  int min_count = 1;

  // miner
  int phrase_tokens = 1;

  // embed
  int embed_dim = 100;
  int embed_epochs = 11;
  double embed_margin = 1.0;
  int embed_negatives = 1;
  double embed_lr = 0.05;
  int embed_topk = 0;
  double harvest_threshold = 0.0;

  // dataset
  int k = 2;
  int max_resample = 20;
  WeightingMode weighting = WeightingMode::balanced;
  double split_train = 0.6;
  double split_dev = 0.2;
  double split_test = 0.2;

  // encoder / training
  TrainConfig train;

  // eval
  bool copa_swap = false;
  double threshold = 0.5;

  std::string log_format = "text";  // text | jsonl

  EmbedTrainConfig embed_config() const;
  SamplerConfig sampler_config() const;
  StrengthConfig strength_config() const;
  MinerConfig miner_config() const;

  /// Semantic fields as ordered JSON (threads/log excluded).
  std::string echo_json() const;
  /// Meta line for JSONL artifacts: {"type":"meta","tool_version",...,"config"}.
  std::string meta_line() const;
  /// Compact form for '#' comment headers in text artifacts.
  std::string meta_comment() const;

  /// Apply `key = value` assignments parsed from a config file or -D style
  /// overrides. Unknown keys and unparseable values raise ConfigError with
  /// the offending location.
  void apply(const std::string& key, const std::string& value,
             const std::string& where);
};

/// Line-oriented `key = value` file; '#' starts a comment. Values from
/// `flag_overrides` (already parsed from the command line) win over the file,
/// which wins over defaults.
RunConfig load_config(const std::string& path,
                      const std::map<std::string, std::string>& flag_overrides);

RunConfig config_from_overrides(const std::map<std::string, std::string>& overrides);

}  // namespace causalkit
