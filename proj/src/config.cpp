#include "causalkit/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>

#include "json.hpp"

#include "causalkit/checkpoint.hpp"
#include "causalkit/version.hpp"

namespace causalkit {

using ordered_json = nlohmann::ordered_json;

EmbedTrainConfig RunConfig::embed_config() const {
  EmbedTrainConfig c;
  c.dim = embed_dim;
  c.epochs = embed_epochs;
  c.margin = embed_margin;
  c.negatives = embed_negatives;
  c.learning_rate = embed_lr;
  c.seed = seed;
  return c;
}

SamplerConfig RunConfig::sampler_config() const {
  SamplerConfig c;
  c.k = k;
  c.seed = seed;
  c.max_resample = max_resample;
  return c;
}

StrengthConfig RunConfig::strength_config() const {
  StrengthConfig c;
  c.alpha = alpha;
  return c;
}

MinerConfig RunConfig::miner_config() const {
  MinerConfig c;
  c.max_phrase_tokens = phrase_tokens;
  return c;
}

std::string RunConfig::echo_json() const {
  ordered_json j;
  j["seed"] = seed;
  j["alpha"] = alpha;
  j["min_count"] = min_count;
  j["phrase_tokens"] = phrase_tokens;
  j["embed_dim"] = embed_dim;
  j["embed_epochs"] = embed_epochs;
  j["embed_margin"] = embed_margin;
  j["embed_negatives"] = embed_negatives;
  j["embed_lr"] = embed_lr;
  j["embed_topk"] = embed_topk;
  j["harvest_threshold"] = harvest_threshold;
  j["k"] = k;
  j["max_resample"] = max_resample;
  j["weighting"] = weighting == WeightingMode::balanced ? "balanced" : "frequency";
  j["split_train"] = split_train;
  j["split_dev"] = split_dev;
  j["split_test"] = split_test;
  j["train"] = train_config_to_json(train);
  j["copa_swap"] = copa_swap;
  j["threshold"] = threshold;
  return j.dump();
}

std::string RunConfig::meta_line() const {
  ordered_json j;
  j["type"] = "meta";
  j["tool_version"] = kToolVersion;
  j["config"] = ordered_json::parse(echo_json());
  return j.dump();
}

std::string RunConfig::meta_comment() const {
  return std::string("tool_version=") + kToolVersion + " config=" + echo_json();
}

namespace {

long long parse_int(const std::string& value, const std::string& where) {
  long long out = 0;
  const auto res = std::from_chars(value.data(), value.data() + value.size(), out);
  if (res.ec != std::errc() || res.ptr != value.data() + value.size()) {
    throw ConfigError(where + ": expected an integer, got '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& value, const std::string& where) {
  try {
    std::size_t used = 0;
    const double out = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw ConfigError(where + ": expected a number, got '" + value + "'");
  }
}

bool parse_bool(const std::string& value, const std::string& where) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError(where + ": expected true/false, got '" + value + "'");
}

}  // namespace

void RunConfig::apply(const std::string& key, const std::string& value,
                      const std::string& where) {
  if (key == "seed") {
    seed = static_cast<std::uint64_t>(parse_int(value, where));
  } else if (key == "threads") {
    threads = static_cast<int>(parse_int(value, where));
  } else if (key == "alpha") {
    alpha = parse_real(value, where);
    if (alpha <= 0) throw ConfigError(where + ": alpha must be > 0");
  } else if (key == "min_count") {
    min_count = static_cast<int>(parse_int(value, where));
    if (min_count < 1) throw ConfigError(where + ": min_count must be >= 1");
  } else if (key == "phrase_tokens") {
    phrase_tokens = static_cast<int>(parse_int(value, where));
    if (phrase_tokens < 1 || phrase_tokens > 3) {
      throw ConfigError(where + ": phrase_tokens must be in [1,3]");
    }
  } else if (key == "embed_dim") {
    embed_dim = static_cast<int>(parse_int(value, where));
  } else if (key == "embed_epochs") {
    embed_epochs = static_cast<int>(parse_int(value, where));
  } else if (key == "embed_margin") {
    embed_margin = parse_real(value, where);
  } else if (key == "embed_negatives") {
    embed_negatives = static_cast<int>(parse_int(value, where));
  } else if (key == "embed_lr") {
    embed_lr = parse_real(value, where);
  } else if (key == "embed_topk") {
    embed_topk = static_cast<int>(parse_int(value, where));
  } else if (key == "harvest_threshold") {
    harvest_threshold = parse_real(value, where);
  } else if (key == "k") {
    k = static_cast<int>(parse_int(value, where));
    if (k < 1) throw ConfigError(where + ": k must be >= 1");
  } else if (key == "max_resample") {
    max_resample = static_cast<int>(parse_int(value, where));
  } else if (key == "weighting") {
    if (value == "balanced") {
      weighting = WeightingMode::balanced;
    } else if (value == "frequency") {
      weighting = WeightingMode::frequency;
    } else {
      throw ConfigError(where + ": weighting must be balanced or frequency");
    }
  } else if (key == "split_train") {
    split_train = parse_real(value, where);
  } else if (key == "split_dev") {
    split_dev = parse_real(value, where);
  } else if (key == "split_test") {
    split_test = parse_real(value, where);
  } else if (key == "objective") {
    try {
      train.objective = objective_from_string(value);
    } catch (const ConfigError&) {
      throw ConfigError(where + ": objective must be cls or rank");
    }
  } else if (key == "arch") {
    try {
      train.arch = arch_from_string(value);
    } catch (const ConfigError&) {
      throw ConfigError(where + ": arch must be pool or attn");
    }
  } else if (key == "d_model") {
    train.d_model = static_cast<int>(parse_int(value, where));
  } else if (key == "hidden") {
    train.hidden = static_cast<int>(parse_int(value, where));
  } else if (key == "layers") {
    train.layers = static_cast<int>(parse_int(value, where));
  } else if (key == "heads") {
    train.heads = static_cast<int>(parse_int(value, where));
  } else if (key == "d_ff") {
    train.d_ff = static_cast<int>(parse_int(value, where));
  } else if (key == "max_len") {
    train.max_len = static_cast<int>(parse_int(value, where));
  } else if (key == "tie_mlm") {
    train.tie_mlm = parse_bool(value, where);
  } else if (key == "m") {
    train.margin = parse_real(value, where);
    if (train.margin <= 0) throw ConfigError(where + ": m must be > 0");
  } else if (key == "lambda_wd") {
    train.lambda_wd = parse_real(value, where);
    if (train.lambda_wd < 0) throw ConfigError(where + ": lambda_wd must be >= 0");
  } else if (key == "lambda_anchor") {
    train.lambda_anchor = parse_real(value, where);
    if (train.lambda_anchor < 0) {
      throw ConfigError(where + ": lambda_anchor must be >= 0");
    }
  } else if (key == "lr") {
    train.learning_rate = parse_real(value, where);
  } else if (key == "batch_size") {
    train.batch_size = static_cast<int>(parse_int(value, where));
    if (train.batch_size < 1) throw ConfigError(where + ": batch_size must be >= 1");
  } else if (key == "epochs") {
    train.epochs = static_cast<int>(parse_int(value, where));
  } else if (key == "eval_every") {
    train.eval_every = static_cast<int>(parse_int(value, where));
  } else if (key == "mask_rate") {
    train.mask_rate = parse_real(value, where);
    if (train.mask_rate < 0 || train.mask_rate > 1) {
      throw ConfigError(where + ": mask_rate must be in [0,1]");
    }
  } else if (key == "copa_swap") {
    copa_swap = parse_bool(value, where);
  } else if (key == "threshold") {
    threshold = parse_real(value, where);
  } else if (key == "log") {
    if (value != "text" && value != "jsonl") {
      throw ConfigError(where + ": log must be text or jsonl");
    }
    log_format = value;
  } else {
    throw ConfigError(where + ": unknown config key '" + key + "'");
  }
}

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

RunConfig load_config(const std::string& path,
                      const std::map<std::string, std::string>& flag_overrides) {
  RunConfig config;
  if (!path.empty()) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::string line;
    long long lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::string stripped = trim(line);
      if (stripped.empty() || stripped[0] == '#') continue;
      const auto eq = stripped.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": expected key = value");
      }
      const std::string key = trim(stripped.substr(0, eq));
      const std::string value = trim(stripped.substr(eq + 1));
      config.apply(key, value, path + ":" + std::to_string(lineno));
    }
  }
  for (const auto& [key, value] : flag_overrides) {
    config.apply(key, value, "--" + key);
  }
  // Train shares the run seed unless a training seed was set explicitly via
  // the train config file key.
  config.train.seed = config.seed;
  return config;
}

RunConfig config_from_overrides(const std::map<std::string, std::string>& overrides) {
  return load_config("", overrides);
}

}  // namespace causalkit
