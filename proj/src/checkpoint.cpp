#include "causalkit/checkpoint.hpp"

#include <fstream>

namespace causalkit {

nlohmann::ordered_json train_config_to_json(const TrainConfig& c) {
  nlohmann::ordered_json j;
  j["objective"] = to_string(c.objective);
  j["arch"] = to_string(c.arch);
  j["d_model"] = c.d_model;
  j["hidden"] = c.hidden;
  j["layers"] = c.layers;
  j["heads"] = c.heads;
  j["d_ff"] = c.d_ff;
  j["max_len"] = c.max_len;
  j["tie_mlm"] = c.tie_mlm;
  j["m"] = c.margin;
  j["lambda_wd"] = c.lambda_wd;
  j["lambda_anchor"] = c.lambda_anchor;
  j["lr"] = c.learning_rate;
  j["batch_size"] = c.batch_size;
  j["epochs"] = c.epochs;
  j["eval_every"] = c.eval_every;
  j["mask_rate"] = c.mask_rate;
  j["seed"] = c.seed;
  return j;
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.objective = objective_from_string(j.value("objective", std::string("cls")));
  c.arch = arch_from_string(j.value("arch", std::string("pool")));
  c.d_model = j.value("d_model", c.d_model);
  c.hidden = j.value("hidden", c.hidden);
  c.layers = j.value("layers", c.layers);
  c.heads = j.value("heads", c.heads);
  c.d_ff = j.value("d_ff", c.d_ff);
  c.max_len = j.value("max_len", c.max_len);
  c.tie_mlm = j.value("tie_mlm", c.tie_mlm);
  c.margin = j.value("m", c.margin);
  c.lambda_wd = j.value("lambda_wd", c.lambda_wd);
  c.lambda_anchor = j.value("lambda_anchor", c.lambda_anchor);
  c.learning_rate = j.value("lr", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.eval_every = j.value("eval_every", c.eval_every);
  c.mask_rate = j.value("mask_rate", c.mask_rate);
  c.seed = j.value("seed", c.seed);
  return c;
}

std::uint64_t file_fingerprint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read file for fingerprint: " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof(buf));
    h = fnv1a(buf, static_cast<std::size_t>(in.gcount()), h);
  }
  return h;
}

}  // namespace causalkit
