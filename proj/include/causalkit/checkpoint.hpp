#pragma once

#include <bit>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "causalkit/encoder.hpp"
#include "causalkit/types.hpp"
#include "causalkit/version.hpp"

namespace causalkit {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes a little-endian host");

nlohmann::ordered_json train_config_to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

inline constexpr char kCheckpointMagic[8] = {'C', 'A', 'U', 'S', 'A', 'L', 'C', 'K'};

/// Single-file checkpoint: 8-byte magic, u64 header length, JSON header
/// manifest (config, vocab hash, tensor directory with byte offsets), then
/// the tensors as flat little-endian float32 in registry order. Values round
/// through float32, so save -> load -> save is byte identical.
/// run_config_json, when given, is echoed verbatim into the manifest so the
/// artifact records the full effective run configuration.
template <class Scalar>
void save_checkpoint(const std::string& path, const EncoderParams<Scalar>& params,
                     std::uint64_t vocab_hash,
                     const std::string& run_config_json = "") {
  nlohmann::ordered_json header;
  header["format"] = 1;
  header["tool_version"] = kToolVersion;
  header["config"] = train_config_to_json(params.config);
  header["vocab_size"] = params.vocab_size;
  header["vocab_hash"] = to_hex(vocab_hash);
  if (!run_config_json.empty()) {
    header["run_config"] = nlohmann::ordered_json::parse(run_config_json);
  }

  std::vector<float> blob;
  nlohmann::ordered_json dir = nlohmann::ordered_json::array();
  params.for_each_tensor([&](const std::string& name, const Mat<Scalar>& t, bool) {
    nlohmann::ordered_json entry;
    entry["name"] = name;
    entry["rows"] = t.rows();
    entry["cols"] = t.cols();
    entry["offset"] = blob.size() * sizeof(float);
    dir.push_back(entry);
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        blob.push_back(static_cast<float>(t(r, c)));
      }
    }
  });
  header["tensors"] = dir;

  const std::string header_str = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  const std::uint64_t len = header_str.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(header_str.data(), static_cast<std::streamsize>(header_str.size()));
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!out) throw DataError("failed writing checkpoint: " + path);
}

template <class Scalar>
EncoderParams<Scalar> load_checkpoint(const std::string& path,
                                      std::uint64_t* vocab_hash_out = nullptr,
                                      std::string* run_config_out = nullptr) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw DataError("not a checkpoint file: " + path);
  }
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len == 0 || len > (1ULL << 30)) {
    throw DataError("corrupt checkpoint header: " + path);
  }
  std::string header_str(len, '\0');
  in.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!in) throw DataError("truncated checkpoint header: " + path);

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(header_str);
  } catch (const std::exception& e) {
    throw DataError(path + ": bad checkpoint header: " + e.what());
  }
  if (header.value("format", 0) != 1) {
    throw DataError("unsupported checkpoint format in " + path);
  }

  const TrainConfig config = train_config_from_json(header.at("config"));
  const int vocab_size = header.at("vocab_size").get<int>();
  if (vocab_hash_out) {
    *vocab_hash_out = std::stoull(header.at("vocab_hash").get<std::string>(), nullptr, 16);
  }
  if (run_config_out) {
    *run_config_out =
        header.contains("run_config") ? header["run_config"].dump() : std::string();
  }

  // Shapes come from the config; the directory is validated against them.
  EncoderParams<Scalar> p = init_params<Scalar>(config, vocab_size, /*seed=*/0);
  std::vector<char> blob(std::istreambuf_iterator<char>(in), {});
  const auto* floats = reinterpret_cast<const float*>(blob.data());
  const std::size_t n_floats = blob.size() / sizeof(float);

  const auto& dir = header.at("tensors");
  std::size_t idx = 0;
  p.for_each_tensor([&](const std::string& name, Mat<Scalar>& t, bool) {
    if (idx >= dir.size()) throw DataError("missing tensor " + name + " in " + path);
    const auto& entry = dir[idx];
    if (entry.at("name").get<std::string>() != name ||
        entry.at("rows").get<Eigen::Index>() != t.rows() ||
        entry.at("cols").get<Eigen::Index>() != t.cols()) {
      throw DataError("tensor directory mismatch at " + name + " in " + path);
    }
    std::size_t off = entry.at("offset").get<std::size_t>() / sizeof(float);
    if (off + static_cast<std::size_t>(t.size()) > n_floats) {
      throw DataError("checkpoint blob too short at " + name + " in " + path);
    }
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        t(r, c) = static_cast<Scalar>(floats[off++]);
      }
    }
    ++idx;
  });
  if (idx != dir.size()) throw DataError("extra tensors in " + path);
  return p;
}

/// Fingerprint of a whole file; the zero-shot harness compares it before and
/// after evaluation to prove no parameter update happened.
std::uint64_t file_fingerprint(const std::string& path);

/// Fingerprint of the serialized parameter values (float32 stream).
template <class Scalar>
std::uint64_t params_fingerprint(const EncoderParams<Scalar>& p) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  p.for_each_tensor([&](const std::string& name, const Mat<Scalar>& t, bool) {
    h = fnv1a(name.data(), name.size(), h);
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const float f = static_cast<float>(t(r, c));
        h = fnv1a(&f, sizeof(f), h);
      }
    }
  });
  return h;
}

}  // namespace causalkit
