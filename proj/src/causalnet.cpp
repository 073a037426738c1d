#include "causalkit/causalnet.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "causalkit/types.hpp"

namespace causalkit {

void CausalNetwork::add(const std::string& cause, const std::string& effect,
                        long long count) {
  if (count <= 0) return;
  cause_counts_[cause] += count;
  effect_counts_[effect] += count;
  joint_counts_[cause][effect] += count;
  n_pairs_ += count;
}

void CausalNetwork::accumulate(const std::vector<CausalPair>& pairs) {
  for (const auto& p : pairs) {
    if (p.level != PairLevel::word) {
      ++skipped_non_word_;
      continue;
    }
    add(p.cause, p.effect, p.count);
  }
}

long long CausalNetwork::n_cause(const std::string& w) const {
  auto it = cause_counts_.find(w);
  return it == cause_counts_.end() ? 0 : it->second;
}

long long CausalNetwork::n_effect(const std::string& w) const {
  auto it = effect_counts_.find(w);
  return it == effect_counts_.end() ? 0 : it->second;
}

long long CausalNetwork::n_joint(const std::string& cause,
                                 const std::string& effect) const {
  auto it = joint_counts_.find(cause);
  if (it == joint_counts_.end()) return 0;
  auto jt = it->second.find(effect);
  return jt == it->second.end() ? 0 : jt->second;
}

double CausalNetwork::cs_nec(const std::string& cause, const std::string& effect,
                             const StrengthConfig& config) const {
  if (n_pairs_ <= 0) throw std::invalid_argument("cs_nec on empty network");
  const long long joint = n_joint(cause, effect);
  if (joint == 0) return 0.0;
  const double n = static_cast<double>(n_pairs_);
  const double p_joint = static_cast<double>(joint) / n;
  const double p_cause = static_cast<double>(n_cause(cause)) / n;
  const double p_effect = static_cast<double>(n_effect(effect)) / n;
  return p_joint / (std::pow(p_cause, config.alpha) * p_effect);
}

double CausalNetwork::min_pmi() { return std::numeric_limits<double>::lowest(); }

double CausalNetwork::pmi(const std::string& cause, const std::string& effect) const {
  if (n_pairs_ <= 0) throw std::invalid_argument("pmi on empty network");
  if (n_joint(cause, effect) == 0) return min_pmi();
  StrengthConfig unit;
  unit.alpha = 1.0;
  return std::log(cs_nec(cause, effect, unit));
}

std::vector<std::pair<std::string, std::string>> CausalNetwork::joint_keys() const {
  std::vector<std::pair<std::string, std::string>> keys;
  for (const auto& [c, row] : joint_counts_) {
    for (const auto& [e, cnt] : row) {
      if (cnt > 0) keys.emplace_back(c, e);
    }
  }
  std::sort(keys.begin(), keys.end());
  return keys;
}

std::vector<CausalPair> CausalNetwork::top_n(std::size_t n,
                                             const StrengthConfig& config) const {
  if (n < 1) throw std::invalid_argument("top_n requires n >= 1");
  struct Scored {
    double score;
    std::pair<std::string, std::string> key;
  };
  std::vector<Scored> scored;
  for (const auto& key : joint_keys()) {
    scored.push_back({cs_nec(key.first, key.second, config), key});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.key < b.key;
  });
  if (scored.size() > n) scored.resize(n);

  std::vector<CausalPair> out;
  out.reserve(scored.size());
  for (const auto& s : scored) {
    CausalPair p;
    p.cause = s.key.first;
    p.effect = s.key.second;
    p.level = PairLevel::word;
    p.source = PairSource::causalnet;
    p.label = 1;
    p.weight = s.score;
    p.count = n_joint(p.cause, p.effect);
    out.push_back(std::move(p));
  }
  return out;
}

void CausalNetwork::save(const std::string& path, double alpha,
                         const std::string& meta_comment) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write network file: " + path);
  out << "N_pairs=" << n_pairs_ << " alpha=" << format_double(alpha) << '\n';
  if (!meta_comment.empty()) out << "# " << meta_comment << '\n';

  auto sorted_counts = [](const std::unordered_map<std::string, long long>& m) {
    std::vector<std::pair<std::string, long long>> v(m.begin(), m.end());
    std::sort(v.begin(), v.end());
    return v;
  };

  out << "CAUSE\n";
  for (const auto& [w, c] : sorted_counts(cause_counts_)) {
    out << w << '\t' << c << '\n';
  }
  out << "EFFECT\n";
  for (const auto& [w, c] : sorted_counts(effect_counts_)) {
    out << w << '\t' << c << '\n';
  }
  out << "JOINT\n";
  for (const auto& key : joint_keys()) {
    out << key.first << '\t' << key.second << '\t'
        << n_joint(key.first, key.second) << '\n';
  }
  if (!out) throw DataError("failed writing network file: " + path);
}

CausalNetwork CausalNetwork::load(const std::string& path, double* alpha_out) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read network file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty network file: " + path);

  long long n_pairs = -1;
  double alpha = 0.66;
  {
    std::istringstream header(line);
    std::string tok;
    while (header >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "N_pairs") n_pairs = std::stoll(val);
      if (key == "alpha") alpha = std::stod(val);
    }
  }
  if (n_pairs < 0) throw DataError("bad network header in " + path);
  if (alpha_out) *alpha_out = alpha;

  CausalNetwork net;
  enum class Section { none, cause, effect, joint } section = Section::none;
  long long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    if (line == "CAUSE") { section = Section::cause; continue; }
    if (line == "EFFECT") { section = Section::effect; continue; }
    if (line == "JOINT") { section = Section::joint; continue; }
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const auto tab = line.find('\t', pos);
      fields.push_back(line.substr(pos, tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    try {
      if (section == Section::cause && fields.size() == 2) {
        net.cause_counts_[fields[0]] += std::stoll(fields[1]);
      } else if (section == Section::effect && fields.size() == 2) {
        net.effect_counts_[fields[0]] += std::stoll(fields[1]);
      } else if (section == Section::joint && fields.size() == 3) {
        const long long c = std::stoll(fields[2]);
        net.joint_counts_[fields[0]][fields[1]] += c;
        net.n_pairs_ += c;
      } else {
        throw DataError("unexpected line");
      }
    } catch (const std::exception&) {
      throw DataError(path + ":" + std::to_string(lineno) + ": bad line: " + line);
    }
  }
  if (net.n_pairs_ != n_pairs) {
    throw DataError("network N_pairs mismatch in " + path);
  }
  return net;
}

}  // namespace causalkit
