#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "causalkit/pairs.hpp"

namespace causalkit {

struct StrengthConfig {
  double alpha = 0.66;  // penalty exponent on the cause marginal
};

/// Directed co-occurrence counts over cause/effect word roles.
///
/// Invariants: sum of cause marginals == sum of effect marginals == N_pairs,
/// and every joint count is bounded by both of its marginals.
class CausalNetwork {
 public:
  /// Add pairs (word level only; others are skipped and counted). A pair
  /// carrying count k contributes k observations.
  void accumulate(const std::vector<CausalPair>& pairs);
  void add(const std::string& cause, const std::string& effect, long long count = 1);

  long long n_pairs() const { return n_pairs_; }
  long long n_cause(const std::string& w) const;
  long long n_effect(const std::string& w) const;
  long long n_joint(const std::string& cause, const std::string& effect) const;
  long long skipped_non_word() const { return skipped_non_word_; }

  /// Necessity causal strength p(i,j) / (p(i)^alpha * p(j)); 0 for unseen or
  /// zero-joint queries. Requires at least one observation.
  double cs_nec(const std::string& cause, const std::string& effect,
                const StrengthConfig& config = StrengthConfig()) const;

  /// Natural-log pointwise mutual information; pmi == log(cs_nec at alpha=1).
  /// Zero joint count yields the minimal finite score, ranked below any
  /// observed pair.
  double pmi(const std::string& cause, const std::string& effect) const;

  static double min_pmi();

  /// The n highest-CS_nec pairs, descending, ties broken by (cause, effect)
  /// lexicographic order. weight = CS_nec, source = causalnet.
  std::vector<CausalPair> top_n(std::size_t n,
                                const StrengthConfig& config = StrengthConfig()) const;

  /// All observed joint pairs in lexicographic order.
  std::vector<std::pair<std::string, std::string>> joint_keys() const;

  /// Text format: `N_pairs=<int> alpha=<real>` header, optional '#' comment
  /// lines, then CAUSE / EFFECT / JOINT sections of tab-separated counts.
  void save(const std::string& path, double alpha,
            const std::string& meta_comment = "") const;
  static CausalNetwork load(const std::string& path, double* alpha_out = nullptr);

 private:
  std::unordered_map<std::string, long long> cause_counts_;
  std::unordered_map<std::string, long long> effect_counts_;
  std::unordered_map<std::string, std::unordered_map<std::string, long long>> joint_counts_;
  long long n_pairs_ = 0;
  long long skipped_non_word_ = 0;
};

}  // namespace causalkit
