#pragma once

#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "causalkit/checkpoint.hpp"
#include "causalkit/encoder.hpp"
#include "causalkit/eval.hpp"

namespace causalkit {

/// Adam with bias correction (beta1=0.9, beta2=0.999, eps=1e-8). Moment
/// tensors follow the parameter registry in lockstep.
template <class Scalar>
class AdamState {
 public:
  explicit AdamState(const EncoderParams<Scalar>& p) {
    p.for_each_tensor([&](const std::string&, const Mat<Scalar>& t, bool) {
      m_.push_back(Mat<Scalar>::Zero(t.rows(), t.cols()));
      v_.push_back(Mat<Scalar>::Zero(t.rows(), t.cols()));
    });
  }

  void step(EncoderParams<Scalar>& p, const EncoderParams<Scalar>& g, Scalar lr) {
    ++t_;
    const Scalar b1 = static_cast<Scalar>(0.9);
    const Scalar b2 = static_cast<Scalar>(0.999);
    const Scalar eps = static_cast<Scalar>(1e-8);
    const Scalar c1 = 1 - std::pow(b1, static_cast<Scalar>(t_));
    const Scalar c2 = 1 - std::pow(b2, static_cast<Scalar>(t_));
    std::vector<const Mat<Scalar>*> grads;
    g.for_each_tensor([&](const std::string&, const Mat<Scalar>& t, bool) {
      grads.push_back(&t);
    });
    std::size_t i = 0;
    p.for_each_tensor([&](const std::string&, Mat<Scalar>& t, bool) {
      m_[i] = b1 * m_[i] + (1 - b1) * (*grads[i]);
      v_[i] = b2 * v_[i];
      v_[i].array() += (1 - b2) * grads[i]->array().square();
      t.array() -= lr * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + eps);
      ++i;
    });
  }

  long steps() const { return t_; }

 private:
  std::vector<Mat<Scalar>> m_, v_;
  long t_ = 0;
};

template <class Scalar>
void check_shape_compat(const EncoderParams<Scalar>& p, const TrainConfig& c) {
  const auto& pc = p.config;
  if (pc.arch != c.arch || pc.d_model != c.d_model || pc.hidden != c.hidden ||
      pc.layers != c.layers || pc.heads != c.heads || pc.d_ff != c.d_ff ||
      pc.max_len != c.max_len || pc.tie_mlm != c.tie_mlm) {
    throw std::invalid_argument(
        "train config architecture does not match checkpoint architecture");
  }
}

// ---------------------------------------------------------------------------
// Masked language modeling (stage 1)
// ---------------------------------------------------------------------------

/// Mask non-special positions with probability mask_rate; the position's id
/// becomes MASK and the original id is the prediction target.
inline MaskedItem mask_sequence(const std::vector<int>& ids, double mask_rate, Rng& rng) {
  MaskedItem item;
  item.ids = ids;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < Vocab::kNumSpecials) continue;
    if (mask_rate > 0 && rng.bernoulli(mask_rate)) {
      item.targets.emplace_back(static_cast<int>(i), ids[i]);
      item.ids[i] = Vocab::kMask;
    }
  }
  return item;
}

/// Mean MLM loss over the corpus with masks drawn from a fixed seed; measures
/// forgetting without touching parameters.
template <class Scalar>
Scalar evaluate_mlm(const std::vector<Sentence>& sentences,
                    const EncoderParams<Scalar>& p, const Vocab& vocab,
                    double mask_rate, std::uint64_t seed) {
  Rng rng(seed, /*stream=*/0x313a);
  Scalar total = 0;
  long long n_targets = 0;
  for (const auto& s : sentences) {
    const auto ids = build_sentence_ids(s, vocab, p.config.max_len);
    const MaskedItem item = mask_sequence(ids, mask_rate, rng);
    if (item.targets.empty()) continue;
    const Scalar loss = loss_mlm<Scalar>({item}, p, nullptr);
    total += loss * static_cast<Scalar>(item.targets.size());
    n_targets += static_cast<long long>(item.targets.size());
  }
  return n_targets > 0 ? total / static_cast<Scalar>(n_targets) : Scalar(0);
}

/// Step-indexed JSON-lines metrics stream; silent when no path is given.
struct MetricsLogger {
  std::ofstream out;

  MetricsLogger() = default;
  explicit MetricsLogger(const std::string& path) {
    if (!path.empty()) {
      out.open(path, std::ios::binary);
      if (!out) throw DataError("cannot write metrics log: " + path);
    }
  }
  void log(long step, const std::string& split, const std::string& key, double value) {
    if (!out.is_open()) return;
    nlohmann::ordered_json j;
    j["step"] = step;
    j["split"] = split;
    j[key] = value;
    out << j.dump() << '\n';
  }
};

template <class Scalar>
struct Stage1Result {
  EncoderParams<Scalar> params;
  AnchorSnapshot<Scalar> snapshot;
};

/// Stage 1: masked-token pre-training from a fresh seeded initialization;
/// the anchor snapshot theta_0 is captured at completion.
template <class Scalar>
Stage1Result<Scalar> train_stage1_mlm(const std::vector<Sentence>& corpus,
                                      const Vocab& vocab, const TrainConfig& config,
                                      MetricsLogger* metrics = nullptr) {
  if (corpus.empty()) throw std::invalid_argument("stage-1 corpus is empty");
  EncoderParams<Scalar> p = init_params<Scalar>(config, vocab.size(), config.seed);
  AdamState<Scalar> adam(p);
  Rng rng(config.seed, /*stream=*/0x51a6);

  std::vector<std::size_t> order(corpus.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t hi =
          std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
      std::vector<MaskedItem> batch;
      for (std::size_t i = at; i < hi; ++i) {
        const auto ids = build_sentence_ids(corpus[order[i]], vocab, config.max_len);
        batch.push_back(mask_sequence(ids, config.mask_rate, rng));
      }
      std::size_t n_targets = 0;
      for (const auto& item : batch) n_targets += item.targets.size();
      if (n_targets == 0) continue;
      EncoderParams<Scalar> grads = zeros_like(p);
      const Scalar loss = loss_mlm(batch, p, &grads);
      adam.step(p, grads, static_cast<Scalar>(config.learning_rate));
      ++step;
      if (metrics) metrics->log(step, "train", "mlm_loss", static_cast<double>(loss));
    }
  }
  Stage1Result<Scalar> result;
  result.params = std::move(p);
  result.snapshot = AnchorSnapshot<Scalar>::capture(result.params);
  return result;
}

// ---------------------------------------------------------------------------
// Dev metrics
// ---------------------------------------------------------------------------

/// Classification accuracy of the cls head at threshold 0.5.
template <class Scalar>
double pair_accuracy(const std::vector<LabeledExample>& examples,
                     const EncoderParams<Scalar>& p, const Vocab& vocab) {
  if (examples.empty()) return 0;
  long long correct = 0;
  for (const auto& ex : examples) {
    const Scalar prob = positive_probability(ex.cause, ex.effect, p, vocab);
    const int pred = prob >= Scalar(0.5) ? 1 : 0;
    if (pred == ex.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(examples.size());
}

/// Fraction of (positive, negative) partners ranked correctly by f.
template <class Scalar>
double ranking_accuracy(const std::vector<RankGroup>& groups,
                        const EncoderParams<Scalar>& p, const Vocab& vocab) {
  long long correct = 0, total = 0;
  for (const auto& g : groups) {
    const Scalar f_pos = score(g.positive.cause, g.positive.effect, p, vocab);
    for (const auto& neg : g.negatives) {
      const Scalar f_neg = score(neg.cause, neg.effect, p, vocab);
      if (f_pos > f_neg) ++correct;
      ++total;
    }
  }
  return total > 0 ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

/// Ranking-head scorer over a parameter set (kept alive by the caller).
template <class Scalar>
PairScorer rank_scorer(const EncoderParams<Scalar>& p, const Vocab& vocab) {
  return [&p, &vocab](const std::string& c, const std::string& e) {
    return static_cast<double>(score(c, e, p, vocab));
  };
}

/// Positive-class-probability scorer from the cls head.
template <class Scalar>
PairScorer prob_scorer(const EncoderParams<Scalar>& p, const Vocab& vocab) {
  return [&p, &vocab](const std::string& c, const std::string& e) {
    return static_cast<double>(positive_probability(c, e, p, vocab));
  };
}

// ---------------------------------------------------------------------------
// Stage 2: causal-knowledge injection
// ---------------------------------------------------------------------------

/// Observer invoked at every dev evaluation: (step, dev_metric, params).
template <class Scalar>
using DevObserver = std::function<void(long, double, const EncoderParams<Scalar>&)>;

namespace detail {

/// Shared stage-2/3 training loop over pre-built units: examples for cls,
/// groups for rank. dev_metric is evaluated at step 0, every eval_every
/// steps, and after the last step; the best-metric params are retained
/// (ties keep the earliest).
template <class Scalar, class Unit>
EncoderParams<Scalar> run_training(
    EncoderParams<Scalar> params, const std::vector<Unit>& units,
    const TrainConfig& config,
    const std::function<Scalar(const std::vector<Unit>&, const EncoderParams<Scalar>&,
                               EncoderParams<Scalar>*)>& batch_loss,
    const std::function<double(const EncoderParams<Scalar>&)>& dev_metric,
    bool has_dev, MetricsLogger* metrics, const DevObserver<Scalar>* observer,
    const char* loss_key) {
  if (config.epochs <= 0 || units.empty()) return params;

  AdamState<Scalar> adam(params);
  Rng rng(config.seed, /*stream=*/0x57a2);
  std::vector<std::size_t> order(units.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  EncoderParams<Scalar> best = params;
  double best_metric = -1;
  long step = 0;

  auto run_dev = [&](long at_step) {
    if (!has_dev) return;
    const double m = dev_metric(params);
    if (metrics) metrics->log(at_step, "dev", "metric", m);
    if (observer && *observer) (*observer)(at_step, m, params);
    if (m > best_metric) {
      best_metric = m;
      best = params;
    }
  };

  run_dev(0);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    for (std::size_t at = 0; at < order.size();
         at += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t hi =
          std::min(order.size(), at + static_cast<std::size_t>(config.batch_size));
      std::vector<Unit> batch;
      batch.reserve(hi - at);
      for (std::size_t i = at; i < hi; ++i) batch.push_back(units[order[i]]);
      EncoderParams<Scalar> grads = zeros_like(params);
      const Scalar loss = batch_loss(batch, params, &grads);
      adam.step(params, grads, static_cast<Scalar>(config.learning_rate));
      ++step;
      if (metrics) metrics->log(step, "train", loss_key, static_cast<double>(loss));
      if (config.eval_every > 0 && step % config.eval_every == 0) run_dev(step);
    }
  }
  if (!(config.eval_every > 0 && step % config.eval_every == 0)) run_dev(step);
  return has_dev && best_metric >= 0 ? best : params;
}

}  // namespace detail

/// Stage 2: mini-batch Adam on the classification or ranking objective, with
/// the anchor term pulling the trunk toward the snapshot. Returns the
/// dev-best parameters when dev data is given, the final parameters
/// otherwise. epochs <= 0 returns the input unchanged.
template <class Scalar>
EncoderParams<Scalar> train_stage2(const std::vector<LabeledExample>& train_examples,
                                   const std::vector<LabeledExample>& dev_examples,
                                   EncoderParams<Scalar> params,
                                   const AnchorSnapshot<Scalar>* snapshot,
                                   const Vocab& vocab, const TrainConfig& config,
                                   MetricsLogger* metrics = nullptr,
                                   const DevObserver<Scalar>* observer = nullptr) {
  check_shape_compat(params, config);
  if (train_examples.empty() || config.epochs <= 0) return params;
  params.config = config;
  const bool has_dev = !dev_examples.empty();
  const auto* anchor = config.lambda_anchor > 0 ? snapshot : nullptr;

  if (config.objective == Objective::cls) {
    std::function<Scalar(const std::vector<LabeledExample>&, const EncoderParams<Scalar>&,
                         EncoderParams<Scalar>*)>
        batch_loss = [&](const std::vector<LabeledExample>& batch,
                         const EncoderParams<Scalar>& p, EncoderParams<Scalar>* g) {
          return loss_cls(batch, p, vocab, config, anchor, g);
        };
    std::function<double(const EncoderParams<Scalar>&)> dev_metric =
        [&](const EncoderParams<Scalar>& p) { return pair_accuracy(dev_examples, p, vocab); };
    return detail::run_training<Scalar, LabeledExample>(
        std::move(params), train_examples, config, batch_loss, dev_metric,
        has_dev, metrics, observer, "cls_loss");
  }

  const std::vector<RankGroup> groups = make_rank_groups(train_examples);
  const std::vector<RankGroup> dev_groups =
      has_dev ? make_rank_groups(dev_examples) : std::vector<RankGroup>();
  std::function<Scalar(const std::vector<RankGroup>&, const EncoderParams<Scalar>&,
                       EncoderParams<Scalar>*)>
      batch_loss = [&](const std::vector<RankGroup>& batch, const EncoderParams<Scalar>& p,
                       EncoderParams<Scalar>* g) {
        return loss_rank(batch, p, vocab, config, anchor, g);
      };
  std::function<double(const EncoderParams<Scalar>&)> dev_metric =
      [&](const EncoderParams<Scalar>& p) { return ranking_accuracy(dev_groups, p, vocab); };
  return detail::run_training<Scalar, RankGroup>(
      std::move(params), groups, config, batch_loss, dev_metric, has_dev,
      metrics, observer, "rank_loss");
}

// ---------------------------------------------------------------------------
// Stage 3: target-task fine-tuning
// ---------------------------------------------------------------------------

/// The directed (cause, effect) pair a choice fills: asks_for=cause puts the
/// choice in the cause slot.
inline LabeledExample directed_example(const TwoChoiceItem& item,
                                       const std::string& choice, bool is_gold) {
  LabeledExample ex;
  if (item.asks_for == TwoChoiceItem::AsksFor::cause) {
    ex.cause = choice;
    ex.effect = item.premise;
  } else {
    ex.cause = item.premise;
    ex.effect = choice;
  }
  ex.label = is_gold ? 1 : 0;
  ex.origin = is_gold ? ExampleOrigin::original : ExampleOrigin::corrupted_effect;
  return ex;
}

inline RankGroup two_choice_group(const TwoChoiceItem& item) {
  RankGroup g;
  const std::string& gold = item.gold == 1 ? item.choice1 : item.choice2;
  const std::string& other = item.gold == 1 ? item.choice2 : item.choice1;
  g.positive = directed_example(item, gold, true);
  g.negatives.push_back(directed_example(item, other, false));
  return g;
}

/// Stage 3, two-choice form: ranking loss over (correct, incorrect)
/// alternative pairs sharing a premise. An empty training set returns the
/// parameters unchanged (the zero-shot path).
template <class Scalar>
EncoderParams<Scalar> fine_tune_two_choice(const std::vector<TwoChoiceItem>& train_items,
                                           const std::vector<TwoChoiceItem>& dev_items,
                                           EncoderParams<Scalar> params,
                                           const AnchorSnapshot<Scalar>* snapshot,
                                           const Vocab& vocab, const TrainConfig& config,
                                           MetricsLogger* metrics = nullptr,
                                           const DevObserver<Scalar>* observer = nullptr) {
  check_shape_compat(params, config);
  if (train_items.empty() || config.epochs <= 0) return params;
  params.config = config;
  std::vector<RankGroup> groups;
  groups.reserve(train_items.size());
  for (const auto& item : train_items) groups.push_back(two_choice_group(item));

  const bool has_dev = !dev_items.empty();
  const auto* anchor = config.lambda_anchor > 0 ? snapshot : nullptr;
  std::function<Scalar(const std::vector<RankGroup>&, const EncoderParams<Scalar>&,
                       EncoderParams<Scalar>*)>
      batch_loss = [&](const std::vector<RankGroup>& batch, const EncoderParams<Scalar>& p,
                       EncoderParams<Scalar>* g) {
        return loss_rank(batch, p, vocab, config, anchor, g);
      };
  std::function<double(const EncoderParams<Scalar>&)> dev_metric =
      [&](const EncoderParams<Scalar>& p) {
        return two_choice_eval(dev_items, rank_scorer(p, vocab)).accuracy;
      };
  return detail::run_training<Scalar, RankGroup>(
      std::move(params), groups, config, batch_loss, dev_metric, has_dev,
      metrics, observer, "rank_loss");
}

/// Stage 3, pair form: classification loss. An empty training set returns
/// the parameters unchanged.
template <class Scalar>
EncoderParams<Scalar> fine_tune_pairs(const std::vector<LabeledExample>& train_examples,
                                      const std::vector<LabeledExample>& dev_examples,
                                      EncoderParams<Scalar> params,
                                      const AnchorSnapshot<Scalar>* snapshot,
                                      const Vocab& vocab, TrainConfig config,
                                      MetricsLogger* metrics = nullptr,
                                      const DevObserver<Scalar>* observer = nullptr) {
  config.objective = Objective::cls;
  return train_stage2(train_examples, dev_examples, std::move(params), snapshot, vocab,
                      config, metrics, observer);
}

// ---------------------------------------------------------------------------
// Zero-shot evaluation
// ---------------------------------------------------------------------------

/// Evaluate a stage-2 checkpoint with no fine-tuning. The checkpoint file is
/// fingerprinted before and after; a mismatch (some code path updated the
/// parameters) is an error.
template <class Scalar>
EvalReport zero_shot_two_choice(const std::vector<TwoChoiceItem>& items,
                                const std::string& checkpoint_path, const Vocab& vocab,
                                bool swap_direction = false) {
  const std::uint64_t before = file_fingerprint(checkpoint_path);
  std::uint64_t vocab_hash = 0;
  const EncoderParams<Scalar> params =
      load_checkpoint<Scalar>(checkpoint_path, &vocab_hash);
  if (vocab_hash != vocab.hash()) {
    throw DataError("checkpoint vocab hash does not match the supplied vocab");
  }
  EvalReport report = two_choice_eval(items, rank_scorer(params, vocab), swap_direction);
  if (file_fingerprint(checkpoint_path) != before) {
    throw DataError("checkpoint changed during zero-shot evaluation");
  }
  report.zero_shot = true;
  return report;
}

template <class Scalar>
EvalReport zero_shot_pairs(const std::vector<LabeledExample>& examples,
                           const std::string& checkpoint_path, const Vocab& vocab,
                           double threshold = 0.5) {
  const std::uint64_t before = file_fingerprint(checkpoint_path);
  std::uint64_t vocab_hash = 0;
  const EncoderParams<Scalar> params =
      load_checkpoint<Scalar>(checkpoint_path, &vocab_hash);
  if (vocab_hash != vocab.hash()) {
    throw DataError("checkpoint vocab hash does not match the supplied vocab");
  }
  std::vector<double> scores;
  std::vector<int> gold;
  for (const auto& ex : examples) {
    scores.push_back(
        static_cast<double>(positive_probability(ex.cause, ex.effect, params, vocab)));
    gold.push_back(ex.label);
  }
  EvalReport report = pair_report(scores, gold, threshold);
  if (file_fingerprint(checkpoint_path) != before) {
    throw DataError("checkpoint changed during zero-shot evaluation");
  }
  report.zero_shot = true;
  return report;
}

}  // namespace causalkit
