#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "causalkit/encoder.hpp"
#include "helpers.hpp"

using namespace causalkit;

namespace {

Vocab tiny_vocab() {
  std::istringstream in(
      "alpha beta gamma delta epsilon zeta eta theta\n"
      "alpha beta gamma delta epsilon zeta eta theta\n");
  return build_vocab(in, 1);
}

TrainConfig tiny_config(Arch arch) {
  TrainConfig c;
  c.arch = arch;
  c.d_model = 8;
  c.hidden = 8;
  c.layers = 1;
  c.heads = 2;
  c.d_ff = 12;
  c.max_len = 12;
  return c;
}

LabeledExample example(const std::string& c, const std::string& e, int label,
                       double weight = 1.0) {
  LabeledExample ex;
  ex.cause = c;
  ex.effect = e;
  ex.label = label;
  ex.class_weight = weight;
  ex.origin = label == 1 ? ExampleOrigin::original : ExampleOrigin::corrupted_effect;
  return ex;
}

// Central finite differences over every parameter entry.
template <class LossFn>
void gradcheck(EncoderParams<double>& p, EncoderParams<double>& analytic,
               const LossFn& loss_at, double step = 1e-5, double tol = 1e-4) {
  std::vector<Mat<double>*> tensors;
  p.for_each_tensor([&](const std::string&, Mat<double>& t, bool) {
    tensors.push_back(&t);
  });
  std::vector<const Mat<double>*> grads;
  analytic.for_each_tensor([&](const std::string&, const Mat<double>& t, bool) {
    grads.push_back(&t);
  });
  double worst = 0;
  for (std::size_t ti = 0; ti < tensors.size(); ++ti) {
    Mat<double>& t = *tensors[ti];
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        const double keep = t(r, c);
        t(r, c) = keep + step;
        const double up = loss_at();
        t(r, c) = keep - step;
        const double down = loss_at();
        t(r, c) = keep;
        const double fd = (up - down) / (2 * step);
        worst = std::max(worst, testkit::rel_err(fd, (*grads[ti])(r, c)));
      }
    }
  }
  CHECK(worst <= tol);
}

}  // namespace

TEST_CASE("encode determinism and shape") {
  const Vocab vocab = tiny_vocab();
  for (const Arch arch : {Arch::pool, Arch::attn}) {
    const auto p = init_params<double>(tiny_config(arch), vocab.size(), 3);
    const auto h1 = encode("alpha beta", "gamma", p, vocab);
    const auto h2 = encode("alpha beta", "gamma", p, vocab);
    CHECK(h1 == h2);
    CHECK(h1.size() == 8);
  }
  const auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 3);
  CHECK_THROWS_AS(encode("", "", p, vocab), std::invalid_argument);
}

TEST_CASE("pool arch with zero second layer collapses to the zero vector") {
  const Vocab vocab = tiny_vocab();
  auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 3);
  p.pool_w2.setZero();
  p.pool_b2.setZero();
  const auto h1 = encode("alpha beta", "gamma delta", p, vocab);
  const auto h2 = encode("zeta", "eta", p, vocab);
  CHECK(h1.norm() == 0.0);
  CHECK(h2.norm() == 0.0);
}

TEST_CASE("pool is order-invariant; attn with positions is not") {
  const Vocab vocab = tiny_vocab();
  {
    const auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 5);
    const auto a = encode("alpha beta gamma", "delta", p, vocab);
    const auto b = encode("gamma alpha beta", "delta", p, vocab);
    CHECK((a - b).norm() <= 1e-12);
  }
  {
    auto p = init_params<double>(tiny_config(Arch::attn), vocab.size(), 5);
    const auto a0 = encode("alpha beta gamma", "delta", p, vocab);
    const auto b0 = encode("gamma alpha beta", "delta", p, vocab);
    // Structural order dependence, far above the ~1e-16 float-reorder noise
    // that the pool check above tolerates.
    CHECK((a0 - b0).norm() > 1e-12);
    p.embed *= 20.0;
    p.pos *= 20.0;
    const auto a1 = encode("alpha beta gamma", "delta", p, vocab);
    const auto b1 = encode("gamma alpha beta", "delta", p, vocab);
    CHECK((a1 - b1).norm() > 1e-8);
  }
}

TEST_CASE("score head hand cases") {
  const Vocab vocab = tiny_vocab();
  auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 7);
  // Zero ranking head: f = bias for any input.
  p.rank_w.setZero();
  p.rank_b(0, 0) = 0.25;
  CHECK(score("alpha", "beta", p, vocab) == 0.25);
  CHECK(score("gamma delta", "eta", p, vocab) == 0.25);

  // Hand dot product: h = [0.3, 0.1], head [1, -1], bias 0 -> 0.2.
  Mat<double> h(1, 2);
  h << 0.3, 0.1;
  EncoderParams<double> q;
  q.config = tiny_config(Arch::pool);
  q.rank_w.resize(2, 1);
  q.rank_w << 1, -1;
  q.rank_b = Mat<double>::Zero(1, 1);
  CHECK(score_from_hidden(h, q) == doctest::Approx(0.2).epsilon(1e-15));
}

TEST_CASE("score is invariant to PAD appended beyond the final SEP") {
  const Vocab vocab = tiny_vocab();
  for (const Arch arch : {Arch::pool, Arch::attn}) {
    const auto p = init_params<double>(tiny_config(arch), vocab.size(), 9);
    auto ids = build_pair_ids("alpha beta", "gamma", vocab, p.config.max_len);
    const auto hidden = forward_hidden<double>(ids, p, nullptr);
    const double f = score_from_hidden(hidden, p);
    auto padded = ids;
    padded.push_back(Vocab::kPad);
    padded.push_back(Vocab::kPad);
    const auto hidden_pad = forward_hidden<double>(padded, p, nullptr);
    CHECK(score_from_hidden(hidden_pad, p) == doctest::Approx(f).epsilon(1e-12));
  }
}

TEST_CASE("truncation drops from the longest side first and keeps one token per side") {
  const Vocab vocab = tiny_vocab();
  // Budget of 5 content tokens (max_len 8 minus 3 specials).
  const auto ids = build_pair_ids("alpha beta gamma delta epsilon zeta", "eta theta",
                                  vocab, 8);
  REQUIRE(ids.size() == 8);
  // cause gets truncated to 3, effect keeps 2.
  CHECK(ids[0] == Vocab::kCls);
  CHECK(ids[4] == Vocab::kSep);
  CHECK(ids[7] == Vocab::kSep);
  CHECK(ids[1] == vocab.id("alpha"));
  CHECK(ids[5] == vocab.id("eta"));

  // A very tight budget still leaves one token on each side.
  const auto tight = build_pair_ids("alpha beta gamma", "delta epsilon", vocab, 5);
  REQUIRE(tight.size() == 5);
  CHECK(tight[1] == vocab.id("alpha"));
  CHECK(tight[3] == vocab.id("delta"));
}

TEST_CASE("loss_cls hand values") {
  // Equal logits, weight 1 -> ln 2.
  RowVec<double> logits(2);
  logits << 0.7, 0.7;
  CHECK(weighted_cross_entropy(logits, 1, 1.0) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-12));

  // Correct-class probability 0.8, weight 1.5 -> 1.5 * (-ln 0.8).
  logits << 0.0, std::log(4.0);
  CHECK(weighted_cross_entropy(logits, 1, 1.5) ==
        doctest::Approx(1.5 * -std::log(0.8)).epsilon(1e-12));

  const Vocab vocab = tiny_vocab();
  const auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 13);
  std::vector<LabeledExample> batch = {example("alpha", "beta", 2)};
  CHECK_THROWS_AS(loss_cls(batch, p, vocab, p.config), std::invalid_argument);
  CHECK_THROWS_AS(loss_cls({}, p, vocab, p.config), std::invalid_argument);
}

TEST_CASE("margin ranking kernel hand values") {
  // f+ = 0.9, f- = 0.2, m = 0.5 -> inactive hinge.
  CHECK(margin_ranking_loss<double>({{0.9, 0.2}}, 0.5) == 0.0);
  // Same scores, m = 1.0 -> 0.3.
  CHECK(margin_ranking_loss<double>({{0.9, 0.2}}, 1.0) ==
        doctest::Approx(0.3).epsilon(1e-12));
  // Sum over the batch.
  CHECK(margin_ranking_loss<double>({{0.9, 0.2}, {0.1, 0.4}}, 1.0) ==
        doctest::Approx(0.3 + 1.3).epsilon(1e-12));
}

TEST_CASE("loss_rank regularizer-only value") {
  const Vocab vocab = tiny_vocab();
  auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 17);
  p.for_each_tensor([](const std::string&, Mat<double>& t, bool) { t.setZero(); });
  p.pool_w1(0, 0) = 3.0;  // the single nonzero entry of Theta

  TrainConfig config = p.config;
  config.lambda_wd = 2.0;
  // No hinge terms in an empty batch: loss = (2/2) * 9 = 9 exactly.
  CHECK(loss_rank<double>({}, p, vocab, config) == 9.0);

  // With equal scores the hinge contributes exactly m per partner.
  config.lambda_wd = 0.0;
  config.margin = 1.0;
  RankGroup g;
  g.positive = example("alpha", "beta", 1);
  g.negatives = {example("alpha", "gamma", 0)};
  CHECK(loss_rank<double>({g}, p, vocab, config) == 1.0);

  RankGroup orphan;
  orphan.positive = example("alpha", "beta", 1);
  CHECK_THROWS_AS(loss_rank<double>({orphan}, p, vocab, config),
                  std::invalid_argument);
}

TEST_CASE("anchor penalty hand values and errors") {
  const Vocab vocab = tiny_vocab();
  auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 19);
  const auto snapshot = AnchorSnapshot<double>::capture(p);

  CHECK(anchor_penalty(p, snapshot, 0.1) == 0.0);
  CHECK(trunk_distance(p, snapshot) == 0.0);

  p.pool_w1(1, 1) += 0.2;
  CHECK(anchor_penalty(p, snapshot, 0.1) == doctest::Approx(0.002).epsilon(1e-12));
  CHECK(anchor_penalty(p, snapshot, 0.2) ==
        doctest::Approx(2 * anchor_penalty(p, snapshot, 0.1)).epsilon(1e-12));

  // Gradient is lambda * drift on the drifted entry, zero elsewhere.
  auto grads = zeros_like(p);
  anchor_penalty(p, snapshot, 0.1, &grads);
  CHECK(grads.pool_w1(1, 1) == doctest::Approx(0.1 * 0.2).epsilon(1e-12));
  CHECK(grads.pool_w2.norm() == 0.0);
  CHECK(grads.cls_w.norm() == 0.0);  // heads carry no anchor

  // Heads drifting do not change the penalty.
  p.cls_w(0, 0) += 5.0;
  CHECK(anchor_penalty(p, snapshot, 0.1) == doctest::Approx(0.002).epsilon(1e-12));

  auto other = init_params<double>(tiny_config(Arch::attn), vocab.size(), 19);
  CHECK_THROWS_AS(anchor_penalty(other, snapshot, 0.1), std::invalid_argument);
}

TEST_CASE("loss_cls gradient matches finite differences (both archs)") {
  const Vocab vocab = tiny_vocab();
  for (const Arch arch : {Arch::pool, Arch::attn}) {
    CAPTURE(static_cast<int>(arch));
    auto p = init_params<double>(tiny_config(arch), vocab.size(), 23);
    TrainConfig config = p.config;
    config.lambda_anchor = 0.05;
    auto snapshot = AnchorSnapshot<double>::capture(p);
    // Drift a little so the anchor gradient is nonzero.
    p.embed.array() += 0.01;

    const std::vector<LabeledExample> batch = {
        example("alpha beta", "gamma", 1, 1.5),
        example("delta", "epsilon zeta", 0, 0.75),
    };
    auto grads = zeros_like(p);
    loss_cls(batch, p, vocab, config, &snapshot, &grads);
    gradcheck(p, grads,
              [&] { return loss_cls(batch, p, vocab, config, &snapshot, nullptr); });
  }
}

TEST_CASE("loss_rank gradient matches finite differences (both archs)") {
  const Vocab vocab = tiny_vocab();
  for (const Arch arch : {Arch::pool, Arch::attn}) {
    CAPTURE(static_cast<int>(arch));
    auto p = init_params<double>(tiny_config(arch), vocab.size(), 29);
    TrainConfig config = p.config;
    config.margin = 1.0;        // active hinge: scores are near zero at init
    config.lambda_wd = 1e-3;
    config.lambda_anchor = 0.02;
    auto snapshot = AnchorSnapshot<double>::capture(p);
    p.embed.array() -= 0.005;

    RankGroup g1;
    g1.positive = example("alpha beta", "gamma", 1);
    g1.negatives = {example("alpha beta", "zeta", 0), example("eta", "gamma", 0)};
    RankGroup g2;
    g2.positive = example("delta", "epsilon", 1);
    g2.negatives = {example("delta", "theta", 0)};
    const std::vector<RankGroup> batch = {g1, g2};

    auto grads = zeros_like(p);
    loss_rank(batch, p, vocab, config, &snapshot, &grads);
    gradcheck(p, grads,
              [&] { return loss_rank(batch, p, vocab, config, &snapshot, nullptr); });
  }
}

TEST_CASE("loss_mlm gradient matches finite differences (both archs)") {
  const Vocab vocab = tiny_vocab();
  for (const Arch arch : {Arch::pool, Arch::attn}) {
    CAPTURE(static_cast<int>(arch));
    auto p = init_params<double>(tiny_config(arch), vocab.size(), 31);
    Sentence s;
    s.tokens = tokenize("alpha beta gamma delta");
    auto ids = build_sentence_ids(s, vocab, p.config.max_len);
    MaskedItem item;
    item.ids = ids;
    item.targets = {{1, ids[1]}, {3, ids[3]}};
    item.ids[1] = Vocab::kMask;
    item.ids[3] = Vocab::kMask;
    const std::vector<MaskedItem> batch = {item};

    auto grads = zeros_like(p);
    loss_mlm(batch, p, &grads);
    gradcheck(p, grads, [&] { return loss_mlm(batch, p, nullptr); });
  }
}

TEST_CASE("loss_mlm with tied embeddings") {
  const Vocab vocab = tiny_vocab();
  TrainConfig config = tiny_config(Arch::attn);
  config.tie_mlm = true;
  auto p = init_params<double>(config, vocab.size(), 37);
  Sentence s;
  s.tokens = tokenize("alpha beta gamma");
  auto ids = build_sentence_ids(s, vocab, config.max_len);
  MaskedItem item;
  item.ids = ids;
  item.targets = {{2, ids[2]}};
  item.ids[2] = Vocab::kMask;
  const std::vector<MaskedItem> batch = {item};

  auto grads = zeros_like(p);
  loss_mlm(batch, p, &grads);
  gradcheck(p, grads, [&] { return loss_mlm(batch, p, nullptr); });
}

TEST_CASE("masking rate zero yields zero loss and no gradient") {
  const Vocab vocab = tiny_vocab();
  const auto p = init_params<double>(tiny_config(Arch::pool), vocab.size(), 41);
  MaskedItem item;
  Sentence s;
  s.tokens = tokenize("alpha beta");
  item.ids = build_sentence_ids(s, vocab, p.config.max_len);
  const std::vector<MaskedItem> batch = {item};  // no targets
  auto grads = zeros_like(p);
  CHECK(loss_mlm(batch, p, &grads) == 0.0);
  double gnorm = 0;
  grads.for_each_tensor([&](const std::string&, const Mat<double>& t, bool) {
    gnorm += t.squaredNorm();
  });
  CHECK(gnorm == 0.0);
}
