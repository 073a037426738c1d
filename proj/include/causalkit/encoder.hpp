#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "causalkit/corpus.hpp"
#include "causalkit/dataset.hpp"
#include "causalkit/types.hpp"

namespace causalkit {

enum class Objective { cls, rank };
enum class Arch { pool, attn };

const char* to_string(Objective o);
const char* to_string(Arch a);
Objective objective_from_string(const std::string& s);
Arch arch_from_string(const std::string& s);

struct TrainConfig {
  Objective objective = Objective::cls;
  Arch arch = Arch::pool;
  int d_model = 64;
  int hidden = 64;   // pool-arch MLP width; attn hidden size equals d_model
  int layers = 2;
  int heads = 2;
  int d_ff = 128;
  int max_len = 32;
  bool tie_mlm = false;
  double margin = 1.0;
  double lambda_wd = 1e-4;      // the margin-loss L2 term, over all parameters
  double lambda_anchor = 0.0;   // pull toward the stage-2 start snapshot
  double learning_rate = 1e-3;  // paper-scale runs use 1e-5
  int batch_size = 16;
  int epochs = 3;
  int eval_every = 50;
  double mask_rate = 0.15;
  std::uint64_t seed = 42;

  int hidden_size() const { return arch == Arch::pool ? hidden : d_model; }
};

/// One post-norm self-attention block: multi-head attention, residual +
/// layer norm, tanh feed-forward, residual + layer norm.
template <class Scalar>
struct AttnBlock {
  Mat<Scalar> wq, bq, wk, bk, wv, bv, wo, bo;  // d x d projections, 1 x d biases
  Mat<Scalar> ln1_g, ln1_b, ln2_g, ln2_b;      // 1 x d
  Mat<Scalar> wf1, bf1;                        // d x d_ff, 1 x d_ff
  Mat<Scalar> wf2, bf2;                        // d_ff x d, 1 x d
};

/// All trainable tensors. Biases are 1 x n matrices so every tensor shares
/// one dense type; for_each_tensor walks them in a fixed registry order that
/// the checkpoint format and the optimizer both rely on.
template <class Scalar>
struct EncoderParams {
  TrainConfig config;
  int vocab_size = 0;

  Mat<Scalar> embed;                    // |V| x d
  Mat<Scalar> pos;                      // max_len x d (attn only)
  std::vector<AttnBlock<Scalar>> blocks;
  Mat<Scalar> pool_w1, pool_b1;         // d x hidden, 1 x hidden
  Mat<Scalar> pool_w2, pool_b2;         // hidden x hidden, 1 x hidden
  Mat<Scalar> cls_w, cls_b;             // h x 2, 1 x 2
  Mat<Scalar> rank_w, rank_b;           // h x 1, 1 x 1
  Mat<Scalar> mlm_w, mlm_b;             // h x |V| (absent when tied), 1 x |V|

  template <class Self, class F>
  static void visit(Self& self, F&& f) {
    f("embed", self.embed, true);
    if (self.config.arch == Arch::attn) {
      f("pos", self.pos, true);
      for (std::size_t b = 0; b < self.blocks.size(); ++b) {
        auto& blk = self.blocks[b];
        const std::string p = "blk" + std::to_string(b) + ".";
        f(p + "wq", blk.wq, true);
        f(p + "bq", blk.bq, true);
        f(p + "wk", blk.wk, true);
        f(p + "bk", blk.bk, true);
        f(p + "wv", blk.wv, true);
        f(p + "bv", blk.bv, true);
        f(p + "wo", blk.wo, true);
        f(p + "bo", blk.bo, true);
        f(p + "ln1_g", blk.ln1_g, true);
        f(p + "ln1_b", blk.ln1_b, true);
        f(p + "wf1", blk.wf1, true);
        f(p + "bf1", blk.bf1, true);
        f(p + "wf2", blk.wf2, true);
        f(p + "bf2", blk.bf2, true);
        f(p + "ln2_g", blk.ln2_g, true);
        f(p + "ln2_b", blk.ln2_b, true);
      }
    } else {
      f("pool.w1", self.pool_w1, true);
      f("pool.b1", self.pool_b1, true);
      f("pool.w2", self.pool_w2, true);
      f("pool.b2", self.pool_b2, true);
    }
    f("cls.w", self.cls_w, false);
    f("cls.b", self.cls_b, false);
    f("rank.w", self.rank_w, false);
    f("rank.b", self.rank_b, false);
    if (!self.config.tie_mlm) f("mlm.w", self.mlm_w, false);
    f("mlm.b", self.mlm_b, false);
  }

  template <class F>
  void for_each_tensor(F&& f) {
    visit(*this, std::forward<F>(f));
  }
  template <class F>
  void for_each_tensor(F&& f) const {
    visit(*this, std::forward<F>(f));
  }
};

/// Seeded initialization: weights and embeddings N(0, 0.02^2), biases zero,
/// layer-norm gains one.
template <class Scalar>
EncoderParams<Scalar> init_params(const TrainConfig& config, int vocab_size,
                                  std::uint64_t seed) {
  if (config.d_model < 1 || config.max_len < 5) {
    throw std::invalid_argument("bad encoder dimensions");
  }
  if (config.arch == Arch::attn && config.d_model % config.heads != 0) {
    throw std::invalid_argument("d_model must be divisible by heads");
  }
  if (config.tie_mlm && config.hidden_size() != config.d_model) {
    throw std::invalid_argument("tie_mlm requires hidden size == d_model");
  }
  EncoderParams<Scalar> p;
  p.config = config;
  p.vocab_size = vocab_size;
  const int d = config.d_model;
  const int h = config.hidden_size();

  p.embed.resize(vocab_size, d);
  if (config.arch == Arch::attn) {
    p.pos.resize(config.max_len, d);
    p.blocks.resize(static_cast<std::size_t>(config.layers));
    for (auto& blk : p.blocks) {
      blk.wq.resize(d, d); blk.bq = Mat<Scalar>::Zero(1, d);
      blk.wk.resize(d, d); blk.bk = Mat<Scalar>::Zero(1, d);
      blk.wv.resize(d, d); blk.bv = Mat<Scalar>::Zero(1, d);
      blk.wo.resize(d, d); blk.bo = Mat<Scalar>::Zero(1, d);
      blk.ln1_g = Mat<Scalar>::Ones(1, d);
      blk.ln1_b = Mat<Scalar>::Zero(1, d);
      blk.ln2_g = Mat<Scalar>::Ones(1, d);
      blk.ln2_b = Mat<Scalar>::Zero(1, d);
      blk.wf1.resize(d, config.d_ff); blk.bf1 = Mat<Scalar>::Zero(1, config.d_ff);
      blk.wf2.resize(config.d_ff, d); blk.bf2 = Mat<Scalar>::Zero(1, d);
    }
  } else {
    p.pool_w1.resize(d, h);
    p.pool_b1 = Mat<Scalar>::Zero(1, h);
    p.pool_w2.resize(h, h);
    p.pool_b2 = Mat<Scalar>::Zero(1, h);
  }
  p.cls_w.resize(h, 2);
  p.cls_b = Mat<Scalar>::Zero(1, 2);
  p.rank_w.resize(h, 1);
  p.rank_b = Mat<Scalar>::Zero(1, 1);
  if (!config.tie_mlm) p.mlm_w.resize(h, vocab_size);
  p.mlm_b = Mat<Scalar>::Zero(1, vocab_size);

  Rng rng(seed, /*stream=*/0xa11c);
  auto fill_normal = [&](Mat<Scalar>& t, double stddev) {
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        t(r, c) = static_cast<Scalar>(rng.normal(0.0, stddev));
      }
    }
  };
  // The attn trunk is layer-normed, so the usual 0.02 scale works. The pool
  // MLP has no normalization anywhere; it needs O(1) activations at the tanh
  // or the whole network starts on its linear-regime plateau.
  if (config.arch == Arch::attn) {
    fill_normal(p.embed, 0.02);
    fill_normal(p.pos, 0.02);
    for (auto& blk : p.blocks) {
      fill_normal(blk.wq, 0.02);
      fill_normal(blk.wk, 0.02);
      fill_normal(blk.wv, 0.02);
      fill_normal(blk.wo, 0.02);
      fill_normal(blk.wf1, 0.02);
      fill_normal(blk.wf2, 0.02);
    }
  } else {
    fill_normal(p.embed, 1.0);
    fill_normal(p.pool_w1, 2.5 / std::sqrt(static_cast<double>(d)));
    fill_normal(p.pool_w2, 2.5 / std::sqrt(static_cast<double>(h)));
  }
  fill_normal(p.cls_w, 0.02);
  fill_normal(p.rank_w, 0.02);
  if (!config.tie_mlm) fill_normal(p.mlm_w, 0.02);
  return p;
}

template <class Scalar>
EncoderParams<Scalar> zeros_like(const EncoderParams<Scalar>& p) {
  EncoderParams<Scalar> g = p;
  g.for_each_tensor([](const std::string&, Mat<Scalar>& t, bool) { t.setZero(); });
  return g;
}

/// Frozen copy of the trunk at stage-2 start (theta_0). Heads are new in
/// stage 2 and carry no snapshot.
template <class Scalar>
struct AnchorSnapshot {
  std::vector<std::pair<std::string, Mat<Scalar>>> trunk;

  static AnchorSnapshot capture(const EncoderParams<Scalar>& p) {
    AnchorSnapshot s;
    p.for_each_tensor([&](const std::string& name, const Mat<Scalar>& t, bool is_trunk) {
      if (is_trunk) s.trunk.emplace_back(name, t);
    });
    return s;
  }
};

/// (lambda/2) * ||theta_trunk - theta_0||^2 with gradient
/// lambda * (theta - theta_0); heads excluded.
template <class Scalar>
Scalar anchor_penalty(const EncoderParams<Scalar>& p, const AnchorSnapshot<Scalar>& snapshot,
                      Scalar lambda_anchor,
                      EncoderParams<std::type_identity_t<Scalar>>* grads = nullptr) {
  std::vector<const Mat<Scalar>*> live;
  std::vector<std::string> names;
  p.for_each_tensor([&](const std::string& name, const Mat<Scalar>& t, bool is_trunk) {
    if (is_trunk) {
      live.push_back(&t);
      names.push_back(name);
    }
  });
  if (live.size() != snapshot.trunk.size()) {
    throw std::invalid_argument("anchor snapshot tensor count mismatch");
  }
  Scalar sq = 0;
  for (std::size_t i = 0; i < live.size(); ++i) {
    const auto& [name, t0] = snapshot.trunk[i];
    if (name != names[i] || t0.rows() != live[i]->rows() || t0.cols() != live[i]->cols()) {
      throw std::invalid_argument("anchor snapshot shape mismatch at " + names[i]);
    }
    sq += (*live[i] - t0).squaredNorm();
  }
  if (grads && lambda_anchor != Scalar(0)) {
    std::size_t i = 0;
    grads->for_each_tensor([&](const std::string&, Mat<Scalar>& g, bool is_trunk) {
      if (!is_trunk) return;
      g += lambda_anchor * (*live[i] - snapshot.trunk[i].second);
      ++i;
    });
  }
  return lambda_anchor / 2 * sq;
}

/// Euclidean distance between the live trunk and the snapshot.
template <class Scalar>
Scalar trunk_distance(const EncoderParams<Scalar>& p, const AnchorSnapshot<Scalar>& snapshot) {
  Scalar sq = 0;
  std::size_t i = 0;
  p.for_each_tensor([&](const std::string&, const Mat<Scalar>& t, bool is_trunk) {
    if (!is_trunk) return;
    sq += (t - snapshot.trunk[i].second).squaredNorm();
    ++i;
  });
  return std::sqrt(sq);
}

// ---------------------------------------------------------------------------
// Sequence building
// ---------------------------------------------------------------------------

/// CLS + cause + SEP + effect + SEP, truncating the longest side first
/// (ties truncate the effect) while keeping at least one token per non-empty
/// side. Errors when both sides tokenize to nothing.
std::vector<int> build_pair_ids(const std::string& cause_text,
                                const std::string& effect_text,
                                const Vocab& vocab, int max_len);

/// CLS + tokens + SEP, tail-truncated to max_len.
std::vector<int> build_sentence_ids(const Sentence& sentence, const Vocab& vocab,
                                    int max_len);

// ---------------------------------------------------------------------------
// Forward / backward
// ---------------------------------------------------------------------------

template <class Scalar>
struct BlockTrace {
  Mat<Scalar> x_in;                  // T x d
  Mat<Scalar> q, k, v;               // T x d
  std::vector<Mat<Scalar>> attn;     // per head, T x T
  Mat<Scalar> ctx;                   // T x d
  Mat<Scalar> r1, x1, zf, af, ff, r2, x2;
  Mat<Scalar> ln1_xhat, ln2_xhat;    // T x d
  Mat<Scalar> ln1_istd, ln2_istd;    // T x 1
};

template <class Scalar>
struct Trace {
  std::vector<int> ids;
  std::vector<Scalar> key_mask;      // 1 real, 0 pad
  Scalar n_real = 0;
  std::vector<BlockTrace<Scalar>> blocks;
  Mat<Scalar> mean, z1, a1;          // pool arch, 1 x *
  Mat<Scalar> hidden;                // T x d (attn) or 1 x hidden (pool)
};

namespace detail {

constexpr double kLnEps = 1e-5;
constexpr double kMaskBias = -1e30;

template <class Scalar>
void layernorm_rows(const Mat<Scalar>& x, const Mat<Scalar>& gain, const Mat<Scalar>& bias,
                    Mat<Scalar>& out, Mat<Scalar>& xhat, Mat<Scalar>& istd) {
  const auto d = static_cast<Scalar>(x.cols());
  out.resize(x.rows(), x.cols());
  xhat.resize(x.rows(), x.cols());
  istd.resize(x.rows(), 1);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Scalar mu = x.row(r).mean();
    const Scalar var = (x.row(r).array() - mu).square().sum() / d;
    const Scalar is = Scalar(1) / std::sqrt(var + static_cast<Scalar>(kLnEps));
    istd(r, 0) = is;
    xhat.row(r) = ((x.row(r).array() - mu) * is).matrix();
    out.row(r) = xhat.row(r).cwiseProduct(gain.row(0)) + bias.row(0);
  }
}

template <class Scalar>
void layernorm_backward(const Mat<Scalar>& dy, const Mat<Scalar>& xhat,
                        const Mat<Scalar>& istd, const Mat<Scalar>& gain,
                        Mat<Scalar>& dx, Mat<Scalar>& dgain, Mat<Scalar>& dbias) {
  const auto d = static_cast<Scalar>(dy.cols());
  dx.resize(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const RowVec<Scalar> dyhat = dy.row(r).cwiseProduct(gain.row(0));
    const Scalar m1 = dyhat.sum() / d;
    const Scalar m2 = dyhat.cwiseProduct(xhat.row(r)).sum() / d;
    dx.row(r) =
        ((dyhat.array() - m1 - xhat.row(r).array() * m2) * istd(r, 0)).matrix();
    dgain.row(0) += dy.row(r).cwiseProduct(xhat.row(r));
    dbias.row(0) += dy.row(r);
  }
}

}  // namespace detail

/// Per-position hidden states. Attn: final-block outputs, T x d. Pool: one
/// pooled row, 1 x hidden. The CLS representation is row 0 either way. PAD
/// positions are excluded from the pool mean and masked out of attention
/// keys, so appending PAD beyond the final SEP never changes row 0.
template <class Scalar>
Mat<Scalar> forward_hidden(const std::vector<int>& ids, const EncoderParams<Scalar>& p,
                           Trace<Scalar>* trace) {
  const auto T = static_cast<Eigen::Index>(ids.size());
  if (T == 0) throw std::invalid_argument("empty input sequence");
  if (T > p.config.max_len) throw std::invalid_argument("sequence exceeds max_len");

  std::vector<Scalar> mask(ids.size());
  Scalar n_real = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    mask[i] = ids[i] == Vocab::kPad ? Scalar(0) : Scalar(1);
    n_real += mask[i];
  }
  if (n_real == Scalar(0)) throw std::invalid_argument("all-PAD input sequence");

  if (trace) {
    trace->ids = ids;
    trace->key_mask = mask;
    trace->n_real = n_real;
  }

  if (p.config.arch == Arch::pool) {
    RowVec<Scalar> mean = RowVec<Scalar>::Zero(p.config.d_model);
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (mask[i] != Scalar(0)) mean += p.embed.row(ids[i]);
    }
    mean /= n_real;
    Mat<Scalar> z1 = mean * p.pool_w1 + p.pool_b1;
    Mat<Scalar> a1 = z1.array().tanh().matrix();
    Mat<Scalar> h = a1 * p.pool_w2 + p.pool_b2;
    if (trace) {
      trace->mean = mean;
      trace->z1 = z1;
      trace->a1 = a1;
      trace->hidden = h;
    }
    return h;
  }

  const int d = p.config.d_model;
  const int heads = p.config.heads;
  const int dh = d / heads;
  const auto scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh)));

  Mat<Scalar> x(T, d);
  for (Eigen::Index i = 0; i < T; ++i) {
    x.row(i) = p.embed.row(ids[static_cast<std::size_t>(i)]) + p.pos.row(i);
  }
  if (trace) trace->blocks.resize(p.blocks.size());

  for (std::size_t b = 0; b < p.blocks.size(); ++b) {
    const auto& blk = p.blocks[b];
    BlockTrace<Scalar> local;
    BlockTrace<Scalar>& tr = trace ? trace->blocks[b] : local;
    tr.x_in = x;
    tr.q = x * blk.wq + blk.bq.row(0).replicate(T, 1);
    tr.k = x * blk.wk + blk.bk.row(0).replicate(T, 1);
    tr.v = x * blk.wv + blk.bv.row(0).replicate(T, 1);
    tr.attn.assign(static_cast<std::size_t>(heads), Mat<Scalar>());
    tr.ctx.resize(T, d);
    for (int h = 0; h < heads; ++h) {
      auto qh = tr.q.middleCols(h * dh, dh);
      auto kh = tr.k.middleCols(h * dh, dh);
      auto vh = tr.v.middleCols(h * dh, dh);
      Mat<Scalar> scores = qh * kh.transpose() * scale;
      for (Eigen::Index j = 0; j < T; ++j) {
        if (mask[static_cast<std::size_t>(j)] == Scalar(0)) {
          scores.col(j).setConstant(static_cast<Scalar>(detail::kMaskBias));
        }
      }
      Mat<Scalar>& a = tr.attn[static_cast<std::size_t>(h)];
      a.resize(T, T);
      for (Eigen::Index r = 0; r < T; ++r) {
        const Scalar mx = scores.row(r).maxCoeff();
        RowVec<Scalar> ex = (scores.row(r).array() - mx).exp().matrix();
        a.row(r) = ex / ex.sum();
      }
      tr.ctx.middleCols(h * dh, dh) = a * vh;
    }
    Mat<Scalar> ao = tr.ctx * blk.wo + blk.bo.row(0).replicate(T, 1);
    tr.r1 = x + ao;
    detail::layernorm_rows(tr.r1, blk.ln1_g, blk.ln1_b, tr.x1, tr.ln1_xhat, tr.ln1_istd);
    tr.zf = tr.x1 * blk.wf1 + blk.bf1.row(0).replicate(T, 1);
    tr.af = tr.zf.array().tanh().matrix();
    tr.ff = tr.af * blk.wf2 + blk.bf2.row(0).replicate(T, 1);
    tr.r2 = tr.x1 + tr.ff;
    detail::layernorm_rows(tr.r2, blk.ln2_g, blk.ln2_b, tr.x2, tr.ln2_xhat, tr.ln2_istd);
    x = tr.x2;
  }
  if (trace) trace->hidden = x;
  return x;
}

/// Accumulate parameter gradients for d(loss)/d(hidden); dh must match the
/// hidden shape produced by forward_hidden for the same trace.
template <class Scalar>
void backward_hidden(const Trace<Scalar>& tr, const Mat<Scalar>& dh,
                     const EncoderParams<Scalar>& p, EncoderParams<Scalar>& g) {
  if (p.config.arch == Arch::pool) {
    g.pool_w2 += tr.a1.transpose() * dh;
    g.pool_b2 += dh;
    Mat<Scalar> da1 = dh * p.pool_w2.transpose();
    Mat<Scalar> dz1 = (da1.array() * (1 - tr.a1.array().square())).matrix();
    g.pool_w1 += tr.mean.transpose() * dz1;
    g.pool_b1 += dz1;
    Mat<Scalar> dmean = dz1 * p.pool_w1.transpose();
    for (std::size_t i = 0; i < tr.ids.size(); ++i) {
      if (tr.key_mask[i] != Scalar(0)) {
        g.embed.row(tr.ids[i]) += dmean.row(0) / tr.n_real;
      }
    }
    return;
  }

  const auto T = static_cast<Eigen::Index>(tr.ids.size());
  const int d = p.config.d_model;
  const int heads = p.config.heads;
  const int dh_cols = d / heads;
  const auto scale = static_cast<Scalar>(1.0 / std::sqrt(static_cast<double>(dh_cols)));

  Mat<Scalar> dx = dh;
  for (std::size_t bi = p.blocks.size(); bi-- > 0;) {
    const auto& blk = p.blocks[bi];
    auto& gblk = g.blocks[bi];
    const auto& btr = tr.blocks[bi];

    Mat<Scalar> dr2;
    detail::layernorm_backward(dx, btr.ln2_xhat, btr.ln2_istd, blk.ln2_g, dr2,
                               gblk.ln2_g, gblk.ln2_b);
    Mat<Scalar> dx1 = dr2;
    gblk.wf2 += btr.af.transpose() * dr2;
    gblk.bf2 += dr2.colwise().sum();
    Mat<Scalar> daf = dr2 * blk.wf2.transpose();
    Mat<Scalar> dzf = (daf.array() * (1 - btr.af.array().square())).matrix();
    gblk.wf1 += btr.x1.transpose() * dzf;
    gblk.bf1 += dzf.colwise().sum();
    dx1 += dzf * blk.wf1.transpose();

    Mat<Scalar> dr1;
    detail::layernorm_backward(dx1, btr.ln1_xhat, btr.ln1_istd, blk.ln1_g, dr1,
                               gblk.ln1_g, gblk.ln1_b);
    Mat<Scalar> dx_in = dr1;
    gblk.wo += btr.ctx.transpose() * dr1;
    gblk.bo += dr1.colwise().sum();
    Mat<Scalar> dctx = dr1 * blk.wo.transpose();

    Mat<Scalar> dq = Mat<Scalar>::Zero(T, d);
    Mat<Scalar> dk = Mat<Scalar>::Zero(T, d);
    Mat<Scalar> dv = Mat<Scalar>::Zero(T, d);
    for (int h = 0; h < heads; ++h) {
      const auto& a = btr.attn[static_cast<std::size_t>(h)];
      auto qh = btr.q.middleCols(h * dh_cols, dh_cols);
      auto kh = btr.k.middleCols(h * dh_cols, dh_cols);
      auto vh = btr.v.middleCols(h * dh_cols, dh_cols);
      auto dctx_h = dctx.middleCols(h * dh_cols, dh_cols);
      Mat<Scalar> da = dctx_h * vh.transpose();
      dv.middleCols(h * dh_cols, dh_cols) += a.transpose() * dctx_h;
      Mat<Scalar> ds(T, T);
      for (Eigen::Index r = 0; r < T; ++r) {
        const Scalar dot = da.row(r).cwiseProduct(a.row(r)).sum();
        ds.row(r) = (a.row(r).array() * (da.row(r).array() - dot)).matrix();
      }
      ds *= scale;
      dq.middleCols(h * dh_cols, dh_cols) += ds * kh;
      dk.middleCols(h * dh_cols, dh_cols) += ds.transpose() * qh;
    }
    gblk.wq += btr.x_in.transpose() * dq;
    gblk.bq += dq.colwise().sum();
    gblk.wk += btr.x_in.transpose() * dk;
    gblk.bk += dk.colwise().sum();
    gblk.wv += btr.x_in.transpose() * dv;
    gblk.bv += dv.colwise().sum();
    dx_in += dq * blk.wq.transpose() + dk * blk.wk.transpose() + dv * blk.wv.transpose();
    dx = dx_in;
  }
  for (Eigen::Index i = 0; i < T; ++i) {
    g.embed.row(tr.ids[static_cast<std::size_t>(i)]) += dx.row(i);
    g.pos.row(i) += dx.row(i);
  }
}

// ---------------------------------------------------------------------------
// Heads
// ---------------------------------------------------------------------------

/// CLS-position representation for a (cause, effect) text pair.
template <class Scalar>
RowVec<Scalar> encode(const std::string& cause_text, const std::string& effect_text,
                      const EncoderParams<Scalar>& p, const Vocab& vocab) {
  const auto ids = build_pair_ids(cause_text, effect_text, vocab, p.config.max_len);
  const Mat<Scalar> hidden = forward_hidden<Scalar>(ids, p, nullptr);
  return hidden.row(0);
}

template <class Scalar>
Scalar score_from_hidden(const Mat<Scalar>& hidden, const EncoderParams<Scalar>& p) {
  return (hidden.row(0) * p.rank_w)(0, 0) + p.rank_b(0, 0);
}

/// Ranking-head scalar f(cause, effect).
template <class Scalar>
Scalar score(const std::string& cause_text, const std::string& effect_text,
             const EncoderParams<Scalar>& p, const Vocab& vocab) {
  const auto ids = build_pair_ids(cause_text, effect_text, vocab, p.config.max_len);
  const Mat<Scalar> hidden = forward_hidden<Scalar>(ids, p, nullptr);
  return score_from_hidden(hidden, p);
}

/// Class logits [negative, positive] for a pair.
template <class Scalar>
RowVec<Scalar> class_logits(const std::string& cause_text, const std::string& effect_text,
                            const EncoderParams<Scalar>& p, const Vocab& vocab) {
  const auto ids = build_pair_ids(cause_text, effect_text, vocab, p.config.max_len);
  const Mat<Scalar> hidden = forward_hidden<Scalar>(ids, p, nullptr);
  RowVec<Scalar> logits = hidden.row(0) * p.cls_w;
  logits += p.cls_b.row(0);
  return logits;
}

/// Positive-class probability from the classification head.
template <class Scalar>
Scalar positive_probability(const std::string& cause_text, const std::string& effect_text,
                            const EncoderParams<Scalar>& p, const Vocab& vocab) {
  const RowVec<Scalar> l = class_logits(cause_text, effect_text, p, vocab);
  const Scalar mx = l.maxCoeff();
  const Scalar e0 = std::exp(l(0) - mx);
  const Scalar e1 = std::exp(l(1) - mx);
  return e1 / (e0 + e1);
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

/// Stable weighted cross entropy over one logits row; writes weight *
/// (softmax - onehot) into dlogits when given.
template <class Scalar>
Scalar weighted_cross_entropy(const RowVec<Scalar>& logits, int label, Scalar weight,
                              RowVec<Scalar>* dlogits = nullptr) {
  const Scalar mx = logits.maxCoeff();
  const RowVec<Scalar> ex = (logits.array() - mx).exp().matrix();
  const Scalar z = ex.sum();
  const Scalar loss = weight * (std::log(z) + mx - logits(label));
  if (dlogits) {
    *dlogits = weight / z * ex;
    (*dlogits)(label) -= weight;
  }
  return loss;
}

/// The margin-ranking kernel: sum over (f_pos, f_neg) of max(0, m - f+ + f-).
template <class Scalar>
Scalar margin_ranking_loss(const std::vector<std::pair<Scalar, Scalar>>& score_pairs,
                           Scalar margin) {
  Scalar total = 0;
  for (const auto& [fp, fn] : score_pairs) {
    const Scalar t = margin - fp + fn;
    if (t > 0) total += t;
  }
  return total;
}

template <class Scalar>
Scalar weight_decay_term(const EncoderParams<Scalar>& p, Scalar lambda,
                         EncoderParams<std::type_identity_t<Scalar>>* grads) {
  if (lambda == Scalar(0)) return 0;
  Scalar sq = 0;
  std::vector<const Mat<Scalar>*> src;
  p.for_each_tensor([&](const std::string&, const Mat<Scalar>& t, bool) {
    sq += t.squaredNorm();
    src.push_back(&t);
  });
  if (grads) {
    std::size_t i = 0;
    grads->for_each_tensor([&](const std::string&, Mat<Scalar>& t, bool) {
      t += lambda * (*src[i]);
      ++i;
    });
  }
  return lambda / 2 * sq;
}

/// Mean over the batch of class_weight * cross-entropy, plus the anchor term
/// when a snapshot is supplied and lambda_anchor > 0.
template <class Scalar>
Scalar loss_cls(const std::vector<LabeledExample>& batch, const EncoderParams<Scalar>& p,
                const Vocab& vocab, const TrainConfig& config,
                const AnchorSnapshot<std::type_identity_t<Scalar>>* snapshot = nullptr,
                EncoderParams<std::type_identity_t<Scalar>>* grads = nullptr) {
  if (batch.empty()) throw std::invalid_argument("loss_cls on empty batch");
  const auto b = static_cast<Scalar>(batch.size());
  Scalar total = 0;
  for (const auto& ex : batch) {
    if (ex.label != 0 && ex.label != 1) {
      throw std::invalid_argument("loss_cls label not in {0,1}");
    }
    const auto ids = build_pair_ids(ex.cause, ex.effect, vocab, config.max_len);
    Trace<Scalar> tr;
    const Mat<Scalar> hidden = forward_hidden<Scalar>(ids, p, grads ? &tr : nullptr);
    RowVec<Scalar> logits = hidden.row(0) * p.cls_w;
    logits += p.cls_b.row(0);
    RowVec<Scalar> dlogits;
    total += weighted_cross_entropy(logits, ex.label,
                                    static_cast<Scalar>(ex.class_weight),
                                    grads ? &dlogits : nullptr);
    if (grads) {
      dlogits /= b;
      grads->cls_w += hidden.row(0).transpose() * dlogits;
      grads->cls_b += dlogits;
      Mat<Scalar> dhid = Mat<Scalar>::Zero(hidden.rows(), hidden.cols());
      dhid.row(0) = dlogits * p.cls_w.transpose();
      backward_hidden(tr, dhid, p, *grads);
    }
  }
  Scalar loss = total / b;
  if (snapshot && config.lambda_anchor > 0) {
    loss += anchor_penalty(p, *snapshot, static_cast<Scalar>(config.lambda_anchor), grads);
  }
  return loss;
}

/// One positive with its sampled corrupted partners; each partner contributes
/// one hinge term.
struct RankGroup {
  LabeledExample positive;
  std::vector<LabeledExample> negatives;
};

/// Group the interleaved dataset layout (positive followed by its negatives).
std::vector<RankGroup> make_rank_groups(const std::vector<LabeledExample>& examples);

/// Sum of hinge terms plus (lambda_wd/2)*||Theta||^2 over all parameters,
/// plus the anchor term when enabled. An empty batch yields the regularizers
/// alone; a positive without partners is an error.
template <class Scalar>
Scalar loss_rank(const std::vector<RankGroup>& batch, const EncoderParams<Scalar>& p,
                 const Vocab& vocab, const TrainConfig& config,
                 const AnchorSnapshot<std::type_identity_t<Scalar>>* snapshot = nullptr,
                 EncoderParams<std::type_identity_t<Scalar>>* grads = nullptr) {
  Scalar total = 0;
  for (const auto& group : batch) {
    if (group.negatives.empty()) {
      throw std::invalid_argument("rank positive without a sampled partner");
    }
    const auto pos_ids =
        build_pair_ids(group.positive.cause, group.positive.effect, vocab, config.max_len);
    Trace<Scalar> pos_tr;
    const Mat<Scalar> pos_hidden =
        forward_hidden<Scalar>(pos_ids, p, grads ? &pos_tr : nullptr);
    const Scalar f_pos = score_from_hidden(pos_hidden, p);
    Scalar d_fpos = 0;
    for (const auto& neg : group.negatives) {
      const auto neg_ids = build_pair_ids(neg.cause, neg.effect, vocab, config.max_len);
      Trace<Scalar> neg_tr;
      const Mat<Scalar> neg_hidden =
          forward_hidden<Scalar>(neg_ids, p, grads ? &neg_tr : nullptr);
      const Scalar f_neg = score_from_hidden(neg_hidden, p);
      const Scalar hinge = static_cast<Scalar>(config.margin) - f_pos + f_neg;
      if (hinge > 0) {
        total += hinge;
        if (grads) {
          d_fpos -= 1;
          grads->rank_w += neg_hidden.row(0).transpose();
          grads->rank_b(0, 0) += 1;
          Mat<Scalar> dhid = Mat<Scalar>::Zero(neg_hidden.rows(), neg_hidden.cols());
          dhid.row(0) = p.rank_w.transpose();
          backward_hidden(neg_tr, dhid, p, *grads);
        }
      }
    }
    if (grads && d_fpos != Scalar(0)) {
      grads->rank_w += d_fpos * pos_hidden.row(0).transpose();
      grads->rank_b(0, 0) += d_fpos;
      Mat<Scalar> dhid = Mat<Scalar>::Zero(pos_hidden.rows(), pos_hidden.cols());
      dhid.row(0) = d_fpos * p.rank_w.transpose();
      backward_hidden(pos_tr, dhid, p, *grads);
    }
  }
  total += weight_decay_term(p, static_cast<Scalar>(config.lambda_wd), grads);
  if (snapshot && config.lambda_anchor > 0) {
    total += anchor_penalty(p, *snapshot, static_cast<Scalar>(config.lambda_anchor), grads);
  }
  return total;
}

/// One masked sequence: ids already carry MASK substitutions; targets hold
/// (position, original id) entries.
struct MaskedItem {
  std::vector<int> ids;
  std::vector<std::pair<int, int>> targets;
};

/// Unweighted cross entropy averaged over all masked positions in the batch;
/// zero masked positions yields loss 0 and no gradient.
template <class Scalar>
Scalar loss_mlm(const std::vector<MaskedItem>& batch, const EncoderParams<Scalar>& p,
                EncoderParams<std::type_identity_t<Scalar>>* grads = nullptr) {
  std::size_t n_targets = 0;
  for (const auto& item : batch) n_targets += item.targets.size();
  if (n_targets == 0) return 0;
  const auto denom = static_cast<Scalar>(n_targets);

  Scalar total = 0;
  for (const auto& item : batch) {
    if (item.targets.empty()) continue;
    Trace<Scalar> tr;
    const Mat<Scalar> hidden = forward_hidden<Scalar>(item.ids, p, grads ? &tr : nullptr);
    Mat<Scalar> dhid;
    if (grads) dhid = Mat<Scalar>::Zero(hidden.rows(), hidden.cols());
    for (const auto& [pos, original] : item.targets) {
      const Eigen::Index row = p.config.arch == Arch::pool ? 0 : pos;
      RowVec<Scalar> logits = p.config.tie_mlm
                                  ? RowVec<Scalar>(hidden.row(row) * p.embed.transpose())
                                  : RowVec<Scalar>(hidden.row(row) * p.mlm_w);
      logits += p.mlm_b.row(0);
      RowVec<Scalar> dlogits;
      total += weighted_cross_entropy(logits, original, Scalar(1),
                                      grads ? &dlogits : nullptr);
      if (grads) {
        dlogits /= denom;
        if (p.config.tie_mlm) {
          grads->embed += dlogits.transpose() * hidden.row(row);
          dhid.row(row) += dlogits * p.embed;
        } else {
          grads->mlm_w += hidden.row(row).transpose() * dlogits;
          dhid.row(row) += dlogits * p.mlm_w.transpose();
        }
        grads->mlm_b += dlogits;
      }
    }
    if (grads) backward_hidden(tr, dhid, p, *grads);
  }
  return total / denom;
}

}  // namespace causalkit
