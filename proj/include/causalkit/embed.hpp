#pragma once

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "causalkit/corpus.hpp"
#include "causalkit/pairs.hpp"
#include "causalkit/types.hpp"

namespace causalkit {

/// Separate cause-role / effect-role embedding matrices. Row r of U is the
/// vector of cause_words[r]; likewise V and effect_words.
template <class Scalar>
struct CausalEmbeddings {
  std::vector<std::string> cause_words;
  std::vector<std::string> effect_words;
  std::unordered_map<std::string, int> cause_index;
  std::unordered_map<std::string, int> effect_index;
  Mat<Scalar> U;
  Mat<Scalar> V;

  int dim() const { return static_cast<int>(U.cols()); }

  int cause_row(const std::string& w) const {
    auto it = cause_index.find(w);
    return it == cause_index.end() ? -1 : it->second;
  }
  int effect_row(const std::string& w) const {
    auto it = effect_index.find(w);
    return it == effect_index.end() ? -1 : it->second;
  }
};

struct EmbedTrainConfig {
  int dim = 100;
  int epochs = 11;
  double margin = 1.0;
  int negatives = 1;
  double learning_rate = 0.05;
  std::uint64_t seed = 42;
};

namespace detail {

/// Word list ordered by descending frequency, ties lexicographic.
inline std::vector<std::string> ranked_words(
    const std::unordered_map<std::string, long long>& counts) {
  std::vector<std::pair<std::string, long long>> v(counts.begin(), counts.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(v.size());
  for (auto& [w, c] : v) words.push_back(w);
  return words;
}

inline std::vector<std::string> surfaces(const std::string& text) {
  std::vector<std::string> out;
  for (const auto& t : tokenize(text)) out.push_back(t.surface);
  return out;
}

}  // namespace detail

/// Argmax token pair of the cross inner products; rows are -1 when every
/// token on one side is out of vocabulary (score 0 by convention).
template <class Scalar>
struct MaxMatch {
  int cause_row = -1;
  int effect_row = -1;
  Scalar score = 0;
};

template <class Scalar>
MaxMatch<Scalar> max_match(const std::vector<int>& cause_rows,
                           const std::vector<int>& effect_rows,
                           const CausalEmbeddings<Scalar>& emb) {
  MaxMatch<Scalar> best;
  bool first = true;
  for (int c : cause_rows) {
    if (c < 0) continue;
    for (int e : effect_rows) {
      if (e < 0) continue;
      const Scalar s = emb.U.row(c).dot(emb.V.row(e));
      if (first || s > best.score) {
        best = {c, e, s};
        first = false;
      }
    }
  }
  return best;
}

/// Max-Matching score of two token lists: the maximum inner product between
/// any in-vocabulary cause token and effect token; 0 when either side is
/// entirely OOV.
template <class Scalar>
Scalar max_match_score(const std::vector<std::string>& cause_tokens,
                       const std::vector<std::string>& effect_tokens,
                       const CausalEmbeddings<Scalar>& emb) {
  std::vector<int> cr, er;
  for (const auto& w : cause_tokens) cr.push_back(emb.cause_row(w));
  for (const auto& w : effect_tokens) er.push_back(emb.effect_row(w));
  return max_match(cr, er, emb).score;
}

/// Hinge loss max(0, margin - s(C,E) + s(C,E')) with subgradient flowing only
/// through the argmax token pair of each score. Gradients accumulate into the
/// sparse row maps.
template <class Scalar>
Scalar hinge_loss_grad(const CausalEmbeddings<Scalar>& emb,
                       const std::vector<int>& cause_rows,
                       const std::vector<int>& effect_rows,
                       const std::vector<int>& neg_effect_rows, Scalar margin,
                       std::map<int, RowVec<Scalar>>* grad_u,
                       std::map<int, RowVec<Scalar>>* grad_v) {
  const auto pos = max_match(cause_rows, effect_rows, emb);
  const auto neg = max_match(cause_rows, neg_effect_rows, emb);
  if (pos.cause_row < 0 || neg.cause_row < 0) return 0;
  const Scalar loss = margin - pos.score + neg.score;
  if (loss <= 0) return 0;
  if (grad_u && grad_v) {
    auto add = [](std::map<int, RowVec<Scalar>>& g, int row, const RowVec<Scalar>& d) {
      auto it = g.find(row);
      if (it == g.end()) {
        g.emplace(row, d);
      } else {
        it->second += d;
      }
    };
    add(*grad_u, pos.cause_row, RowVec<Scalar>(-emb.V.row(pos.effect_row)));
    add(*grad_v, pos.effect_row, RowVec<Scalar>(-emb.U.row(pos.cause_row)));
    add(*grad_u, neg.cause_row, RowVec<Scalar>(emb.V.row(neg.effect_row)));
    add(*grad_v, neg.effect_row, RowVec<Scalar>(emb.U.row(neg.cause_row)));
  }
  return loss;
}

/// Train cause/effect embeddings on positive sentence-level pairs with the
/// hinge objective above; the vocabularies are the distinct cause-side and
/// effect-side tokens of the training pairs. Bit-deterministic given
/// (seed, data order, config).
template <class Scalar>
CausalEmbeddings<Scalar> train_embeddings(const std::vector<CausalPair>& pairs,
                                          const EmbedTrainConfig& config) {
  if (pairs.empty()) throw std::invalid_argument("empty embedding training set");
  if (config.dim < 1) throw std::invalid_argument("embedding dim must be >= 1");

  std::unordered_map<std::string, long long> cause_counts, effect_counts;
  std::vector<std::vector<std::string>> cause_toks(pairs.size());
  std::vector<std::vector<std::string>> effect_toks(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    cause_toks[i] = detail::surfaces(pairs[i].cause);
    effect_toks[i] = detail::surfaces(pairs[i].effect);
    for (const auto& w : cause_toks[i]) ++cause_counts[w];
    for (const auto& w : effect_toks[i]) ++effect_counts[w];
  }

  CausalEmbeddings<Scalar> emb;
  emb.cause_words = detail::ranked_words(cause_counts);
  emb.effect_words = detail::ranked_words(effect_counts);
  for (std::size_t i = 0; i < emb.cause_words.size(); ++i) {
    emb.cause_index[emb.cause_words[i]] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < emb.effect_words.size(); ++i) {
    emb.effect_index[emb.effect_words[i]] = static_cast<int>(i);
  }

  Rng rng(config.seed, /*stream=*/0xe3bd);
  const double bound = 0.5 / config.dim;
  auto init = [&](Mat<Scalar>& m, std::size_t rows) {
    m.resize(static_cast<Eigen::Index>(rows), config.dim);
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
      for (Eigen::Index c = 0; c < m.cols(); ++c) {
        m(r, c) = static_cast<Scalar>(rng.uniform(-bound, bound));
      }
    }
  };
  init(emb.U, emb.cause_words.size());
  init(emb.V, emb.effect_words.size());

  // Row-id views of the training pairs; usable pairs have at least one
  // in-vocabulary token per side.
  std::vector<std::vector<int>> cause_rows(pairs.size()), effect_rows(pairs.size());
  std::vector<std::size_t> usable;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    for (const auto& w : cause_toks[i]) cause_rows[i].push_back(emb.cause_row(w));
    for (const auto& w : effect_toks[i]) effect_rows[i].push_back(emb.effect_row(w));
    const bool c_ok = std::any_of(cause_rows[i].begin(), cause_rows[i].end(),
                                  [](int r) { return r >= 0; });
    const bool e_ok = std::any_of(effect_rows[i].begin(), effect_rows[i].end(),
                                  [](int r) { return r >= 0; });
    if (c_ok && e_ok) usable.push_back(i);
  }
  if (usable.empty()) throw std::invalid_argument("no usable embedding training pairs");

  const auto lr = static_cast<Scalar>(config.learning_rate);
  const auto margin = static_cast<Scalar>(config.margin);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::vector<std::size_t> order = usable;
    rng.shuffle(order);
    for (const std::size_t i : order) {
      for (int k = 0; k < config.negatives; ++k) {
        std::size_t j = usable[rng.index(usable.size())];
        if (usable.size() > 1) {
          while (j == i) j = usable[rng.index(usable.size())];
        }
        std::map<int, RowVec<Scalar>> gu, gv;
        hinge_loss_grad(emb, cause_rows[i], effect_rows[i], effect_rows[j],
                        margin, &gu, &gv);
        for (const auto& [row, g] : gu) emb.U.row(row) -= lr * g;
        for (const auto& [row, g] : gv) emb.V.row(row) -= lr * g;
      }
    }
  }
  return emb;
}

/// All (cause, effect) rows with inner product strictly above threshold,
/// descending weight, ties lexicographic. top_k_per_cause > 0 caps emissions
/// per cause row before the global sort. Thread-count invariant.
template <class Scalar>
std::vector<CausalPair> harvest(const CausalEmbeddings<Scalar>& emb,
                                double threshold, int top_k_per_cause = 0,
                                int threads = 1) {
  const auto n_cause = static_cast<std::size_t>(emb.U.rows());
  std::vector<std::vector<std::pair<double, int>>> per_row(n_cause);

  auto scan_rows = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      RowVec<Scalar> scores = emb.U.row(static_cast<Eigen::Index>(i)) *
                              emb.V.transpose();
      auto& hits = per_row[i];
      for (Eigen::Index j = 0; j < scores.size(); ++j) {
        const double s = static_cast<double>(scores(j));
        if (s > threshold) hits.emplace_back(s, static_cast<int>(j));
      }
      if (top_k_per_cause > 0 &&
          hits.size() > static_cast<std::size_t>(top_k_per_cause)) {
        std::sort(hits.begin(), hits.end(), [&](const auto& a, const auto& b) {
          if (a.first != b.first) return a.first > b.first;
          return emb.effect_words[static_cast<std::size_t>(a.second)] <
                 emb.effect_words[static_cast<std::size_t>(b.second)];
        });
        hits.resize(static_cast<std::size_t>(top_k_per_cause));
      }
    }
  };

  if (threads <= 1 || n_cause < 2) {
    scan_rows(0, n_cause);
  } else {
    const std::size_t nchunks = std::min<std::size_t>(
        static_cast<std::size_t>(threads), n_cause);
    std::vector<std::thread> workers;
    for (std::size_t c = 0; c < nchunks; ++c) {
      workers.emplace_back(scan_rows, n_cause * c / nchunks,
                           n_cause * (c + 1) / nchunks);
    }
    for (auto& w : workers) w.join();
  }

  std::vector<CausalPair> out;
  for (std::size_t i = 0; i < n_cause; ++i) {
    for (const auto& [s, j] : per_row[i]) {
      CausalPair p;
      p.cause = emb.cause_words[i];
      p.effect = emb.effect_words[static_cast<std::size_t>(j)];
      p.level = PairLevel::word;
      p.source = PairSource::embedding;
      p.label = 1;
      p.weight = s;
      out.push_back(std::move(p));
    }
  }
  std::sort(out.begin(), out.end(), [](const CausalPair& a, const CausalPair& b) {
    if (*a.weight != *b.weight) return *a.weight > *b.weight;
    if (a.cause != b.cause) return a.cause < b.cause;
    return a.effect < b.effect;
  });
  return out;
}

/// Text embedding file: first line `n d`, optional '#' comments, then one
/// `token v1 ... vd` row per word.
template <class Scalar>
void save_embedding_matrix(const std::string& path,
                           const std::vector<std::string>& words,
                           const Mat<Scalar>& m,
                           const std::string& meta_comment = "") {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write embedding file: " + path);
  out << words.size() << ' ' << m.cols() << '\n';
  if (!meta_comment.empty()) out << "# " << meta_comment << '\n';
  for (std::size_t i = 0; i < words.size(); ++i) {
    out << words[i];
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      out << ' ' << format_double(static_cast<double>(m(static_cast<Eigen::Index>(i), c)));
    }
    out << '\n';
  }
  if (!out) throw DataError("failed writing embedding file: " + path);
}

template <class Scalar>
void load_embedding_matrix(const std::string& path, std::vector<std::string>& words,
                           Mat<Scalar>& m) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read embedding file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty embedding file: " + path);
  std::size_t n = 0;
  int d = 0;
  {
    std::istringstream header(line);
    if (!(header >> n >> d) || d < 1) {
      throw DataError("bad embedding header in " + path);
    }
  }
  words.clear();
  m.resize(static_cast<Eigen::Index>(n), d);
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (row >= n) throw DataError("too many embedding rows in " + path);
    std::istringstream ls(line);
    std::string word;
    ls >> word;
    words.push_back(word);
    for (int c = 0; c < d; ++c) {
      double v = 0;
      if (!(ls >> v)) throw DataError("short embedding row in " + path);
      m(static_cast<Eigen::Index>(row), c) = static_cast<Scalar>(v);
    }
    ++row;
  }
  if (row != n) throw DataError("embedding row count mismatch in " + path);
}

template <class Scalar>
void save_embeddings(const CausalEmbeddings<Scalar>& emb,
                     const std::string& cause_path, const std::string& effect_path,
                     const std::string& meta_comment = "") {
  save_embedding_matrix(cause_path, emb.cause_words, emb.U, meta_comment);
  save_embedding_matrix(effect_path, emb.effect_words, emb.V, meta_comment);
}

template <class Scalar>
CausalEmbeddings<Scalar> load_embeddings(const std::string& cause_path,
                                         const std::string& effect_path) {
  CausalEmbeddings<Scalar> emb;
  load_embedding_matrix(cause_path, emb.cause_words, emb.U);
  load_embedding_matrix(effect_path, emb.effect_words, emb.V);
  if (emb.U.cols() != emb.V.cols()) {
    throw DataError("embedding dimension mismatch between " + cause_path +
                    " and " + effect_path);
  }
  for (std::size_t i = 0; i < emb.cause_words.size(); ++i) {
    emb.cause_index[emb.cause_words[i]] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < emb.effect_words.size(); ++i) {
    emb.effect_index[emb.effect_words[i]] = static_cast<int>(i);
  }
  return emb;
}

}  // namespace causalkit
