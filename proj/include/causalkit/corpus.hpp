#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace causalkit {

/// One lowercase text unit. Leading/trailing punctuation is stripped at
/// construction; internal hyphens (and other interior characters) survive.
struct Token {
  std::string surface;
  bool has_internal_hyphen = false;

  bool operator==(const Token& o) const { return surface == o.surface; }
};

struct Sentence {
  std::vector<Token> tokens;
  std::string doc_id;
  int offset = 0;  // sentence index within the document

  std::string text() const;  // tokens joined by single spaces
};

// ---------------------------------------------------------------------------
// Tokenization
// ---------------------------------------------------------------------------

/// Lowercase, split on whitespace, strip leading/trailing ASCII punctuation.
/// Bytes >= 0x80 are passed through untouched, so UTF-8 content survives.
/// Empty residues are dropped.
std::vector<Token> tokenize(std::string_view sentence_text);

/// Split raw document text into sentence spans. A span ends at '.', '!' or
/// '?' immediately followed by whitespace. The concatenation of the spans
/// covers all non-whitespace input.
std::vector<std::string> split_sentence_texts(std::string_view document_text);

/// Sentence spans tokenized; spans with no tokens are dropped.
std::vector<Sentence> split_sentences(std::string_view document_text,
                                      const std::string& doc_id = "");

// ---------------------------------------------------------------------------
// Vocabulary
// ---------------------------------------------------------------------------

/// Token ids with a fixed special layout. Non-special ids are assigned by
/// descending corpus frequency, ties broken lexicographically, so two runs
/// over the same stream produce identical maps.
class Vocab {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumSpecials = 5;

  Vocab();

  /// Id for a surface form; kUnk when absent.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  std::int64_t count(int id) const { return counts_.at(static_cast<std::size_t>(id)); }
  bool contains(std::string_view token) const;

  int size() const { return static_cast<int>(id_to_token_.size()); }
  int min_count() const { return min_count_; }

  /// FNV fingerprint over (token, id) entries; stored in checkpoints.
  std::uint64_t hash() const;

  void save(const std::string& path,
            const std::string& meta_comment = "") const;
  static Vocab load(const std::string& path);

  /// Builder access; ordinary callers should use build_vocab().
  static Vocab from_counted(
      const std::vector<std::pair<std::string, std::int64_t>>& token_counts,
      int min_count);

 private:
  std::unordered_map<std::string, int> token_to_id_;
  std::vector<std::string> id_to_token_;
  std::vector<std::int64_t> counts_;
  int min_count_ = 1;
};

/// Count tokens over a corpus stream (one document per line) and keep those
/// occurring at least min_count times. Specials are always present.
Vocab build_vocab(std::istream& corpus, int min_count);

/// Same over an already tokenized sentence collection.
Vocab build_vocab(const std::vector<Sentence>& sentences, int min_count);

// ---------------------------------------------------------------------------
// Corpus files
// ---------------------------------------------------------------------------

/// Read one-document-per-line files. `path` may be a single file or a
/// directory of files (walked in lexicographic filename order). Throws
/// DataError naming the path when unreadable.
std::vector<std::string> read_documents(const std::string& path);

}  // namespace causalkit
