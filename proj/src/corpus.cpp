#include "causalkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "causalkit/types.hpp"

namespace causalkit {

namespace {

bool is_ascii_punct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

bool is_space(unsigned char c) { return c < 0x80 && std::isspace(c); }

std::string lowercase_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

const char* kSpecialSurfaces[Vocab::kNumSpecials] = {"<pad>", "<unk>", "<cls>",
                                                     "<sep>", "<mask>"};

}  // namespace

std::string Sentence::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].surface;
  }
  return out;
}

std::vector<Token> tokenize(std::string_view sentence_text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = sentence_text.size();
  while (i < n) {
    while (i < n && is_space(static_cast<unsigned char>(sentence_text[i]))) ++i;
    std::size_t j = i;
    while (j < n && !is_space(static_cast<unsigned char>(sentence_text[j]))) ++j;
    if (j > i) {
      std::string_view raw = sentence_text.substr(i, j - i);
      std::size_t b = 0, e = raw.size();
      while (b < e && is_ascii_punct(static_cast<unsigned char>(raw[b]))) ++b;
      while (e > b && is_ascii_punct(static_cast<unsigned char>(raw[e - 1]))) --e;
      if (e > b) {
        Token t;
        t.surface = lowercase_ascii(raw.substr(b, e - b));
        t.has_internal_hyphen =
            t.surface.find('-') != std::string::npos;
        out.push_back(std::move(t));
      }
    }
    i = j;
  }
  return out;
}

std::vector<std::string> split_sentence_texts(std::string_view text) {
  std::vector<std::string> spans;
  std::size_t start = 0;
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const char c = text[i];
    if ((c == '.' || c == '!' || c == '?') && i + 1 < n &&
        is_space(static_cast<unsigned char>(text[i + 1]))) {
      spans.emplace_back(text.substr(start, i + 1 - start));
      start = i + 1;
    }
  }
  if (start < n) spans.emplace_back(text.substr(start));
  // Drop spans that are pure whitespace.
  std::vector<std::string> out;
  for (auto& s : spans) {
    const bool blank = std::all_of(s.begin(), s.end(), [](char c) {
      return is_space(static_cast<unsigned char>(c));
    });
    if (!blank) out.push_back(std::move(s));
  }
  return out;
}

std::vector<Sentence> split_sentences(std::string_view document_text,
                                      const std::string& doc_id) {
  std::vector<Sentence> out;
  int offset = 0;
  for (const auto& span : split_sentence_texts(document_text)) {
    Sentence s;
    s.tokens = tokenize(span);
    if (s.tokens.empty()) continue;
    s.doc_id = doc_id;
    s.offset = offset++;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Vocab
// ---------------------------------------------------------------------------

Vocab::Vocab() {
  for (int i = 0; i < kNumSpecials; ++i) {
    id_to_token_.emplace_back(kSpecialSurfaces[i]);
    token_to_id_[kSpecialSurfaces[i]] = i;
    counts_.push_back(0);
  }
}

int Vocab::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? kUnk : it->second;
}

const std::string& Vocab::token(int id) const {
  return id_to_token_.at(static_cast<std::size_t>(id));
}

bool Vocab::contains(std::string_view token) const {
  return token_to_id_.count(std::string(token)) != 0;
}

std::uint64_t Vocab::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    h = fnv1a(id_to_token_[i].data(), id_to_token_[i].size(), h);
    h = fnv1a(&i, sizeof(i), h);
  }
  return h;
}

Vocab Vocab::from_counted(
    const std::vector<std::pair<std::string, std::int64_t>>& token_counts,
    int min_count) {
  if (min_count < 1) throw std::invalid_argument("min_count must be >= 1");
  std::vector<std::pair<std::string, std::int64_t>> kept;
  kept.reserve(token_counts.size());
  for (const auto& [tok, cnt] : token_counts) {
    if (cnt >= min_count) kept.emplace_back(tok, cnt);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  Vocab v;
  v.min_count_ = min_count;
  for (const auto& [tok, cnt] : kept) {
    v.token_to_id_[tok] = static_cast<int>(v.id_to_token_.size());
    v.id_to_token_.push_back(tok);
    v.counts_.push_back(cnt);
  }
  return v;
}

namespace {

Vocab vocab_from_count_map(
    const std::unordered_map<std::string, std::int64_t>& counts,
    int min_count) {
  std::vector<std::pair<std::string, std::int64_t>> flat(counts.begin(),
                                                         counts.end());
  return Vocab::from_counted(flat, min_count);
}

}  // namespace

Vocab build_vocab(std::istream& corpus, int min_count) {
  std::unordered_map<std::string, std::int64_t> counts;
  std::string line;
  while (std::getline(corpus, line)) {
    for (const auto& tok : tokenize(line)) ++counts[tok.surface];
  }
  return vocab_from_count_map(counts, min_count);
}

Vocab build_vocab(const std::vector<Sentence>& sentences, int min_count) {
  std::unordered_map<std::string, std::int64_t> counts;
  for (const auto& s : sentences) {
    for (const auto& tok : s.tokens) ++counts[tok.surface];
  }
  return vocab_from_count_map(counts, min_count);
}

void Vocab::save(const std::string& path, const std::string& meta_comment) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write vocab file: " + path);
  out << id_to_token_.size() << ' ' << min_count_ << '\n';
  if (!meta_comment.empty()) out << "# " << meta_comment << '\n';
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    out << id_to_token_[i] << '\t' << i << '\t' << counts_[i] << '\n';
  }
  if (!out) throw DataError("failed writing vocab file: " + path);
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read vocab file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty vocab file: " + path);
  std::istringstream header(line);
  std::size_t n_entries = 0;
  int min_count = 0;
  if (!(header >> n_entries >> min_count)) {
    throw DataError("bad vocab header in " + path);
  }
  Vocab v;
  v.min_count_ = min_count;
  std::size_t seen = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line[0] == '#') continue;
    if (line.empty()) continue;
    const auto t1 = line.find('\t');
    const auto t2 = line.find('\t', t1 == std::string::npos ? 0 : t1 + 1);
    if (t1 == std::string::npos || t2 == std::string::npos) {
      throw DataError("bad vocab line in " + path + ": " + line);
    }
    std::string tok = line.substr(0, t1);
    const int id = std::stoi(line.substr(t1 + 1, t2 - t1 - 1));
    const std::int64_t cnt = std::stoll(line.substr(t2 + 1));
    if (id < kNumSpecials) {
      if (tok != kSpecialSurfaces[id]) {
        throw DataError("unexpected special token in " + path + ": " + tok);
      }
    } else {
      if (id != static_cast<int>(v.id_to_token_.size())) {
        throw DataError("non-contiguous id in " + path + ": " + line);
      }
      v.token_to_id_[tok] = id;
      v.id_to_token_.push_back(tok);
      v.counts_.push_back(cnt);
    }
    ++seen;
  }
  if (seen != n_entries) {
    throw DataError("vocab entry count mismatch in " + path);
  }
  return v;
}

std::vector<std::string> read_documents(const std::string& path) {
  namespace fs = std::filesystem;
  std::vector<std::string> files;
  std::error_code ec;
  if (fs::is_directory(path, ec)) {
    for (const auto& entry : fs::directory_iterator(path)) {
      if (entry.is_regular_file()) files.push_back(entry.path().string());
    }
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(path);
  }
  std::vector<std::string> docs;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw DataError("cannot read corpus file: " + f);
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      docs.push_back(line);
    }
  }
  return docs;
}

}  // namespace causalkit
