#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "causalkit/corpus.hpp"
#include "causalkit/types.hpp"
#include "helpers.hpp"

using namespace causalkit;

namespace {

std::vector<std::string> surfaces(const std::vector<Token>& toks) {
  std::vector<std::string> out;
  for (const auto& t : toks) out.push_back(t.surface);
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ' ';
    out += v[i];
  }
  return out;
}

std::string alnum_lower(const std::string& s) {
  std::string out;
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80 || std::isalnum(u)) {
      out += u < 0x80 ? static_cast<char>(std::tolower(u)) : c;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("tokenize strips punctuation and keeps internal hyphens") {
  CHECK(surfaces(tokenize("The Virus-Caused Infection.")) ==
        std::vector<std::string>{"the", "virus-caused", "infection"});
  CHECK(tokenize("   ").empty());
  CHECK(surfaces(tokenize("sleep-inducing pills!")) ==
        std::vector<std::string>{"sleep-inducing", "pills"});

  const auto toks = tokenize("well-known -- fact (really)");
  CHECK(surfaces(toks) == std::vector<std::string>{"well-known", "fact", "really"});
  CHECK(toks[0].has_internal_hyphen);
  CHECK_FALSE(toks[1].has_internal_hyphen);
}

TEST_CASE("tokenize is idempotent on its own output") {
  Rng rng(7);
  const std::string charset = "aAzZ09-.,!?  '\"(#)";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const std::size_t len = rng.index(40);
    for (std::size_t i = 0; i < len; ++i) s += charset[rng.index(charset.size())];
    const auto once = surfaces(tokenize(s));
    const auto twice = surfaces(tokenize(join(once)));
    CHECK(once == twice);
  }
}

TEST_CASE("sentence splitting") {
  CHECK(split_sentences("").empty());

  const auto two = split_sentences("It rained. Roads flooded.");
  REQUIRE(two.size() == 2);
  CHECK(two[0].text() == "it rained");
  CHECK(two[1].text() == "roads flooded");
  CHECK(two[0].offset == 0);
  CHECK(two[1].offset == 1);

  // Period followed by whitespace splits, even mid-abbreviation.
  const auto ver = split_sentences("Ver. 2 shipped");
  REQUIRE(ver.size() == 2);
  CHECK(ver[0].text() == "ver");
  CHECK(ver[1].text() == "2 shipped");

  const auto bangs = split_sentences("Stop! Why? Go now.");
  REQUIRE(bangs.size() == 3);
  CHECK(bangs[2].text() == "go now");
}

TEST_CASE("splitting plus tokenization loses no alphanumeric character") {
  Rng rng(11);
  const std::string charset = "abcXYZ012.!? -,";
  for (int trial = 0; trial < 200; ++trial) {
    std::string s;
    const std::size_t len = rng.index(60);
    for (std::size_t i = 0; i < len; ++i) s += charset[rng.index(charset.size())];
    std::string from_tokens;
    for (const auto& sent : split_sentences(s)) {
      for (const auto& t : sent.tokens) from_tokens += alnum_lower(t.surface);
    }
    CHECK(from_tokens == alnum_lower(s));
  }
}

TEST_CASE("build_vocab thresholds, tie order, specials") {
  {
    std::istringstream in("a a b");
    const Vocab v = build_vocab(in, 2);
    CHECK(v.size() == Vocab::kNumSpecials + 1);
    CHECK(v.id("a") == Vocab::kNumSpecials);
    CHECK(v.id("b") == Vocab::kUnk);
  }
  {
    std::istringstream in("a a b b");
    const Vocab v = build_vocab(in, 1);
    CHECK(v.id("a") == 5);  // frequency tie broken lexicographically
    CHECK(v.id("b") == 6);
  }
  {
    std::istringstream in("");
    const Vocab v = build_vocab(in, 1);
    CHECK(v.size() == Vocab::kNumSpecials);
  }
  CHECK_THROWS_AS(Vocab::from_counted({}, 0), std::invalid_argument);
}

TEST_CASE("build_vocab matches an independent frequency counter on ~1MB") {
  Rng rng(13);
  std::vector<std::string> words;
  for (int i = 0; i < 400; ++i) words.push_back("w" + std::to_string(i));
  std::vector<std::string> docs;
  std::size_t bytes = 0;
  while (bytes < (1u << 20)) {
    std::string line;
    for (int t = 0; t < 12; ++t) {
      if (t) line += ' ';
      line += words[rng.index(words.size())];
    }
    bytes += line.size() + 1;
    docs.push_back(std::move(line));
  }

  const auto oracle = testkit::naive_frequencies(docs);
  long long expected_kept = 0;
  for (const auto& [w, c] : oracle) {
    if (c >= 5) ++expected_kept;
  }

  std::string all;
  for (const auto& d : docs) {
    all += d;
    all += '\n';
  }
  std::istringstream in(all);
  const Vocab v = build_vocab(in, 5);
  CHECK(v.size() - Vocab::kNumSpecials == expected_kept);
  for (const auto& [w, c] : oracle) {
    if (c >= 5) {
      REQUIRE(v.contains(w));
      CHECK(v.count(v.id(w)) == c);
    } else {
      CHECK_FALSE(v.contains(w));
    }
  }
}

TEST_CASE("vocab id assignment is deterministic across runs") {
  Rng rng(17);
  std::string corpus;
  for (int i = 0; i < 3000; ++i) {
    corpus += "tok" + std::to_string(rng.index(50));
    corpus += i % 11 == 0 ? '\n' : ' ';
  }
  std::istringstream in1(corpus), in2(corpus);
  const Vocab a = build_vocab(in1, 2);
  const Vocab b = build_vocab(in2, 2);
  REQUIRE(a.size() == b.size());
  for (int id = 0; id < a.size(); ++id) {
    CHECK(a.token(id) == b.token(id));
    CHECK(a.count(id) == b.count(id));
  }
  CHECK(a.hash() == b.hash());
}

TEST_CASE("vocab file round trip") {
  std::istringstream in("roads flooded roads rained roads flooded");
  const Vocab v = build_vocab(in, 1);
  const auto path = std::filesystem::temp_directory_path() / "ck_vocab_test.tsv";
  v.save(path.string(), "test artifact");
  const Vocab loaded = Vocab::load(path.string());
  REQUIRE(loaded.size() == v.size());
  for (int id = 0; id < v.size(); ++id) {
    CHECK(loaded.token(id) == v.token(id));
    CHECK(loaded.count(id) == v.count(id));
  }
  CHECK(loaded.min_count() == v.min_count());
  CHECK(loaded.hash() == v.hash());
  std::filesystem::remove(path);

  CHECK_THROWS_AS(Vocab::load("/nonexistent/vocab.tsv"), DataError);
}

TEST_CASE("read_documents walks directories in filename order") {
  namespace fs = std::filesystem;
  const auto dir = fs::temp_directory_path() / "ck_docs_test";
  fs::create_directories(dir);
  std::ofstream(dir / "b.txt") << "second\n";
  std::ofstream(dir / "a.txt") << "first\n";
  const auto docs = read_documents(dir.string());
  REQUIRE(docs.size() == 2);
  CHECK(docs[0] == "first");
  CHECK(docs[1] == "second");
  fs::remove_all(dir);

  CHECK_THROWS_AS(read_documents("/nonexistent/corpus.txt"), DataError);
}
