#include <doctest.h>

#include <filesystem>

#include "gen.hpp"
#include "oral/embed.hpp"
#include "oral/error.hpp"

using namespace oral;

namespace {

std::vector<Token> tokens_of(const std::vector<std::string>& w) {
  return Utterance::from_words(w).tokens;
}

}  // namespace

TEST_CASE("lookup provider returns stored rows and the unknown row") {
  LookupProvider p({"chat", "le"}, 4, 1);
  auto m = p.embed_span(tokens_of({"le", "chat", "zzz"}), "r", 0);
  for (std::size_t j = 0; j < 4; ++j) {
    CHECK(m(0, j) == p.table().row(2)[j]);
    CHECK(m(1, j) == p.table().row(1)[j]);
    CHECK(m(2, j) == p.table().row(0)[j]);
  }
  CHECK(p.id("zzz") == 0);
  CHECK_THROWS_AS(LookupProvider({"a", "a"}, 4, 1), ValidationError);

  std::vector<std::string> w{"b", "a", "b"};
  std::vector<Utterance> corpus{Utterance::from_words(w)};
  CHECK(LookupProvider::build(corpus, 3, 1).vocab() == std::vector<std::string>{"a", "b"});
  CHECK(LookupProvider::build(corpus, 3, 1, 2).vocab() == std::vector<std::string>{"b"});
}

TEST_CASE("char n-grams with boundary markers") {
  CharNgramConfig cfg;
  cfg.dim = 8;
  cfg.min_n = 3;
  cfg.max_n = 3;
  CharNgramProvider p(cfg);
  CHECK(p.ngrams("abc") == std::vector<std::string>{"<ab", "abc", "bc>"});
  auto v = p.word_vector("abc");
  for (std::size_t j = 0; j < 8; ++j) {
    const double expect = (p.bucket_vector(p.bucket("<ab"))[j] + p.bucket_vector(p.bucket("abc"))[j] +
                           p.bucket_vector(p.bucket("bc>"))[j]) /
                          3.0;
    CHECK(v[j] == doctest::Approx(expect).epsilon(1e-12));
  }
  // 32-bit FNV-1a of "abc" is 0x1a47e90b
  CHECK(p.bucket("abc") == 0x1a47e90bu % cfg.buckets);
  p.set_word_vector("abc", std::vector<double>(8, 0.5));
  CHECK(p.word_vector("abc") == std::vector<double>(8, 0.5));
  CHECK_THROWS_AS(p.set_word_vector("x", {1.0}), ValidationError);
}

TEST_CASE("char n-grams of multibyte words count code points") {
  CharNgramConfig cfg;
  cfg.min_n = 3;
  cfg.max_n = 3;
  CharNgramProvider p(cfg);
  CHECK(p.ngrams("été") == std::vector<std::string>{"<ét", "été", "té>"});
}

TEST_CASE("external vectors are positional") {
  Matrix v(3, 2);
  for (std::size_t i = 0; i < 3; ++i) v(i, 0) = static_cast<double>(i);
  const auto dir = std::filesystem::temp_directory_path() / "oral_unit";
  std::filesystem::create_directories(dir);
  std::vector<std::string> s{"a", "_", "c"};
  write_external_vectors(dir / "ext.vec", s, v);
  auto p = ExternalProvider::load(dir / "ext.vec");
  CHECK(p.size() == 3);
  auto m = embed_tokens(p, tokens_of({"a", "b", "c"}), "rec");
  CHECK(m == v);
  CHECK_THROWS_AS(embed_tokens(p, tokens_of({"a", "b"}), "rec"), AlignmentError);
  try {
    embed_tokens(p, tokens_of({"a", "b"}), "rec7");
  } catch (const AlignmentError& e) {
    CHECK(std::string(e.what()).find("rec7") != std::string::npos);
  }
  CHECK_THROWS_AS(embed_tokens(p, tokens_of({"x", "b", "c"}), "rec"), AlignmentError);
}

TEST_CASE("chunk plans") {
  auto p = plan_chunks(1030, 512);
  CHECK(p.chunks == std::vector<std::pair<std::size_t, std::size_t>>{{0, 512}, {512, 1024}, {1024, 1030}});
  CHECK(plan_chunks(0).chunks.empty());
  gen::Rng r(1);
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = static_cast<std::size_t>(r.uniform(0, 5000));
    const std::size_t size = static_cast<std::size_t>(r.uniform(1, 700));
    auto c = plan_chunks(n, size);
    std::size_t sum = 0, expect_begin = 0;
    for (const auto& [b, e] : c.chunks) {
      CHECK(b == expect_begin);
      CHECK(e - b <= size);
      CHECK(e > b);
      sum += e - b;
      expect_begin = e;
    }
    CHECK(sum == n);
    CHECK(c.chunks.size() == (n + size - 1) / size);
  }
}

TEST_CASE("pool_subwords is the componentwise mean") {
  std::vector<std::vector<double>> u{{1, 2}, {3, 6}};
  CHECK(pool_subwords(u) == std::vector<double>{2, 4});
  CHECK_THROWS_AS(pool_subwords(std::span<const std::vector<double>>{}), ValidationError);
}

TEST_CASE("corpus embedding does not depend on the chunk size") {
  CharNgramConfig cfg;
  cfg.dim = 6;
  CharNgramProvider p(cfg);
  gen::Rng r(7);
  std::vector<Utterance> utts;
  for (int i = 0; i < 30; ++i) {
    std::vector<std::string> w;
    for (int k = r.uniform(1, 7); k > 0; --k) w.push_back(gen::word(r));
    utts.push_back(Utterance::from_words(w, "rec" + std::to_string(i / 10)));
  }
  auto a = embed_corpus(p, utts, 512);
  auto b = embed_corpus(p, utts, 3);
  REQUIRE(a.size() == utts.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i] == b[i]);
    CHECK(a[i].rows() == utts[i].size());
  }
}

TEST_CASE("external provider over a multi-recording corpus") {
  std::vector<std::string> w1{"a", "b"}, w2{"c"};
  std::vector<Utterance> utts{Utterance::from_words(w1, "r1"), Utterance::from_words(w2, "r2")};
  Matrix v(3, 1);
  v(0, 0) = 1;
  v(1, 0) = 2;
  v(2, 0) = 3;
  ExternalProvider p({"a", "b", "c"}, v);
  auto m = embed_corpus(p, utts);
  CHECK(m[1](0, 0) == 3);
  ExternalProvider shorter({"a", "b", "c", "d"}, Matrix(4, 1));
  CHECK_THROWS_AS(embed_corpus(shorter, utts), AlignmentError);
}
