#include "oral/embed.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "oral/error.hpp"
#include "oral/normalize.hpp"
#include "oral/simd.hpp"
#include "oral/util.hpp"

namespace oral {

std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::lookup: return "lookup";
    case ProviderKind::char_ngram: return "char_ngram";
    case ProviderKind::external: return "external";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// lookup

LookupProvider::LookupProvider(std::vector<std::string> vocab, std::size_t dim, std::uint64_t seed)
    : vocab_(std::move(vocab)), table_("word_emb", vocab_.size() + 1, dim) {
  if (dim == 0) throw ValidationError("lookup provider: dim must be positive");
  for (std::size_t i = 0; i < vocab_.size(); ++i) {
    if (!index_.emplace(vocab_[i], static_cast<int>(i) + 1).second)
      throw ValidationError("lookup provider: duplicate word '" + vocab_[i] + "'");
  }
  std::mt19937_64 rng(seed);
  const double scale = std::sqrt(3.0 / static_cast<double>(dim));
  std::uniform_real_distribution<double> u(-scale, scale);
  for (auto& x : table_.value) x = u(rng);
}

LookupProvider LookupProvider::build(std::span<const Utterance> corpus, std::size_t dim,
                                     std::uint64_t seed, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  for (const auto& u : corpus)
    for (const auto& t : u.tokens) ++counts[t.surface];
  std::vector<std::string> vocab;
  for (const auto& [w, c] : counts)
    if (c >= min_count) vocab.push_back(w);
  return LookupProvider(std::move(vocab), dim, seed);
}

int LookupProvider::id(std::string_view surface) const {
  auto it = index_.find(std::string(surface));
  return it == index_.end() ? 0 : it->second;
}

Matrix LookupProvider::embed_span(std::span<const Token> tokens, std::string_view,
                                  std::size_t) const {
  Matrix out(tokens.size(), dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto src = table_.row(static_cast<std::size_t>(id(tokens[i].surface)));
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

nlohmann::json LookupProvider::describe() const {
  return {{"kind", "lookup"}, {"dim", dim()}, {"vocab", vocab_}};
}

// ---------------------------------------------------------------------------
// char n-grams

CharNgramProvider::CharNgramProvider(CharNgramConfig cfg) : cfg_(cfg) {
  if (cfg_.dim == 0 || cfg_.buckets == 0 || cfg_.min_n == 0 || cfg_.min_n > cfg_.max_n)
    throw ValidationError("char n-gram provider: invalid configuration");
}

void CharNgramProvider::set_word_vector(std::string word, std::vector<double> v) {
  if (v.size() != cfg_.dim)
    throw ValidationError("char n-gram provider: vector for '" + word + "' has wrong dimension");
  words_[std::move(word)] = std::move(v);
}

void CharNgramProvider::load_word_vectors(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header");
  auto head = split_ws(line);
  if (head.size() != 2) throw ParseError(path.string(), 1, "expected '<count> <dim>'");
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    auto parts = split_ws(line);
    if (parts.empty()) continue;
    if (parts.size() != cfg_.dim + 1)
      throw ParseError(path.string(), lineno, "expected a word and " + std::to_string(cfg_.dim) +
                                                  " values");
    std::vector<double> v(cfg_.dim);
    for (std::size_t i = 0; i < cfg_.dim; ++i) {
      try {
        v[i] = std::stod(parts[i + 1]);
      } catch (const std::exception&) {
        throw ParseError(path.string(), lineno, "bad number '" + parts[i + 1] + "'");
      }
    }
    words_[parts[0]] = std::move(v);
  }
}

std::vector<std::string> CharNgramProvider::ngrams(std::string_view word) const {
  std::u32string w = U"<" + decode_utf8(word) + U">";
  std::vector<std::string> out;
  for (std::size_t n = cfg_.min_n; n <= cfg_.max_n; ++n) {
    if (n > w.size()) break;
    for (std::size_t i = 0; i + n <= w.size(); ++i)
      out.push_back(encode_utf8(std::u32string_view(w).substr(i, n)));
  }
  return out;
}

std::size_t CharNgramProvider::bucket(std::string_view ngram) const {
  // 32-bit FNV-1a as in FastText
  std::uint32_t h = 2166136261u;
  for (unsigned char c : ngram) {
    h ^= c;
    h *= 16777619u;
  }
  return h % cfg_.buckets;
}

std::vector<double> CharNgramProvider::bucket_vector(std::size_t b) const {
  std::vector<double> v(cfg_.dim);
  const double scale = 1.0 / std::sqrt(static_cast<double>(cfg_.dim));
  const std::uint64_t base = mix64(cfg_.seed) ^ (static_cast<std::uint64_t>(b) * cfg_.dim);
  for (std::size_t j = 0; j < cfg_.dim; ++j) {
    double u = static_cast<double>(mix64(base + j) >> 11) * 0x1.0p-53;
    v[j] = (2.0 * u - 1.0) * scale;
  }
  return v;
}

std::vector<double> CharNgramProvider::word_vector(std::string_view word) const {
  if (auto it = words_.find(std::string(word)); it != words_.end()) return it->second;
  auto grams = ngrams(word);
  if (grams.empty()) return std::vector<double>(cfg_.dim, 0.0);
  std::vector<std::vector<double>> units;
  units.reserve(grams.size());
  for (const auto& g : grams) units.push_back(bucket_vector(bucket(g)));
  return pool_subwords(units);
}

Matrix CharNgramProvider::embed_span(std::span<const Token> tokens, std::string_view,
                                     std::size_t) const {
  Matrix out(tokens.size(), cfg_.dim);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    auto v = word_vector(tokens[i].surface);
    std::copy(v.begin(), v.end(), out.row(i).begin());
  }
  return out;
}

nlohmann::json CharNgramProvider::describe() const {
  return {{"kind", "char_ngram"}, {"dim", cfg_.dim},         {"min_n", cfg_.min_n},
          {"max_n", cfg_.max_n},  {"buckets", cfg_.buckets}, {"seed", cfg_.seed},
          {"known_words", words_.size()}};
}

// ---------------------------------------------------------------------------
// external

ExternalProvider::ExternalProvider(std::vector<std::string> surfaces, Matrix vectors)
    : surfaces_(std::move(surfaces)), vectors_(std::move(vectors)) {
  if (surfaces_.size() != vectors_.rows())
    throw ValidationError("external provider: surface count differs from vector count");
}

ExternalProvider ExternalProvider::load(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header");
  auto head = split_ws(line);
  std::size_t n = 0, dim = 0;
  try {
    if (head.size() != 2) throw std::invalid_argument("header");
    n = std::stoul(head[0]);
    dim = std::stoul(head[1]);
  } catch (const std::exception&) {
    throw ParseError(path.string(), 1, "expected '<n_tokens> <dim>'");
  }
  Matrix vecs(n, dim);
  std::vector<std::string> surfaces;
  surfaces.reserve(n);
  std::size_t lineno = 1;
  while (surfaces.size() < n && std::getline(in, line)) {
    ++lineno;
    auto parts = split_ws(line);
    if (parts.size() != dim + 1)
      throw ParseError(path.string(), lineno,
                       "expected a surface and " + std::to_string(dim) + " values");
    auto row = vecs.row(surfaces.size());
    for (std::size_t j = 0; j < dim; ++j) {
      try {
        row[j] = std::stod(parts[j + 1]);
      } catch (const std::exception&) {
        throw ParseError(path.string(), lineno, "bad number '" + parts[j + 1] + "'");
      }
    }
    surfaces.push_back(parts[0]);
  }
  if (surfaces.size() != n)
    throw ParseError(path.string(), lineno,
                     "header announces " + std::to_string(n) + " vectors, found " +
                         std::to_string(surfaces.size()));
  return ExternalProvider(std::move(surfaces), std::move(vecs));
}

Matrix ExternalProvider::embed_span(std::span<const Token> tokens, std::string_view recording_id,
                                    std::size_t offset) const {
  if (offset + tokens.size() > vectors_.rows())
    throw AlignmentError("recording '" + std::string(recording_id) + "': vector file holds " +
                         std::to_string(vectors_.rows()) + " vectors, corpus needs at least " +
                         std::to_string(offset + tokens.size()));
  Matrix out(tokens.size(), dim());
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const auto& s = surfaces_[offset + i];
    if (s != "_" && s != tokens[i].surface)
      throw AlignmentError("recording '" + std::string(recording_id) + "': vector " +
                           std::to_string(offset + i + 1) + " is for '" + s + "', token is '" +
                           tokens[i].surface + "'");
    auto src = vectors_.row(offset + i);
    std::copy(src.begin(), src.end(), out.row(i).begin());
  }
  return out;
}

nlohmann::json ExternalProvider::describe() const {
  return {{"kind", "external"}, {"dim", dim()}, {"n_tokens", vectors_.rows()}};
}

void write_external_vectors(const std::filesystem::path& path,
                            std::span<const std::string> surfaces, const Matrix& vectors) {
  auto out = open_out(path);
  out << vectors.rows() << ' ' << vectors.cols() << '\n';
  char buf[64];
  for (std::size_t i = 0; i < vectors.rows(); ++i) {
    out << surfaces[i];
    for (double x : vectors.row(i)) {
      std::snprintf(buf, sizeof buf, " %.17g", x);
      out << buf;
    }
    out << '\n';
  }
}

// ---------------------------------------------------------------------------

ChunkPlan plan_chunks(std::size_t n_tokens, std::size_t chunk_size) {
  if (chunk_size == 0) throw ValidationError("plan_chunks: chunk size must be positive");
  ChunkPlan plan;
  plan.n_tokens = n_tokens;
  for (std::size_t b = 0; b < n_tokens; b += chunk_size)
    plan.chunks.emplace_back(b, std::min(n_tokens, b + chunk_size));
  return plan;
}

std::vector<double> pool_subwords(std::span<const std::vector<double>> units) {
  if (units.empty()) throw ValidationError("pool_subwords: no subword vectors");
  const std::size_t d = units.front().size();
  std::vector<double> mean(d, 0.0);
  for (const auto& u : units) {
    if (u.size() != d) throw ValidationError("pool_subwords: vectors differ in length");
    simd::axpy(1.0, u, mean);
  }
  const double inv = 1.0 / static_cast<double>(units.size());
  for (auto& x : mean) x *= inv;
  return mean;
}

Matrix embed_tokens(const EmbeddingProvider& provider, std::span<const Token> recording,
                    std::string_view recording_id) {
  if (recording.empty()) throw ValidationError("embed_tokens: empty recording");
  if (const auto* ext = dynamic_cast<const ExternalProvider*>(&provider);
      ext && ext->size() != recording.size())
    throw AlignmentError("recording '" + std::string(recording_id) + "': vector file holds " +
                         std::to_string(ext->size()) + " vectors for " +
                         std::to_string(recording.size()) + " tokens");
  Matrix out(recording.size(), provider.dim());
  for (const auto& [b, e] : plan_chunks(recording.size()).chunks) {
    Matrix part = provider.embed_span(recording.subspan(b, e - b), recording_id, b);
    for (std::size_t i = b; i < e; ++i) {
      auto src = part.row(i - b);
      std::copy(src.begin(), src.end(), out.row(i).begin());
    }
  }
  return out;
}

std::vector<Matrix> embed_corpus(const EmbeddingProvider& provider, std::span<const Utterance> utts,
                                 std::size_t chunk_size) {
  std::vector<Matrix> out;
  out.reserve(utts.size());
  std::size_t offset = 0;
  std::size_t i = 0;
  std::string last_recording;
  while (i < utts.size()) {
    std::size_t j = i;
    std::vector<Token> tokens;
    while (j < utts.size() && utts[j].recording_id == utts[i].recording_id) {
      tokens.insert(tokens.end(), utts[j].tokens.begin(), utts[j].tokens.end());
      ++j;
    }
    const std::string& rec = utts[i].recording_id;
    Matrix all(tokens.size(), provider.dim());
    for (const auto& [b, e] : plan_chunks(tokens.size(), chunk_size).chunks) {
      Matrix part =
          provider.embed_span(std::span<const Token>(tokens).subspan(b, e - b), rec, offset + b);
      for (std::size_t r = b; r < e; ++r) {
        auto src = part.row(r - b);
        std::copy(src.begin(), src.end(), all.row(r).begin());
      }
    }
    std::size_t row = 0;
    for (std::size_t k = i; k < j; ++k) {
      Matrix m(utts[k].tokens.size(), provider.dim());
      for (std::size_t r = 0; r < m.rows(); ++r, ++row) {
        auto src = all.row(row);
        std::copy(src.begin(), src.end(), m.row(r).begin());
      }
      out.push_back(std::move(m));
    }
    offset += tokens.size();
    last_recording = rec;
    i = j;
  }
  if (const auto* ext = dynamic_cast<const ExternalProvider*>(&provider);
      ext && ext->size() != offset)
    throw AlignmentError("recording '" + last_recording + "': vector file holds " +
                         std::to_string(ext->size()) + " vectors but the corpus has " +
                         std::to_string(offset) + " tokens");
  return out;
}

}  // namespace oral
