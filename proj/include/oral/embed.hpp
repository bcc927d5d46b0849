#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oral/corpus.hpp"
#include "oral/tensor.hpp"

namespace oral {

enum class ProviderKind { lookup, char_ngram, external };
std::string_view to_string(ProviderKind k);

inline constexpr std::size_t kDeskEmbeddingDim = 64;
inline constexpr std::size_t kDefaultChunkSize = 512;

// Supplies one vector per token. Providers are total: unknown words still
// get a vector. `offset` is the position of tokens[0] in the corpus-wide
// token stream; only positional (external) providers look at it.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual ProviderKind kind() const = 0;
  virtual std::size_t dim() const = 0;
  virtual Matrix embed_span(std::span<const Token> tokens, std::string_view recording_id,
                            std::size_t offset) const = 0;
  virtual nlohmann::json describe() const = 0;
};

// Trainable word table. Row 0 is the unknown-word row.
class LookupProvider final : public EmbeddingProvider {
 public:
  LookupProvider(std::vector<std::string> vocab, std::size_t dim, std::uint64_t seed);
  // Vocabulary = words seen at least `min_count` times, sorted.
  static LookupProvider build(std::span<const Utterance> corpus, std::size_t dim, std::uint64_t seed,
                              std::size_t min_count = 1);

  ProviderKind kind() const override { return ProviderKind::lookup; }
  std::size_t dim() const override { return table_.cols; }
  Matrix embed_span(std::span<const Token> tokens, std::string_view recording_id,
                    std::size_t offset) const override;
  nlohmann::json describe() const override;

  int id(std::string_view surface) const;
  const std::vector<std::string>& vocab() const { return vocab_; }
  Tensor& table() { return table_; }
  const Tensor& table() const { return table_; }

 private:
  std::vector<std::string> vocab_;
  std::unordered_map<std::string, int> index_;
  Tensor table_;
};

struct CharNgramConfig {
  std::size_t dim = kDeskEmbeddingDim;
  std::size_t min_n = 3;
  std::size_t max_n = 6;
  std::size_t buckets = 100003;
  std::uint64_t seed = 1;
};

// FastText-style: known words read from a word-vector table, anything else
// is the mean of its hashed character n-gram vectors ('<' and '>' mark the
// word boundaries). Bucket vectors are derived from (seed, bucket) on the fly.
class CharNgramProvider final : public EmbeddingProvider {
 public:
  explicit CharNgramProvider(CharNgramConfig cfg = {});

  // Text vectors in the usual "<count> <dim>" + "<word> v1 .. vd" layout.
  void load_word_vectors(const std::filesystem::path& path);
  void set_word_vector(std::string word, std::vector<double> v);

  ProviderKind kind() const override { return ProviderKind::char_ngram; }
  std::size_t dim() const override { return cfg_.dim; }
  Matrix embed_span(std::span<const Token> tokens, std::string_view recording_id,
                    std::size_t offset) const override;
  nlohmann::json describe() const override;

  const CharNgramConfig& config() const { return cfg_; }
  std::vector<std::string> ngrams(std::string_view word) const;
  std::size_t bucket(std::string_view ngram) const;
  std::vector<double> bucket_vector(std::size_t bucket) const;
  std::vector<double> word_vector(std::string_view word) const;

 private:
  CharNgramConfig cfg_;
  std::unordered_map<std::string, std::vector<double>> words_;
};

// Precomputed per-occurrence vectors, one per corpus token, in corpus order.
// File: "<n_tokens> <dim>" then "<surface> v1 .. vd"; a '_' surface matches any token.
class ExternalProvider final : public EmbeddingProvider {
 public:
  ExternalProvider(std::vector<std::string> surfaces, Matrix vectors);
  static ExternalProvider load(const std::filesystem::path& path);

  ProviderKind kind() const override { return ProviderKind::external; }
  std::size_t dim() const override { return vectors_.cols(); }
  std::size_t size() const { return vectors_.rows(); }
  Matrix embed_span(std::span<const Token> tokens, std::string_view recording_id,
                    std::size_t offset) const override;
  nlohmann::json describe() const override;

 private:
  std::vector<std::string> surfaces_;
  Matrix vectors_;
};

void write_external_vectors(const std::filesystem::path& path,
                            std::span<const std::string> surfaces, const Matrix& vectors);

struct ChunkPlan {
  std::size_t n_tokens = 0;
  std::vector<std::pair<std::size_t, std::size_t>> chunks;  // [begin, end)
};

ChunkPlan plan_chunks(std::size_t n_tokens, std::size_t chunk_size = kDefaultChunkSize);

// Componentwise mean of subword vectors.
std::vector<double> pool_subwords(std::span<const std::vector<double>> units);

// Vectors for a single recording. For an external provider the recording
// must cover the whole vector file.
Matrix embed_tokens(const EmbeddingProvider& provider, std::span<const Token> recording,
                    std::string_view recording_id = {});

// Whole-corpus embedding: consecutive utterances sharing a recording id are
// embedded together, chunk by chunk, then split back per utterance (rows
// include synthetic tokens).
std::vector<Matrix> embed_corpus(const EmbeddingProvider& provider, std::span<const Utterance> utts,
                                 std::size_t chunk_size = kDefaultChunkSize);

}  // namespace oral
