#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <regex>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "oral/corpus.hpp"
#include "oral/embed.hpp"
#include "oral/metrics.hpp"
#include "oral/neural.hpp"

namespace oral {

struct ConceptSpan {
  std::string concept_name;
  int start = 1;  // 1-based, inclusive
  int end = 1;
  std::string surface;
  std::string value;
  bool operator==(const ConceptSpan&) const = default;
};

// Maximal B-x I-x* runs. A stray I-x (not after B-x / I-x) opens a new span,
// as if it were B-x; `repairs` counts those.
std::vector<ConceptSpan> bio_decode(std::span<const std::string> tags,
                                    std::span<const std::string> words,
                                    std::size_t* repairs = nullptr);
std::vector<ConceptSpan> bio_decode(std::span<const std::string> tags, const Utterance& u,
                                    std::size_t* repairs = nullptr);
// Throws on overlapping, unordered or out-of-range spans.
std::vector<std::string> bio_encode(std::span<const ConceptSpan> spans, std::size_t n_tokens);
// Applies the stray-I repair without changing anything else.
std::vector<std::string> repair_bio(std::span<const std::string> tags);
bool is_valid_bio(std::span<const std::string> tags);

// Per concept, an ordered list of (regex, value template). The first rule
// whose regex matches somewhere in the surface gives the value ($1.. refer to
// groups); without a match the value is the surface.
class ValueRules {
 public:
  ValueRules() = default;
  // {"concept": [["pattern", "value"], ...], ...}; key order is irrelevant, rule order is kept.
  static ValueRules from_json(const nlohmann::json& j);
  static ValueRules load(const std::filesystem::path& path);
  std::string apply(const std::string& concept_name, const std::string& surface) const;
  std::size_t size() const;

 private:
  struct Rule {
    std::string pattern;
    std::regex re;
    std::string value;
  };
  std::map<std::string, std::vector<Rule>> rules_;
};

std::vector<ConceptSpan> extract_values(std::vector<ConceptSpan> spans, const ValueRules& rules);

enum class SluMetric { cer, cver };
enum class CiUnit { utterance, split };

struct SluScore {
  SluMetric metric = SluMetric::cer;
  AlignmentCounts counts;
  std::vector<double> unit_rates;  // per utterance (non-empty refs) or per fold
  CiUnit unit = CiUnit::utterance;
  std::optional<ConfidenceInterval> ci;
  double rate() const { return counts.rate(); }
  nlohmann::json to_json() const;
};

// Items compared: concept labels (CER) or "concept=value" pairs (CVER).
std::vector<std::string> concept_items(std::span<const ConceptSpan> spans, SluMetric metric);

// Corpus rate = total errors / total reference concepts. Split mode cuts the
// corpus into `folds` contiguous blocks and takes one rate per block.
SluScore score_slu(std::span<const SluSample> gold, std::span<const SluSample> hyp,
                   const ValueRules& rules, SluMetric metric, CiUnit unit = CiUnit::utterance,
                   std::size_t folds = 10);

std::vector<std::string> bio_inventory(std::span<const std::string> concepts);

struct SluRegime {
  int epochs = 50;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

// Per-token classifier over a window of word vectors.
class SluTagger {
 public:
  SluTagger() = default;
  SluTagger(std::vector<std::string> tags, int window_lo, int window_hi, MlpSpec mlp,
            nlohmann::json provider, std::optional<LookupProvider> lookup, std::uint64_t seed);

  const std::vector<std::string>& tags() const { return tags_; }
  const Mlp& mlp() const { return mlp_; }
  Mlp& mlp() { return mlp_; }
  std::size_t input_dim() const;

  std::vector<Matrix> prepare(std::span<const Utterance> utts, const EmbeddingProvider* provider) const;
  std::vector<double> features(const Matrix& words, const std::vector<int>& ids, int pos,
                               std::vector<std::pair<Tensor*, std::size_t>>* sources = nullptr) const;
  std::vector<std::string> tag(const Utterance& u, const Matrix& words) const;

  std::vector<Tensor*> parameters();
  nlohmann::json to_json() const;
  static SluTagger from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static SluTagger load(const std::filesystem::path& path);

  int tag_id(const std::string& t) const;
  std::vector<int> word_ids(const Utterance& u) const;

 private:
  std::vector<std::string> tags_;
  int lo_ = -3;
  int hi_ = 2;
  Mlp mlp_;
  nlohmann::json provider_;
  std::optional<LookupProvider> lookup_;
  Tensor pad_;
};

struct SluEpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double dev_cer = 0.0;
};

struct SluTrainResult {
  int best_epoch = 0;
  double best_dev_cer = 0.0;
  std::vector<SluEpochLog> log;
};

std::vector<SluSample> slu_decode(const SluTagger& tagger, std::span<const Utterance> utts,
                                  const EmbeddingProvider* provider = nullptr);

// Checkpoint = epoch with the lowest dev CER (earliest on ties).
SluTrainResult train_slu_tagger(SluTagger& tagger, std::span<const SluSample> train,
                                std::span<const SluSample> dev, const SluRegime& regime,
                                const EmbeddingProvider* provider = nullptr,
                                const std::function<void(const SluEpochLog&)>& on_epoch = {});

}  // namespace oral
