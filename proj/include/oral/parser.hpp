#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "oral/corpus.hpp"
#include "oral/embed.hpp"
#include "oral/metrics.hpp"
#include "oral/neural.hpp"
#include "oral/tensor.hpp"
#include "oral/transition.hpp"

namespace oral {

inline constexpr int kTagHead = 0;
inline constexpr int kTransitionHead = 1;

struct FeatureSpec {
  std::size_t stack_slots = 3;  // s0, s1, s2
  int window_lo = -3;           // offsets around the buffer front
  int window_hi = 2;
  std::size_t history_len = 6;
  std::size_t d_w = kDeskEmbeddingDim;
  std::size_t d_t = 16;
  std::size_t d_a = 16;

  std::size_t window_size() const { return static_cast<std::size_t>(window_hi - window_lo + 1); }
  std::size_t token_slots() const { return stack_slots + window_size(); }
  std::size_t input_dim() const { return token_slots() * (d_w + d_t) + history_len * d_a; }
  nlohmann::json to_json() const;
  static FeatureSpec from_json(const nlohmann::json& j);
  bool operator==(const FeatureSpec&) const = default;
};

struct TrainRegime {
  int epochs = 40;
  int explore_start_epoch = 2;  // 1-based
  double explore_prob = 0.9;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 1;
  bool repunc = false;  // feed a synthetic final "." to the embedding provider
};

// Word input of one sentence restricted to its non-synthetic tokens: row ids
// into the model's own lookup table, or fixed provider vectors.
struct SentenceInput {
  std::vector<int> word_ids;
  Matrix vectors;
  int size() const { return static_cast<int>(std::max(word_ids.size(), vectors.rows())); }
};

// Where each block of the input vector came from, for gradient routing.
struct SlotSource {
  Tensor* table = nullptr;  // null = fixed provider vector
  std::size_t row = 0;
};

class ParserModel {
 public:
  static constexpr std::size_t kWordPad = 0;
  static constexpr std::size_t kWordRoot = 1;

  ParserModel() = default;
  // `mlp` supplies hidden dims and dropout; input_dim and heads are derived.
  ParserModel(ActionInventory inv, FeatureSpec fs, MlpSpec mlp, nlohmann::json provider,
              std::optional<LookupProvider> lookup, std::uint64_t seed);

  const ActionInventory& inventory() const { return inv_; }
  const FeatureSpec& feature_spec() const { return fs_; }
  const Mlp& mlp() const { return mlp_; }
  Mlp& mlp() { return mlp_; }
  const nlohmann::json& provider() const { return provider_; }
  ProviderKind provider_kind() const;
  const LookupProvider* lookup() const { return lookup_ ? &*lookup_ : nullptr; }

  // Word inputs for a corpus. A model with its own lookup table ignores
  // `provider`; otherwise provider kind and dim must match the checkpoint.
  std::vector<SentenceInput> prepare(std::span<const Utterance> utts,
                                     const EmbeddingProvider* provider) const;

  std::vector<double> features(const ParserConfig& c, const SentenceInput& in,
                               std::vector<SlotSource>* sources = nullptr) const;
  // Adds dLoss/dInput to the embedding tables that produced the input.
  void backprop_features(std::span<const double> dx, std::span<const SlotSource> sources);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  nlohmann::json to_json() const;
  static ParserModel from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ParserModel load(const std::filesystem::path& path);

 private:
  std::size_t tag_row(int tag) const;  // PAD, ROOT, UNTAGGED, then tags
  ActionInventory inv_;
  FeatureSpec fs_;
  Mlp mlp_;
  nlohmann::json provider_;
  std::optional<LookupProvider> lookup_;
  Tensor tag_emb_;
  Tensor act_emb_;   // row 0 = PAD, then actions by global index
  Tensor word_special_;  // PAD, ROOT
};

// Boolean mask over one head's classes.
std::vector<char> legal_mask(const ParserConfig& c, const ActionInventory& inv, int head);

// Scores the classes of `head`; decode takes the best legal one (ties: lowest index).
class ActionScorer {
 public:
  virtual ~ActionScorer() = default;
  virtual std::vector<double> score(const ParserConfig& c, int head, std::span<const char> legal) = 0;
};

class ModelScorer final : public ActionScorer {
 public:
  ModelScorer(const ParserModel& model, const SentenceInput& input) : model_(model), input_(input) {}
  std::vector<double> score(const ParserConfig& c, int head, std::span<const char> legal) override;

 private:
  const ParserModel& model_;
  const SentenceInput& input_;
};

// Ranks zero-cost actions first.
class OracleScorer final : public ActionScorer {
 public:
  OracleScorer(const GoldAnnotation& gold, const ActionInventory& inv) : gold_(gold), inv_(inv) {}
  std::vector<double> score(const ParserConfig& c, int head, std::span<const char> legal) override;

 private:
  const GoldAnnotation& gold_;
  const ActionInventory& inv_;
};

// Greedy decoding to a terminal configuration.
ParserConfig greedy_decode(int n_tokens, const ActionInventory& inv, ActionScorer& scorer);

// Trees over the non-synthetic tokens of each utterance.
std::vector<DepTree> decode(const ParserModel& model, std::span<const Utterance> utts,
                            const EmbeddingProvider* provider = nullptr);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::size_t states = 0;
  double dev_las = 0.0;
  double dev_uas = 0.0;
  double dev_upos = 0.0;
  nlohmann::json to_json() const;
};

struct TrainResult {
  int best_epoch = 0;
  AttachmentReport best_dev;
  std::vector<EpochLog> log;
};

// Dynamic-oracle training. On return `model` holds the parameters of the
// epoch with the highest dev LAS (earliest epoch on ties).
TrainResult train_parser(ParserModel& model, std::span<const DepTree> train,
                         std::span<const DepTree> dev, const TrainRegime& regime,
                         const EmbeddingProvider* train_provider = nullptr,
                         const EmbeddingProvider* dev_provider = nullptr,
                         const std::function<void(const EpochLog&)>& on_epoch = {});

}  // namespace oral
