#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oral/corpus.hpp"

// Arc-eager transitions with a TAG action that gates the buffer front: a
// word must be tagged before any structural action can touch it. The
// artificial root 0 sits at the bottom of the stack and is never popped;
// tokens still headless at the end attach to it.

namespace oral {

enum class ActionKind : std::uint8_t { tag, shift, left_arc, right_arc, reduce };

struct Action {
  ActionKind kind = ActionKind::shift;
  int arg = -1;  // POS id for TAG, label id for arcs, -1 otherwise

  static Action tag(int p) { return {ActionKind::tag, p}; }
  static Action shift() { return {ActionKind::shift, -1}; }
  static Action left(int l) { return {ActionKind::left_arc, l}; }
  static Action right(int l) { return {ActionKind::right_arc, l}; }
  static Action reduce() { return {ActionKind::reduce, -1}; }

  bool operator==(const Action&) const = default;
};

inline constexpr std::string_view kRootLabel = "root";

// Maps actions to classifier classes. The tag head scores POS tags; the
// transition head scores SHIFT, REDUCE, LA(l)..., RA(l)...
class ActionInventory {
 public:
  ActionInventory() = default;
  ActionInventory(std::vector<std::string> tags, std::vector<std::string> labels);
  static ActionInventory from_trees(std::span<const DepTree> trees);
  // Parses the "TAG:x", "SHIFT", "REDUCE", "LA:x", "RA:x" listing.
  static ActionInventory from_strings(std::span<const std::string> actions);

  const std::vector<std::string>& tags() const { return tags_; }
  const std::vector<std::string>& labels() const { return labels_; }
  std::optional<int> tag_id(std::string_view t) const;
  std::optional<int> label_id(std::string_view l) const;

  std::size_t tag_classes() const { return tags_.size(); }
  std::size_t transition_classes() const { return 2 + 2 * labels_.size(); }
  // Tag actions first, then transitions; used for action-history embeddings.
  std::size_t total() const { return tag_classes() + transition_classes(); }

  int head_class(Action a) const;  // index within the action's own head
  int global_index(Action a) const;
  Action tag_action(int cls) const { return Action::tag(cls); }
  Action transition_action(int cls) const;

  std::string to_string(Action a) const;
  Action parse(std::string_view s) const;
  std::vector<std::string> serialize() const;

  bool operator==(const ActionInventory&) const = default;

 private:
  std::vector<std::string> tags_;
  std::vector<std::string> labels_;
};

class ParserConfig {
 public:
  ParserConfig() = default;
  explicit ParserConfig(int n_tokens);

  int size() const { return n_; }
  const std::vector<int>& stack() const { return stack_; }
  int top() const { return stack_.back(); }
  // Buffer is always the suffix [front, n].
  int front() const { return front_; }
  bool buffer_empty() const { return front_ > n_; }
  bool terminal() const { return buffer_empty(); }
  std::vector<int> buffer() const;
  bool in_stack(int k) const { return in_stack_[k] != 0; }
  bool in_buffer(int k) const { return k >= front_ && k <= n_; }

  int head(int k) const { return head_[k]; }  // -1 when headless
  int label(int k) const { return label_[k]; }
  int tag(int k) const { return tag_[k]; }  // -1 when untagged
  bool has_head(int k) const { return head_[k] >= 0; }
  const std::vector<Action>& history() const { return history_; }

  // Arc set as (head, label, dependent) triples ordered by dependent.
  std::vector<std::array<int, 3>> arcs() const;

  void apply(Action a);  // no legality check; see oral::apply

  // Structural identity (stack, buffer, arcs, tags). Labels are included
  // unless `with_labels` is false; history is never part of the key.
  std::string key(bool with_labels = true) const;

  bool operator==(const ParserConfig&) const = default;

 private:
  int n_ = 0;
  std::vector<int> stack_;
  int front_ = 1;
  std::vector<int> head_;
  std::vector<int> label_;
  std::vector<int> tag_;
  std::vector<char> in_stack_;
  std::vector<Action> history_;
};

// Throws ContractError describing the first broken invariant.
void check_invariants(const ParserConfig& c);

bool is_legal(const ParserConfig& c, Action a);
std::vector<Action> legal_actions(const ParserConfig& c, const ActionInventory& inv);

// Throws ContractError for an illegal action.
ParserConfig apply(ParserConfig c, Action a);

ParserConfig replay(int n_tokens, std::span<const Action> history);

// Headless tokens attach to the root with label "root".
struct PredictedAnalysis {
  std::vector<int> heads;
  std::vector<int> labels;  // -1 = root label added at finalisation
  std::vector<int> tags;
};
PredictedAnalysis finalize_analysis(const ParserConfig& c);
DepTree finalize(const ParserConfig& c, const Utterance& utterance, const ActionInventory& inv);

// Per-token gold annotation as inventory ids; index = token - 1.
struct GoldAnnotation {
  std::vector<int> heads;
  std::vector<int> labels;
  std::vector<int> pos;
  int size() const { return static_cast<int>(heads.size()); }
  static GoldAnnotation from_tree(const DepTree& tree, const ActionInventory& inv);
};

// Every arc's span holds only descendants of its head; arcs from the root are
// always projective.
bool is_projective(std::span<const int> heads);
std::vector<int> projectivize_heads(std::span<const int> heads);
GoldAnnotation projectivize(GoldAnnotation g);

Action static_oracle(const ParserConfig& c, const GoldAnnotation& g);

// Unlabelled attachment + tagging cost of `a`: how many more errors the best
// reachable analysis has after `a` than before it.
int dynamic_cost(const ParserConfig& c, Action a, const GoldAnnotation& g);

// Legal actions with zero cost, where an arc matching a gold arc only keeps
// its gold label. This is the training target set.
std::vector<Action> zero_cost_actions(const ParserConfig& c, const GoldAnnotation& g,
                                      const ActionInventory& inv);

int attachment_and_tag_errors(const PredictedAnalysis& p, const GoldAnnotation& g);

// Exhaustive search over all legal completions. Memoises identical states so
// one solver can be reused across configurations of the same gold tree.
class MinLossSolver {
 public:
  static constexpr int kMaxRemaining = 7;
  // Called once per distinct non-terminal state with the best loss after
  // each legal action (every label variant included) and the state's own.
  using Visitor = std::function<void(const ParserConfig& c,
                                     std::span<const std::pair<Action, int>> after, int best)>;

  MinLossSolver(const GoldAnnotation& g, int n_tags, int n_labels, Visitor visitor = {});
  int minloss(const ParserConfig& c);
  std::size_t states() const { return memo_.size() + packed_memo_.size(); }

 private:
  int search(const ParserConfig& c);
  const GoldAnnotation& gold_;
  ActionInventory inv_;
  Visitor visitor_;
  bool packed_ = false;
  std::unordered_map<std::uint64_t, int> packed_memo_;
  std::unordered_map<std::string, int> memo_;
};

int brute_force_minloss(const ParserConfig& c, const GoldAnnotation& g, int n_tags, int n_labels);

// Exhaustive verification of dynamic_cost against the brute-force search.
struct OracleCheckReport {
  int min_len = 0;
  int max_len = 0;
  int n_labels = 0;
  int n_tags = 0;
  std::size_t trees = 0;            // gold (heads, labels, POS) variants checked
  std::size_t configs = 0;          // reachable configurations visited
  std::size_t action_checks = 0;    // (config, legal action) pairs compared
  std::size_t cost_mismatches = 0;  // dynamic_cost != minloss(after) - minloss(before)
  std::size_t dead_ends = 0;        // non-terminal configs with no zero-cost action
  std::size_t oracle_failures = 0;  // zero-cost walks that did not rebuild the gold tree
  std::string first_failure;
  double seconds = 0.0;
  bool passed() const { return cost_mismatches == 0 && dead_ends == 0 && oracle_failures == 0; }
};

// All projective head vectors over n tokens (multiple root children allowed).
std::vector<std::vector<int>> enumerate_projective_trees(int n);

// Visits every projective tree of min_len..max_len tokens under every gold
// POS and label assignment up to `full_variant_len` tokens (one fixed
// assignment beyond). Costs and losses never read gold labels, so the
// cost-versus-search comparison over all reachable configurations runs once
// per (heads, POS) pair; each label assignment is then checked by a zero-cost
// walk from the initial configuration that must rebuild the labelled tree.
OracleCheckReport exhaustive_oracle_check(int min_len, int max_len, int n_labels = 2,
                                          int n_tags = 2, int full_variant_len = 5);

}  // namespace oral
