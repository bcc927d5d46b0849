#include "oral/transition.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <limits>
#include <set>
#include <unordered_set>

#include "oral/error.hpp"

namespace oral {

// ---------------------------------------------------------------------------
// ActionInventory

ActionInventory::ActionInventory(std::vector<std::string> tags, std::vector<std::string> labels)
    : tags_(std::move(tags)), labels_(std::move(labels)) {
  if (tags_.empty()) throw ValidationError("action inventory: no POS tags");
  if (labels_.empty()) throw ValidationError("action inventory: no dependency labels");
  std::set<std::string> t(tags_.begin(), tags_.end()), l(labels_.begin(), labels_.end());
  if (t.size() != tags_.size() || l.size() != labels_.size())
    throw ValidationError("action inventory: duplicate tag or label");
}

ActionInventory ActionInventory::from_trees(std::span<const DepTree> trees) {
  std::set<std::string> tags, labels;
  for (const auto& t : trees) {
    tags.insert(t.pos.begin(), t.pos.end());
    labels.insert(t.labels.begin(), t.labels.end());
  }
  labels.insert(std::string(kRootLabel));
  return ActionInventory({tags.begin(), tags.end()}, {labels.begin(), labels.end()});
}

ActionInventory ActionInventory::from_strings(std::span<const std::string> actions) {
  std::vector<std::string> tags, labels;
  for (const auto& a : actions) {
    if (a.rfind("TAG:", 0) == 0) {
      tags.push_back(a.substr(4));
    } else if (a.rfind("LA:", 0) == 0) {
      labels.push_back(a.substr(3));
    } else if (a.rfind("RA:", 0) == 0 || a == "SHIFT" || a == "REDUCE") {
      continue;
    } else {
      throw ValidationError("unknown action '" + a + "'");
    }
  }
  ActionInventory inv(std::move(tags), std::move(labels));
  if (inv.serialize() != std::vector<std::string>(actions.begin(), actions.end()))
    throw ValidationError("action listing is not in canonical order");
  return inv;
}

std::optional<int> ActionInventory::tag_id(std::string_view t) const {
  auto it = std::find(tags_.begin(), tags_.end(), t);
  if (it == tags_.end()) return std::nullopt;
  return static_cast<int>(it - tags_.begin());
}

std::optional<int> ActionInventory::label_id(std::string_view l) const {
  auto it = std::find(labels_.begin(), labels_.end(), l);
  if (it == labels_.end()) return std::nullopt;
  return static_cast<int>(it - labels_.begin());
}

int ActionInventory::head_class(Action a) const {
  const int L = static_cast<int>(labels_.size());
  switch (a.kind) {
    case ActionKind::tag: return a.arg;
    case ActionKind::shift: return 0;
    case ActionKind::reduce: return 1;
    case ActionKind::left_arc: return 2 + a.arg;
    case ActionKind::right_arc: return 2 + L + a.arg;
  }
  return -1;
}

int ActionInventory::global_index(Action a) const {
  if (a.kind == ActionKind::tag) return a.arg;
  return static_cast<int>(tags_.size()) + head_class(a);
}

Action ActionInventory::transition_action(int cls) const {
  const int L = static_cast<int>(labels_.size());
  if (cls == 0) return Action::shift();
  if (cls == 1) return Action::reduce();
  if (cls < 2 + L) return Action::left(cls - 2);
  return Action::right(cls - 2 - L);
}

std::string ActionInventory::to_string(Action a) const {
  switch (a.kind) {
    case ActionKind::tag: return "TAG:" + tags_.at(a.arg);
    case ActionKind::shift: return "SHIFT";
    case ActionKind::reduce: return "REDUCE";
    case ActionKind::left_arc: return "LA:" + labels_.at(a.arg);
    case ActionKind::right_arc: return "RA:" + labels_.at(a.arg);
  }
  return "?";
}

Action ActionInventory::parse(std::string_view s) const {
  auto need = [&](std::optional<int> id) {
    if (!id) throw ValidationError("unknown action '" + std::string(s) + "'");
    return *id;
  };
  if (s == "SHIFT") return Action::shift();
  if (s == "REDUCE") return Action::reduce();
  if (s.substr(0, 4) == "TAG:") return Action::tag(need(tag_id(s.substr(4))));
  if (s.substr(0, 3) == "LA:") return Action::left(need(label_id(s.substr(3))));
  if (s.substr(0, 3) == "RA:") return Action::right(need(label_id(s.substr(3))));
  throw ValidationError("unknown action '" + std::string(s) + "'");
}

std::vector<std::string> ActionInventory::serialize() const {
  std::vector<std::string> out;
  for (const auto& t : tags_) out.push_back("TAG:" + t);
  out.push_back("SHIFT");
  out.push_back("REDUCE");
  for (const auto& l : labels_) out.push_back("LA:" + l);
  for (const auto& l : labels_) out.push_back("RA:" + l);
  return out;
}

// ---------------------------------------------------------------------------
// ParserConfig

ParserConfig::ParserConfig(int n_tokens)
    : n_(n_tokens),
      stack_{0},
      front_(1),
      head_(n_tokens + 1, -1),
      label_(n_tokens + 1, -1),
      tag_(n_tokens + 1, -1),
      in_stack_(n_tokens + 1, 0) {
  if (n_tokens < 0) throw ContractError("negative sentence length");
  in_stack_[0] = 1;
}

std::vector<int> ParserConfig::buffer() const {
  std::vector<int> out;
  for (int k = front_; k <= n_; ++k) out.push_back(k);
  return out;
}

std::vector<std::array<int, 3>> ParserConfig::arcs() const {
  std::vector<std::array<int, 3>> out;
  for (int k = 1; k <= n_; ++k)
    if (head_[k] >= 0) out.push_back({head_[k], label_[k], k});
  return out;
}

void ParserConfig::apply(Action a) {
  switch (a.kind) {
    case ActionKind::tag:
      tag_[front_] = a.arg;
      break;
    case ActionKind::shift:
      stack_.push_back(front_);
      in_stack_[front_] = 1;
      ++front_;
      break;
    case ActionKind::left_arc: {
      int s = stack_.back();
      head_[s] = front_;
      label_[s] = a.arg;
      stack_.pop_back();
      in_stack_[s] = 0;
      break;
    }
    case ActionKind::right_arc:
      head_[front_] = stack_.back();
      label_[front_] = a.arg;
      stack_.push_back(front_);
      in_stack_[front_] = 1;
      ++front_;
      break;
    case ActionKind::reduce:
      in_stack_[stack_.back()] = 0;
      stack_.pop_back();
      break;
  }
  history_.push_back(a);
}

std::string ParserConfig::key(bool with_labels) const {
  std::string k;
  k.reserve(4 * static_cast<std::size_t>(n_) + stack_.size() + 4);
  auto put = [&](int v) { k.push_back(static_cast<char>(v + 2)); };
  put(n_);
  put(front_);
  for (int s : stack_) put(s);
  k.push_back('|');
  for (int i = 1; i <= n_; ++i) {
    put(head_[i]);
    put(tag_[i]);
    if (with_labels) put(label_[i]);
  }
  return k;
}

void check_invariants(const ParserConfig& c) {
  const int n = c.size();
  if (c.stack().empty() || c.stack().front() != 0)
    throw ContractError("stack bottom is not the root");
  std::vector<int> seen(n + 1, 0);
  for (int s : c.stack()) {
    if (s < 0 || s > n) throw ContractError("stack element out of range");
    if (c.in_buffer(s)) throw ContractError("token both on stack and in buffer");
    if (++seen[s] > 1) throw ContractError("token twice on stack");
  }
  for (int k = 1; k <= n; ++k) {
    if (c.in_stack(k) != (seen[k] == 1)) throw ContractError("stack membership flag out of sync");
    if (c.in_buffer(k)) {
      if (c.has_head(k)) throw ContractError("buffer token already has a head");
      if (k > c.front() && c.tag(k) >= 0) throw ContractError("tag on token behind the front");
    } else {
      if (c.tag(k) < 0) throw ContractError("token left the buffer untagged");
      if (!c.in_stack(k) && !c.has_head(k)) throw ContractError("popped token without head");
    }
    if (c.has_head(k) && (c.head(k) < 0 || c.head(k) > n || c.head(k) == k))
      throw ContractError("bad head");
  }
  std::vector<int> heads(n);
  for (int k = 1; k <= n; ++k) heads[k - 1] = c.has_head(k) ? c.head(k) : 0;
  if (has_cycle(heads)) throw ContractError("arc set has a cycle");
}

bool is_legal(const ParserConfig& c, Action a) {
  if (c.terminal()) return false;
  const int b = c.front();
  const bool front_untagged = c.tag(b) < 0;
  if (front_untagged) return a.kind == ActionKind::tag;
  const int s = c.top();
  switch (a.kind) {
    case ActionKind::tag: return false;
    case ActionKind::shift: return true;
    case ActionKind::left_arc: return s != 0 && !c.has_head(s);
    case ActionKind::right_arc: return true;
    case ActionKind::reduce: return s != 0 && c.has_head(s);
  }
  return false;
}

std::vector<Action> legal_actions(const ParserConfig& c, const ActionInventory& inv) {
  std::vector<Action> out;
  if (c.terminal()) return out;
  const int P = static_cast<int>(inv.tag_classes());
  const int L = static_cast<int>(inv.labels().size());
  if (c.tag(c.front()) < 0) {
    for (int p = 0; p < P; ++p) out.push_back(Action::tag(p));
    return out;
  }
  out.push_back(Action::shift());
  if (is_legal(c, Action::reduce())) out.push_back(Action::reduce());
  if (is_legal(c, Action::left(0)))
    for (int l = 0; l < L; ++l) out.push_back(Action::left(l));
  for (int l = 0; l < L; ++l) out.push_back(Action::right(l));
  return out;
}

ParserConfig apply(ParserConfig c, Action a) {
  if (!is_legal(c, a)) throw ContractError("illegal action");
  c.apply(a);
  return c;
}

ParserConfig replay(int n_tokens, std::span<const Action> history) {
  ParserConfig c(n_tokens);
  for (Action a : history) c = apply(std::move(c), a);
  return c;
}

PredictedAnalysis finalize_analysis(const ParserConfig& c) {
  if (!c.terminal()) throw ContractError("finalize: buffer not empty");
  PredictedAnalysis p;
  const int n = c.size();
  p.heads.resize(n);
  p.labels.resize(n);
  p.tags.resize(n);
  for (int k = 1; k <= n; ++k) {
    if (c.tag(k) < 0) throw ContractError("finalize: token " + std::to_string(k) + " untagged");
    p.tags[k - 1] = c.tag(k);
    if (c.has_head(k)) {
      p.heads[k - 1] = c.head(k);
      p.labels[k - 1] = c.label(k);
    } else {
      p.heads[k - 1] = 0;
      p.labels[k - 1] = -1;
    }
  }
  return p;
}

DepTree finalize(const ParserConfig& c, const Utterance& utterance, const ActionInventory& inv) {
  auto p = finalize_analysis(c);
  DepTree t;
  t.utterance = utterance;
  t.heads = p.heads;
  for (int k = 0; k < c.size(); ++k) {
    t.pos.push_back(inv.tags().at(p.tags[k]));
    t.labels.push_back(p.labels[k] < 0 ? std::string(kRootLabel) : inv.labels().at(p.labels[k]));
    t.extra.push_back({"_", "_", "_", "_", "_"});
  }
  return t;
}

// ---------------------------------------------------------------------------
// Gold trees and projectivity

GoldAnnotation GoldAnnotation::from_tree(const DepTree& tree, const ActionInventory& inv) {
  GoldAnnotation g;
  g.heads = tree.heads;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    auto l = inv.label_id(tree.labels[i]);
    auto p = inv.tag_id(tree.pos[i]);
    if (!l) throw ValidationError("label '" + tree.labels[i] + "' missing from inventory");
    if (!p) throw ValidationError("POS '" + tree.pos[i] + "' missing from inventory");
    g.labels.push_back(*l);
    g.pos.push_back(*p);
  }
  return g;
}

namespace {

// True if `anc` dominates `k` (0 dominates everything).
bool dominates(std::span<const int> heads, int anc, int k) {
  if (anc == 0) return true;
  int steps = 0;
  while (k != 0 && steps++ <= static_cast<int>(heads.size())) {
    if (k == anc) return true;
    k = heads[k - 1];
  }
  return false;
}

bool arc_projective(std::span<const int> heads, int d) {
  const int h = heads[d - 1];
  if (h == 0) return true;
  for (int k = std::min(h, d) + 1; k < std::max(h, d); ++k)
    if (!dominates(heads, h, k)) return false;
  return true;
}

}  // namespace

bool is_projective(std::span<const int> heads) {
  for (int d = 1; d <= static_cast<int>(heads.size()); ++d)
    if (!arc_projective(heads, d)) return false;
  return true;
}

std::vector<int> projectivize_heads(std::span<const int> heads_in) {
  std::vector<int> heads(heads_in.begin(), heads_in.end());
  if (has_cycle(heads)) throw ValidationError("projectivize: input is not a tree");
  for (;;) {
    int pick = -1;
    int pick_len = std::numeric_limits<int>::max();
    for (int d = 1; d <= static_cast<int>(heads.size()); ++d) {
      if (arc_projective(heads, d)) continue;
      int len = std::abs(heads[d - 1] - d);
      if (len < pick_len) {
        pick = d;
        pick_len = len;
      }
    }
    if (pick < 0) return heads;
    heads[pick - 1] = heads[heads[pick - 1] - 1];  // lift to the grandparent
  }
}

GoldAnnotation projectivize(GoldAnnotation g) {
  g.heads = projectivize_heads(g.heads);
  return g;
}

// ---------------------------------------------------------------------------
// Oracles

Action static_oracle(const ParserConfig& c, const GoldAnnotation& g) {
  if (c.terminal()) throw ContractError("static_oracle: terminal configuration");
  const int b = c.front();
  const int s = c.top();
  if (c.tag(b) < 0) return Action::tag(g.pos[b - 1]);
  if (s != 0 && g.heads[s - 1] == b) return Action::left(g.labels[s - 1]);
  if (g.heads[b - 1] == s) return Action::right(g.labels[b - 1]);
  if (s != 0 && c.has_head(s)) {
    bool pending = false;
    for (int k = b; k <= c.size(); ++k)
      if (g.heads[k - 1] == s) pending = true;
    if (!pending) return Action::reduce();
  }
  return Action::shift();
}

int dynamic_cost(const ParserConfig& c, Action a, const GoldAnnotation& g) {
  if (!is_legal(c, a)) throw ContractError("dynamic_cost: illegal action");
  const int n = c.size();
  const int b = c.front();
  const int s = c.top();
  auto gh = [&](int k) { return g.heads[k - 1]; };

  // Buffer tokens whose gold head is `h`.
  auto buffer_deps_of = [&](int h) {
    int cnt = 0;
    for (int k = b; k <= n; ++k) cnt += gh(k) == h;
    return cnt;
  };
  // Headless stack tokens whose gold head is `h`.
  auto stack_deps_of = [&](int h) {
    int cnt = 0;
    for (int k : c.stack())
      if (k != 0 && !c.has_head(k) && gh(k) == h) ++cnt;
    return cnt;
  };

  switch (a.kind) {
    case ActionKind::tag:
      return a.arg == g.pos[b - 1] ? 0 : 1;
    case ActionKind::shift: {
      // A root dependent pushed headless still reaches the root at finalisation.
      const int h = gh(b);
      return (h != 0 && c.in_stack(h) ? 1 : 0) + stack_deps_of(b);
    }
    case ActionKind::reduce:
      return buffer_deps_of(s);
    case ActionKind::left_arc: {
      const int h = gh(s);
      return buffer_deps_of(s) + (c.in_buffer(h) && h != b ? 1 : 0) + (h == 0 ? 1 : 0);
    }
    case ActionKind::right_arc: {
      const int h = gh(b);
      return (c.in_stack(h) && h != s ? 1 : 0) + (c.in_buffer(h) ? 1 : 0) + stack_deps_of(b);
    }
  }
  return 0;
}

std::vector<Action> zero_cost_actions(const ParserConfig& c, const GoldAnnotation& g,
                                      const ActionInventory& inv) {
  std::vector<Action> out;
  const int b = c.terminal() ? -1 : c.front();
  const int s = c.terminal() ? -1 : c.top();
  for (Action a : legal_actions(c, inv)) {
    if (dynamic_cost(c, a, g) != 0) continue;
    if (a.kind == ActionKind::left_arc && g.heads[s - 1] == b && a.arg != g.labels[s - 1]) continue;
    if (a.kind == ActionKind::right_arc && g.heads[b - 1] == s && a.arg != g.labels[b - 1])
      continue;
    out.push_back(a);
  }
  return out;
}

int attachment_and_tag_errors(const PredictedAnalysis& p, const GoldAnnotation& g) {
  int err = 0;
  for (int i = 0; i < g.size(); ++i) {
    err += p.heads[i] != g.heads[i];
    err += p.tags[i] != g.pos[i];
  }
  return err;
}

namespace {

int bit_width_for(int max_value) {
  int b = 0;
  while ((1 << b) <= max_value) ++b;
  return b;
}

// Loss-relevant state (front, stack, heads, tags) packed into 64 bits. The
// stack is strictly increasing, so a membership mask determines it.
std::uint64_t packed_key(const ParserConfig& c, int head_bits, int tag_bits, int front_bits) {
  std::uint64_t k = static_cast<std::uint64_t>(c.front());
  int shift = front_bits;
  for (int i = 0; i <= c.size(); ++i) k |= static_cast<std::uint64_t>(c.in_stack(i)) << shift++;
  for (int i = 1; i <= c.size(); ++i) {
    k |= static_cast<std::uint64_t>(c.head(i) + 1) << shift;
    shift += head_bits;
    k |= static_cast<std::uint64_t>(c.tag(i) + 1) << shift;
    shift += tag_bits;
  }
  return k;
}

}  // namespace

MinLossSolver::MinLossSolver(const GoldAnnotation& g, int n_tags, int n_labels, Visitor visitor)
    : gold_(g), visitor_(std::move(visitor)) {
  std::vector<std::string> tags, labels;
  for (int i = 0; i < n_tags; ++i) tags.push_back("t" + std::to_string(i));
  for (int i = 0; i < n_labels; ++i) labels.push_back("l" + std::to_string(i));
  inv_ = ActionInventory(std::move(tags), std::move(labels));
  const int n = g.size();
  const int bits = bit_width_for(n + 1) + (n + 1) + n * (bit_width_for(n + 1) + bit_width_for(n_tags));
  packed_ = bits <= 64;
}

int MinLossSolver::minloss(const ParserConfig& c) {
  if (c.size() != gold_.size()) throw ContractError("minloss: sentence length mismatch");
  const int remaining = c.terminal() ? 0 : c.size() - c.front() + 1;
  if (remaining > kMaxRemaining)
    throw ContractError("minloss: " + std::to_string(remaining) +
                        " remaining tokens exceed the search bound of " +
                        std::to_string(kMaxRemaining));
  return search(c);
}

int MinLossSolver::search(const ParserConfig& c) {
  if (c.terminal()) return attachment_and_tag_errors(finalize_analysis(c), gold_);
  // The loss ignores labels, so states that differ only in labels share a value.
  const int n = c.size();
  std::uint64_t pk = 0;
  std::string sk;
  if (packed_) {
    pk = packed_key(c, bit_width_for(n + 1), bit_width_for(static_cast<int>(inv_.tag_classes())),
                    bit_width_for(n + 1));
    if (auto it = packed_memo_.find(pk); it != packed_memo_.end()) return it->second;
  } else {
    sk = c.key(false);
    if (auto it = memo_.find(sk); it != memo_.end()) return it->second;
  }
  std::vector<std::pair<Action, int>> after;
  int best = std::numeric_limits<int>::max();
  for (Action a : legal_actions(c, inv_)) {
    ParserConfig next = c;
    next.apply(a);
    const int v = search(next);
    best = std::min(best, v);
    after.emplace_back(a, v);
  }
  if (packed_)
    packed_memo_.emplace(pk, best);
  else
    memo_.emplace(std::move(sk), best);
  if (visitor_) visitor_(c, after, best);
  return best;
}

int brute_force_minloss(const ParserConfig& c, const GoldAnnotation& g, int n_tags, int n_labels) {
  MinLossSolver solver(g, n_tags, n_labels);
  return solver.minloss(c);
}

// ---------------------------------------------------------------------------
// Exhaustive verification

std::vector<std::vector<int>> enumerate_projective_trees(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> heads(n, 0);
  std::function<void(int)> rec = [&](int i) {
    if (i == n) {
      if (!has_cycle(heads) && is_projective(heads)) out.push_back(heads);
      return;
    }
    for (int h = 0; h <= n; ++h) {
      if (h == i + 1) continue;
      heads[i] = h;
      rec(i + 1);
    }
  };
  if (n > 0) rec(0);
  return out;
}

namespace {

void check_one_gold(const GoldAnnotation& g, const ActionInventory& inv, OracleCheckReport& rep) {
  auto describe = [&](const ParserConfig& c, Action a, const std::string& what) {
    std::string s = what + " heads=[";
    for (int h : g.heads) s += std::to_string(h) + " ";
    s += "] history=";
    for (Action x : c.history()) s += inv.to_string(x) + ",";
    s += " action=" + inv.to_string(a);
    return s;
  };

  auto check = [&](const ParserConfig& c, std::span<const std::pair<Action, int>> after,
                   int before) {
    ++rep.configs;
    bool has_zero = false;
    for (const auto& [a, v] : after) {
      const int cost = dynamic_cost(c, a, g);
      ++rep.action_checks;
      if (cost != v - before && rep.cost_mismatches++ == 0)
        rep.first_failure = describe(c, a, "cost " + std::to_string(cost) + " vs delta " +
                                               std::to_string(v - before));
      has_zero |= cost == 0;
    }
    if (!has_zero && rep.dead_ends++ == 0)
      rep.first_failure = describe(c, Action::shift(), "no zero-cost action");
  };
  MinLossSolver solver(g, static_cast<int>(inv.tag_classes()),
                       static_cast<int>(inv.labels().size()), check);
  if (solver.minloss(ParserConfig(g.size())) != 0 && rep.oracle_failures++ == 0)
    rep.first_failure = describe(ParserConfig(g.size()), Action::shift(), "gold loss unreachable");
}

// Every label variant of a gold tree is walked along zero-cost actions from
// the initial configuration; the walk must rebuild heads, tags and every
// transition-built label.
void check_gold_walk(const GoldAnnotation& g, const ActionInventory& inv, OracleCheckReport& rep) {
  const int n = g.size();
  ParserConfig walk(n);
  bool ok = true;
  while (ok && !walk.terminal()) {
    auto zc = zero_cost_actions(walk, g, inv);
    if (zc.empty())
      ok = false;
    else
      walk.apply(zc.front());
  }
  if (ok) {
    auto p = finalize_analysis(walk);
    for (int i = 0; i < n; ++i)
      ok = ok && p.heads[i] == g.heads[i] && p.tags[i] == g.pos[i] &&
           (p.labels[i] < 0 || p.labels[i] == g.labels[i]);
  }
  if (!ok && rep.oracle_failures++ == 0) {
    std::string s = "zero-cost walk does not rebuild the gold tree heads=[";
    for (int h : g.heads) s += std::to_string(h) + " ";
    s += "] history=";
    for (Action x : walk.history()) s += inv.to_string(x) + ",";
    rep.first_failure = s;
  }
}

}  // namespace

OracleCheckReport exhaustive_oracle_check(int min_len, int max_len, int n_labels, int n_tags,
                                          int full_variant_len) {
  auto t0 = std::chrono::steady_clock::now();
  OracleCheckReport rep;
  rep.min_len = min_len;
  rep.max_len = max_len;
  rep.n_labels = n_labels;
  rep.n_tags = n_tags;
  std::vector<std::string> tags, labels;
  for (int i = 0; i < n_tags; ++i) tags.push_back("t" + std::to_string(i));
  for (int i = 0; i < n_labels; ++i) labels.push_back("l" + std::to_string(i));
  ActionInventory inv(tags, labels);

  auto variants = [&](int n, int arity, bool full) {
    std::vector<std::vector<int>> out;
    if (!full) {
      std::vector<int> v;
      for (int i = 0; i < n; ++i) v.push_back((i / 2) % arity);
      out.push_back(v);
      return out;
    }
    std::size_t total = 1;
    for (int i = 0; i < n; ++i) total *= static_cast<std::size_t>(arity);
    for (std::size_t code = 0; code < total; ++code) {
      std::vector<int> v;
      for (std::size_t c = code; static_cast<int>(v.size()) < n; c /= arity)
        v.push_back(static_cast<int>(c % arity));
      out.push_back(v);
    }
    return out;
  };

  for (int n = min_len; n <= max_len; ++n) {
    const bool full = n <= full_variant_len;
    const auto pos_variants = variants(n, n_tags, full);
    const auto label_variants = variants(n, n_labels, full);
    for (const auto& heads : enumerate_projective_trees(n)) {
      for (const auto& pos : pos_variants) {
        GoldAnnotation g{heads, label_variants.front(), pos};
        check_one_gold(g, inv, rep);
        for (const auto& labels : label_variants) {
          g.labels = labels;
          ++rep.trees;
          check_gold_walk(g, inv, rep);
        }
      }
    }
  }
  rep.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

}  // namespace oral
