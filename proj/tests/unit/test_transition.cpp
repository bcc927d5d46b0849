#include <doctest.h>

#include <algorithm>
#include <set>

#include "gen.hpp"
#include "oral/error.hpp"
#include "oral/transition.hpp"

using namespace oral;

namespace {

// Reference projectivity: every token strictly inside an arc descends from its head.
bool ref_projective(const std::vector<int>& h) {
  const int n = static_cast<int>(h.size());
  auto descends = [&](int k, int anc) {
    for (int steps = 0; k != 0 && steps <= n; ++steps) {
      if (k == anc) return true;
      k = h[static_cast<std::size_t>(k - 1)];
    }
    return anc == 0;
  };
  for (int d = 1; d <= n; ++d) {
    const int hd = h[static_cast<std::size_t>(d - 1)];
    for (int k = std::min(hd, d) + 1; k < std::max(hd, d); ++k)
      if (!descends(k, hd)) return false;
  }
  return true;
}

std::vector<std::vector<int>> all_head_vectors(int n) {
  std::vector<std::vector<int>> out;
  std::vector<int> h(static_cast<std::size_t>(n), 0);
  for (;;) {
    out.push_back(h);
    int i = 0;
    while (i < n && ++h[static_cast<std::size_t>(i)] > n) h[static_cast<std::size_t>(i++)] = 0;
    if (i == n) return out;
  }
}

GoldAnnotation random_gold(gen::Rng& r, int n, int n_tags, int n_labels) {
  GoldAnnotation g;
  g.heads = gen::projective_heads(r, n);
  for (int i = 0; i < n; ++i) {
    g.pos.push_back(r.uniform(0, n_tags - 1));
    g.labels.push_back(r.uniform(0, n_labels - 1));
  }
  return g;
}

ActionInventory small_inventory(int n_tags = 2, int n_labels = 2) {
  std::vector<std::string> t, l;
  for (int i = 0; i < n_tags; ++i) t.push_back("T" + std::to_string(i));
  for (int i = 0; i < n_labels; ++i) l.push_back("l" + std::to_string(i));
  return ActionInventory(t, l);
}

}  // namespace

TEST_CASE("projective tree enumeration matches a filtered brute force") {
  const std::vector<std::size_t> counts{1, 3, 12, 55, 273};
  for (int n = 1; n <= 5; ++n) {
    std::set<std::vector<int>> ref;
    for (auto& h : all_head_vectors(n))
      if (!has_cycle(h) && ref_projective(h)) ref.insert(h);
    auto got = enumerate_projective_trees(n);
    CHECK(std::set<std::vector<int>>(got.begin(), got.end()) == ref);
    CHECK(got.size() == ref.size());
    CHECK(got.size() == counts[static_cast<std::size_t>(n - 1)]);
  }
}

TEST_CASE("is_projective agrees with the reference on every tree up to 5 tokens") {
  for (int n = 1; n <= 5; ++n)
    for (auto& h : all_head_vectors(n))
      if (!has_cycle(h)) CHECK(is_projective(h) == ref_projective(h));
}

TEST_CASE("projectivization") {
  // 1 <- 3 crosses 2 -> 4
  const std::vector<int> h{3, 0, 2, 2};
  CHECK_FALSE(is_projective(h));
  auto p = projectivize_heads(h);
  CHECK(is_projective(p));
  CHECK_FALSE(has_cycle(p));
  for (int n = 1; n <= 5; ++n)
    for (auto& t : all_head_vectors(n)) {
      if (has_cycle(t)) continue;
      auto q = projectivize_heads(t);
      CHECK(is_projective(q));
      CHECK_FALSE(has_cycle(q));
      if (is_projective(t)) CHECK(q == t);
    }
  CHECK_THROWS_AS(projectivize_heads(std::vector<int>{2, 1}), ValidationError);
}

TEST_CASE("inventory layout and serialisation") {
  ActionInventory inv({"DET", "NOUN"}, {"det", "root"});
  CHECK(inv.tag_classes() == 2);
  CHECK(inv.transition_classes() == 6);
  CHECK(inv.total() == 8);
  auto s = inv.serialize();
  CHECK(ActionInventory::from_strings(s) == inv);
  for (std::size_t k = 0; k < inv.transition_classes(); ++k) {
    Action a = inv.transition_action(static_cast<int>(k));
    CHECK(inv.head_class(a) == static_cast<int>(k));
    CHECK(inv.parse(inv.to_string(a)) == a);
  }
  CHECK(inv.to_string(Action::tag(1)) == "TAG:NOUN");
  CHECK(inv.to_string(Action::left(0)) == "LA:det");
  CHECK_THROWS_AS(inv.parse("LA:nope"), ValidationError);
}

TEST_CASE("TAG gates the buffer front") {
  ParserConfig c(2);
  auto inv = small_inventory();
  auto legal = legal_actions(c, inv);
  CHECK(legal.size() == 2);
  for (const auto& a : legal) CHECK(a.kind == ActionKind::tag);
  CHECK_THROWS_AS(apply(c, Action::shift()), ContractError);
  c = apply(c, Action::tag(0));
  CHECK(is_legal(c, Action::shift()));
  CHECK(is_legal(c, Action::right(0)));
  CHECK_FALSE(is_legal(c, Action::left(0)));  // root on top
  CHECK_FALSE(is_legal(c, Action::reduce()));
  CHECK_FALSE(is_legal(c, Action::tag(1)));  // already tagged
  c = apply(c, Action::shift());
  c = apply(c, Action::tag(1));
  CHECK(is_legal(c, Action::left(1)));
  CHECK_FALSE(is_legal(c, Action::reduce()));  // 1 is headless
  c = apply(c, Action::right(1));
  CHECK(c.terminal());
  CHECK(legal_actions(c, inv).empty());
  auto fin = finalize_analysis(c);
  CHECK(fin.heads == std::vector<int>{0, 1});
  CHECK(fin.labels == std::vector<int>{-1, 1});
  CHECK(fin.tags == std::vector<int>{0, 1});
  CHECK(replay(2, c.history()) == c);
}

TEST_CASE("random walks keep invariants and finish within 3n+1 actions") {
  gen::Rng r(13);
  auto inv = small_inventory(3, 3);
  for (int trial = 0; trial < 2000; ++trial) {
    const int n = r.uniform(1, 9);
    ParserConfig c(n);
    int steps = 0;
    while (!c.terminal()) {
      auto legal = legal_actions(c, inv);
      REQUIRE(!legal.empty());
      c = apply(c, r.pick(legal));
      check_invariants(c);
      ++steps;
    }
    CHECK(steps <= 3 * n + 1);
    int tags = 0;
    for (const auto& a : c.history()) tags += a.kind == ActionKind::tag;
    CHECK(tags == n);
    auto fin = finalize_analysis(c);
    CHECK_FALSE(has_cycle(fin.heads));
    CHECK(is_projective(fin.heads));
  }
}

TEST_CASE("static oracle rebuilds random projective trees") {
  gen::Rng r(5);
  for (int trial = 0; trial < 500; ++trial) {
    const int n = r.uniform(1, 12);
    auto g = random_gold(r, n, 3, 3);
    ParserConfig c(n);
    while (!c.terminal()) c = apply(c, static_oracle(c, g));
    auto fin = finalize_analysis(c);
    CHECK(fin.heads == g.heads);
    CHECK(fin.tags == g.pos);
    CHECK(attachment_and_tag_errors(fin, g) == 0);
    for (int i = 0; i < n; ++i)
      if (g.heads[static_cast<std::size_t>(i)] != 0 || fin.labels[static_cast<std::size_t>(i)] != -1)
        CHECK(fin.labels[static_cast<std::size_t>(i)] == g.labels[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("dynamic cost equals the brute-force loss delta beyond the exhaustive range") {
  gen::Rng r(31);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = trial < 10 ? 6 : 7;
    auto g = random_gold(r, n, 2, 2);
    auto inv = small_inventory();
    ParserConfig c(n);
    while (!c.terminal()) {
      const int before = brute_force_minloss(c, g, 2, 2);
      bool zero = false;
      for (const auto& a : legal_actions(c, inv)) {
        const int cost = dynamic_cost(c, a, g);
        CHECK(cost == brute_force_minloss(apply(c, a), g, 2, 2) - before);
        zero |= cost == 0;
      }
      CHECK(zero);
      c = apply(c, r.pick(legal_actions(c, inv)));
    }
  }
}

TEST_CASE("zero-cost actions keep gold labels on gold arcs") {
  gen::Rng r(2);
  auto inv = small_inventory(2, 3);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = r.uniform(2, 8);
    auto g = random_gold(r, n, 2, 3);
    ParserConfig c(n);
    while (!c.terminal()) {
      auto z = zero_cost_actions(c, g, inv);
      REQUIRE(!z.empty());
      for (const auto& a : z) {
        CHECK(dynamic_cost(c, a, g) == 0);
        if (a.kind == ActionKind::left_arc && g.heads[static_cast<std::size_t>(c.top() - 1)] == c.front())
          CHECK(a.arg == g.labels[static_cast<std::size_t>(c.top() - 1)]);
        if (a.kind == ActionKind::right_arc && g.heads[static_cast<std::size_t>(c.front() - 1)] == c.top())
          CHECK(a.arg == g.labels[static_cast<std::size_t>(c.front() - 1)]);
      }
      c = apply(c, r.pick(legal_actions(c, inv)));
    }
  }
}

TEST_CASE("exhaustive oracle check, small sizes") {
  auto rep = exhaustive_oracle_check(1, 4, 2, 2, 4);
  CHECK(rep.passed());
  CHECK(rep.cost_mismatches == 0);
  CHECK(rep.dead_ends == 0);
  CHECK(rep.oracle_failures == 0);
  // trees x POS assignments x label assignments
  CHECK(rep.trees == 1 * 2 * 2 + 3 * 4 * 4 + 12 * 8 * 8 + 55 * 16 * 16);
  CHECK(rep.configs > 0);
}

TEST_CASE("state keys") {
  ParserConfig a(2), b(2);
  a = apply(apply(apply(a, Action::tag(0)), Action::shift()), Action::tag(0));
  b = apply(apply(apply(b, Action::tag(0)), Action::shift()), Action::tag(0));
  auto la = apply(a, Action::left(0));
  auto lb = apply(b, Action::left(1));
  CHECK(la.key() != lb.key());
  CHECK(la.key(false) == lb.key(false));
  CHECK(a.key() == b.key());
}

TEST_CASE("gold annotation requires inventory members") {
  DepTree t;
  t.utterance = Utterance::from_words(std::vector<std::string>{"a"});
  t.heads = {0};
  t.labels = {"root"};
  t.pos = {"X"};
  ActionInventory inv({"Y"}, {"root"});
  CHECK_THROWS_AS(GoldAnnotation::from_tree(t, inv), ValidationError);
}
