#pragma once

// Hand-rolled generators for the property tests.

#include <random>
#include <string>
#include <vector>

#include "oral/corpus.hpp"
#include "oral/transition.hpp"

namespace gen {

struct Rng {
  std::mt19937_64 eng;
  explicit Rng(std::uint64_t seed) : eng(seed) {}
  int uniform(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(eng); }
  double real(double lo = 0.0, double hi = 1.0) {
    return std::uniform_real_distribution<double>(lo, hi)(eng);
  }
  double normal() { return std::normal_distribution<double>(0.0, 1.0)(eng); }
  bool coin(double p = 0.5) { return real() < p; }
  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(0, static_cast<int>(v.size()) - 1))];
  }
};

inline std::string word(Rng& r, const std::string& alphabet = "abcde", int max_len = 6) {
  std::string w;
  const int n = r.uniform(1, max_len);
  for (int i = 0; i < n; ++i) w += alphabet[static_cast<std::size_t>(r.uniform(0, static_cast<int>(alphabet.size()) - 1))];
  return w;
}

// Uniform over functional graphs, kept when they form a projective tree.
inline std::vector<int> projective_heads(Rng& r, int n) {
  for (;;) {
    std::vector<int> h(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      do h[static_cast<std::size_t>(i)] = r.uniform(0, n);
      while (h[static_cast<std::size_t>(i)] == i + 1);
    }
    if (!oral::has_cycle(h) && oral::is_projective(h)) return h;
  }
}

inline oral::DepTree tree(Rng& r, int n, const std::vector<std::string>& pos,
                          const std::vector<std::string>& labels, const std::string& id) {
  std::vector<std::string> words;
  for (int i = 0; i < n; ++i) words.push_back(word(r));
  oral::DepTree t;
  t.utterance = oral::Utterance::from_words(words, "rec" + std::to_string(r.uniform(1, 3)), id);
  t.heads = projective_heads(r, n);
  for (int i = 0; i < n; ++i) {
    t.pos.push_back(r.pick(pos));
    t.labels.push_back(r.pick(labels));
  }
  t.extra.assign(static_cast<std::size_t>(n), {"_", "_", "_", "_", "_"});
  return t;
}

}  // namespace gen
