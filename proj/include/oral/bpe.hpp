#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oral {

inline constexpr std::string_view kEndOfWord = "</w>";
inline constexpr std::size_t kDeskBpeVocab = 2000;

// Character-level BPE with an explicit end-of-word marker appended to the
// last character of every word.
class BpeModel {
 public:
  using Merge = std::pair<std::string, std::string>;

  BpeModel() = default;
  BpeModel(std::vector<Merge> merges, std::set<std::string> vocab,
           std::string end_marker = std::string(kEndOfWord));

  const std::vector<Merge>& merges() const { return merges_; }
  const std::set<std::string>& vocab() const { return vocab_; }
  const std::string& end_marker() const { return end_marker_; }

  // Subword units; removing the end marker from their concatenation gives `word`.
  std::vector<std::string> encode(std::string_view word) const;
  std::string decode(std::span<const std::string> units) const;

  // "bpe v1 <n_merges> <end_marker>" then "left right" per line.
  void save(const std::filesystem::path& path) const;
  void save_vocab(const std::filesystem::path& path) const;  // one unit per line
  // Without a vocabulary file the vocabulary is rebuilt from the merge list.
  static BpeModel load(const std::filesystem::path& path,
                       const std::optional<std::filesystem::path>& vocab_path = std::nullopt);

 private:
  std::vector<Merge> merges_;
  std::map<Merge, std::size_t> rank_;
  std::set<std::string> vocab_;
  std::string end_marker_ = std::string(kEndOfWord);
};

// Characters of `word` as base symbols, the last one carrying the end marker.
std::vector<std::string> initial_symbols(std::string_view word, std::string_view end_marker);

// Greedy BPE. Each round merges the most frequent adjacent pair (ties: the
// lexicographically smallest pair) until the vocabulary reaches `target_vocab`
// or no pair occurs at least twice. Fails on an empty corpus or a target
// smaller than the base alphabet.
BpeModel bpe_train(std::span<const std::string> corpus, std::size_t target_vocab,
                   std::string_view end_marker = kEndOfWord);

struct VocabOverlap {
  double of_first = 0.0;   // 100 |A∩B| / |A|
  double of_second = 0.0;  // 100 |A∩B| / |B|
  double jaccard = 0.0;    // 100 |A∩B| / |A∪B|
  std::size_t shared = 0;
};

VocabOverlap vocab_overlap(const BpeModel& a, const BpeModel& b);
double vocab_overlap(const std::set<std::string>& a, const std::set<std::string>& b);

}  // namespace oral
