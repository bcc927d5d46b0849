#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oral/corpus.hpp"

namespace oral {

// Lowercases, replaces punctuation (Unicode P* plus guillemets, dashes, ellipsis) with spaces,
// collapses whitespace and trims. An apostrophe (U+0027 or U+2019) survives
// when both neighbours are letters, so French elisions like "l'homme" stay
// intact. Idempotent.
std::string normalize_text(std::string_view raw);

// Character classes used by normalize_text, exposed for property tests.
bool is_punctuation(char32_t c);
bool is_letter(char32_t c);
bool is_uppercase(char32_t c);
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

struct DiarizationTurn {
  std::string recording_id;
  std::string speaker_id;
  double start = 0.0;
  double end = 0.0;
  std::string raw_text;
};

// JSON lines: {"recording_id", "speaker", "start", "end", "text"}.
std::vector<DiarizationTurn> read_turns(const std::filesystem::path& path);

struct SegmentStats {
  std::size_t turns = 0;
  std::size_t empty = 0;
  std::size_t duplicates = 0;
  std::size_t kept = 0;
  std::size_t words = 0;
};

// One utterance per non-empty normalised turn. Duplicate normalised texts are
// dropped corpus-wide, first occurrence wins.
std::vector<Utterance> segment_turns(std::span<const DiarizationTurn> turns,
                                     SegmentStats* stats = nullptr);

class NameInventory {
 public:
  // Names must be pairwise distinct single words that normalise to themselves.
  explicit NameInventory(std::vector<std::string> names);
  static NameInventory load(const std::filesystem::path& path);  // one name per line

  const std::vector<std::string>& names() const { return names_; }
  std::size_t size() const { return names_.size(); }

 private:
  std::vector<std::string> names_;
};

inline constexpr std::string_view kDefaultPlaceholder = "<pers>";

// Replaces each placeholder occurrence with a proper name. Each recording
// draws its own seeded permutation of the inventory; the k-th occurrence in a
// recording gets the k-th name of that permutation, so slots in one recording
// never share a name. More slots than names in a recording is an error.
std::vector<Utterance> deanonymize(std::span<const Utterance> utts, std::string_view placeholder,
                                   const NameInventory& names, std::uint64_t seed);

// Appends a synthetic "." token to every utterance.
std::vector<Utterance> repunctuate(std::span<const Utterance> utts);

// Drops synthetic tokens and renumbers the rest.
Utterance strip_synthetic(const Utterance& u);
std::vector<Utterance> strip_synthetic(std::span<const Utterance> utts);

}  // namespace oral
