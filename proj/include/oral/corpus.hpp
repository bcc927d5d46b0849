#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace oral {

struct TimeSpan {
  double start = 0.0;
  double end = 0.0;
  bool operator==(const TimeSpan&) const = default;
};

struct Token {
  std::string surface;
  int index = 0;  // 1-based within the utterance
  std::optional<bool> oov;
  bool synthetic = false;
  bool operator==(const Token&) const = default;
};

struct Utterance {
  std::string id;
  std::vector<Token> tokens;
  std::string recording_id;
  std::optional<std::string> speaker_id;
  std::optional<TimeSpan> time_span;

  // Builds contiguous 1-based tokens from already normalized words.
  static Utterance from_words(std::span<const std::string> words, std::string recording_id = {},
                              std::string id = {});

  std::size_t size() const { return tokens.size(); }
  std::string text() const;  // surfaces joined by single spaces
  bool operator==(const Utterance&) const = default;
};

void validate(const Utterance& u);

// Closed POS and dependency-label inventories. Empty lists accept anything.
struct TagSet {
  std::vector<std::string> pos;
  std::vector<std::string> labels;

  static TagSet load(const std::filesystem::path& path);  // {"upos": [...], "deprel": [...]}
  bool accepts_pos(std::string_view p) const;
  bool accepts_label(std::string_view l) const;
};

// Per-token vectors are indexed by token position - 1.
struct DepTree {
  Utterance utterance;
  std::vector<int> heads;  // 0 = artificial root
  std::vector<std::string> labels;
  std::vector<std::string> pos;
  // LEMMA, XPOS, FEATS, DEPS, MISC carried through untouched.
  std::vector<std::array<std::string, 5>> extra;
  std::vector<std::string> comments;  // comment lines other than the recognised metadata keys

  std::size_t size() const { return heads.size(); }
  std::vector<std::string> forms() const;
};

// True when following heads from some token never reaches 0 (or leaves [0, n]).
bool has_cycle(std::span<const int> heads);

// Throws ValidationError on size mismatch, out-of-range heads, cycles, or
// labels/tags outside a supplied tag set.
void validate(const DepTree& tree, const TagSet* tagset = nullptr);

std::vector<DepTree> parse_conllu(std::istream& in, const std::string& source = "<stream>");
std::vector<DepTree> read_conllu(const std::filesystem::path& path);
void write_conllu(std::ostream& out, std::span<const DepTree> trees);
void write_conllu(const std::filesystem::path& path, std::span<const DepTree> trees);

struct SluSample {
  Utterance utterance;
  std::vector<std::string> bio;
};

void validate(const SluSample& s);

// Two columns (token, BIO tag), blank line between utterances, optional
// "# id = ..." comment preceding an utterance.
std::vector<SluSample> parse_slu_tsv(std::istream& in, const std::string& source = "<stream>");
std::vector<SluSample> read_slu_tsv(const std::filesystem::path& path);
void write_slu_tsv(std::ostream& out, std::span<const SluSample> samples);
void write_slu_tsv(const std::filesystem::path& path, std::span<const SluSample> samples);

struct LabeledDocument {
  std::string id;
  std::string text;
  std::string category;
  std::optional<std::string> channel;
  std::optional<std::string> date;
};

// One JSON object per line: {"id", "text", "category", "channel", "date"}.
// When `categories` is non-empty every category must belong to it.
std::vector<LabeledDocument> read_documents(const std::filesystem::path& path,
                                            std::span<const std::string> categories = {});
void write_documents(const std::filesystem::path& path, std::span<const LabeledDocument> docs);

// Utterances as JSON lines: {"id", "recording_id", "speaker", "start", "end",
// "text", "synthetic": [1-based positions]}.
std::vector<Utterance> read_utterances(const std::filesystem::path& path);
void write_utterances(std::ostream& out, std::span<const Utterance> utts);
void write_utterances(const std::filesystem::path& path, std::span<const Utterance> utts);
nlohmann::ordered_json utterance_to_json(const Utterance& u);
Utterance utterance_from_json(const nlohmann::json& j);

enum class Part { train, dev, test };
std::string_view to_string(Part p);
Part part_from_string(std::string_view s);

struct SplitItem {
  std::string id;
  std::string stratum;
  std::size_t weight = 1;  // e.g. word count, only used for reporting
};

struct SplitSpec {
  std::uint64_t seed = 0;
  // Sorted by id.
  std::vector<std::pair<std::string, Part>> assignment;

  std::array<std::size_t, 3> sizes() const;
  std::optional<Part> part_of(std::string_view id) const;
  std::vector<std::string> members(Part p) const;
  bool operator==(const SplitSpec&) const = default;
};

// Largest-remainder allocation of each stratum (strata visited in name
// order, remainder ties to the earlier part), then a seeded shuffle inside
// each stratum decides membership.
SplitSpec stratified_split(std::span<const SplitItem> items, std::array<double, 3> ratios,
                           std::uint64_t seed);

nlohmann::ordered_json to_json(const SplitSpec& s);
SplitSpec split_from_json(const nlohmann::json& j);

}  // namespace oral
