#pragma once

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "oral/corpus.hpp"

namespace oral {

struct AttachmentCounts {
  std::size_t tokens = 0;
  std::size_t head_ok = 0;
  std::size_t label_ok = 0;  // head and label both right
  std::size_t pos_ok = 0;
  double las() const;
  double uas() const;
  double upos() const;
};

struct AttachmentReport {
  AttachmentCounts all;
  std::optional<AttachmentCounts> subset;
  std::string subset_name;

  double las() const { return all.las(); }
  double uas() const { return all.uas(); }
  double upos() const { return all.upos(); }
  // subset - global, in points; zero without a subset
  double delta_las() const;
  double delta_uas() const;
  double delta_upos() const;
  nlohmann::json to_json() const;
};

using TokenPredicate = std::function<bool(const DepTree& gold, std::size_t i)>;

// Percentages over every token. Sentences must pair up with identical forms.
AttachmentReport attachment_scores(std::span<const DepTree> gold, std::span<const DepTree> pred,
                                   const TokenPredicate& subset = {},
                                   std::string subset_name = "subset");

std::vector<Token> mark_oov(std::span<const Token> tokens, const std::set<std::string>& lexicon);
void mark_oov(std::vector<DepTree>& trees, const std::set<std::string>& lexicon);
std::set<std::string> read_lexicon(const std::filesystem::path& path);

struct AlignmentCounts {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t ref_length = 0;
  std::size_t errors() const { return substitutions + deletions + insertions; }
  // Throws when ref_length is 0.
  double rate() const;
  AlignmentCounts& operator+=(const AlignmentCounts& o);
  bool operator==(const AlignmentCounts&) const = default;
};

// Unit-cost edit distance; among optimal alignments the backtrace prefers
// substitution (or match) over deletion over insertion.
AlignmentCounts align_error_rate(std::span<const std::string> ref, std::span<const std::string> hyp);

// Support-weighted mean of per-class F1 over gold classes, in [0, 1].
double weighted_f1(std::span<const std::string> gold, std::span<const std::string> pred);

double student_t_cdf(double t, double df);
double student_t_quantile(double p, double df);

struct ConfidenceInterval {
  double mean = 0.0;
  double half_width = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::size_t n = 0;
  double level = 0.95;
  nlohmann::json to_json() const;
};

ConfidenceInterval t_confidence_interval(std::span<const double> values, double level = 0.95);

// "12.34 ± 0.56" with the given number of decimals.
std::string format_pm(double mean, double half_width, int decimals = 2);

// Left-aligned first column, right-aligned others, padded to the widest cell.
std::string text_table(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

}  // namespace oral
