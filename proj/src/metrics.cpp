#include "oral/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include <boost/math/special_functions/beta.hpp>

#include "oral/error.hpp"
#include "oral/normalize.hpp"
#include "oral/util.hpp"

namespace oral {

namespace {
double pct(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::json counts_json(const AttachmentCounts& c) {
  return {{"tokens", c.tokens}, {"las", c.las()}, {"uas", c.uas()}, {"upos", c.upos()}};
}
}  // namespace

double AttachmentCounts::las() const { return pct(label_ok, tokens); }
double AttachmentCounts::uas() const { return pct(head_ok, tokens); }
double AttachmentCounts::upos() const { return pct(pos_ok, tokens); }

double AttachmentReport::delta_las() const { return subset ? subset->las() - all.las() : 0.0; }
double AttachmentReport::delta_uas() const { return subset ? subset->uas() - all.uas() : 0.0; }
double AttachmentReport::delta_upos() const { return subset ? subset->upos() - all.upos() : 0.0; }

nlohmann::json AttachmentReport::to_json() const {
  nlohmann::json j = counts_json(all);
  if (subset) {
    j["subset"] = counts_json(*subset);
    j["subset"]["name"] = subset_name;
    j["subset"]["delta_las"] = delta_las();
    j["subset"]["delta_uas"] = delta_uas();
    j["subset"]["delta_upos"] = delta_upos();
  }
  return j;
}

AttachmentReport attachment_scores(std::span<const DepTree> gold, std::span<const DepTree> pred,
                                   const TokenPredicate& subset, std::string subset_name) {
  if (gold.size() != pred.size())
    throw ValidationError("attachment scores: " + std::to_string(gold.size()) +
                          " gold sentences vs " + std::to_string(pred.size()) + " predicted");
  AttachmentReport r;
  r.subset_name = std::move(subset_name);
  if (subset) r.subset.emplace();
  for (std::size_t s = 0; s < gold.size(); ++s) {
    const auto& g = gold[s];
    const auto& p = pred[s];
    if (g.size() != p.size() || g.forms() != p.forms())
      throw ValidationError("attachment scores: sentence " + std::to_string(s + 1) + " ('" +
                            g.utterance.id + "') differs between gold and prediction");
    for (std::size_t i = 0; i < g.size(); ++i) {
      const bool head = g.heads[i] == p.heads[i];
      const bool label = head && g.labels[i] == p.labels[i];
      const bool pos = g.pos[i] == p.pos[i];
      for (AttachmentCounts* c : {&r.all, subset && subset(g, i) ? &*r.subset : nullptr}) {
        if (!c) continue;
        ++c->tokens;
        c->head_ok += head;
        c->label_ok += label;
        c->pos_ok += pos;
      }
    }
  }
  return r;
}

std::vector<Token> mark_oov(std::span<const Token> tokens, const std::set<std::string>& lexicon) {
  if (lexicon.empty()) throw ValidationError("mark_oov: empty lexicon");
  std::vector<Token> out(tokens.begin(), tokens.end());
  for (auto& t : out) t.oov = !lexicon.contains(t.surface);
  return out;
}

void mark_oov(std::vector<DepTree>& trees, const std::set<std::string>& lexicon) {
  for (auto& t : trees) t.utterance.tokens = mark_oov(t.utterance.tokens, lexicon);
}

std::set<std::string> read_lexicon(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::set<std::string> lex;
  std::string line;
  while (std::getline(in, line)) {
    for (auto& w : split_ws(line)) lex.insert(w);
  }
  if (lex.empty()) throw ValidationError("lexicon '" + path.string() + "' is empty");
  return lex;
}

// ---------------------------------------------------------------------------

double AlignmentCounts::rate() const {
  if (ref_length == 0) throw ValidationError("error rate undefined for an empty reference");
  return static_cast<double>(errors()) / static_cast<double>(ref_length);
}

AlignmentCounts& AlignmentCounts::operator+=(const AlignmentCounts& o) {
  substitutions += o.substitutions;
  deletions += o.deletions;
  insertions += o.insertions;
  ref_length += o.ref_length;
  return *this;
}

AlignmentCounts align_error_rate(std::span<const std::string> ref,
                                 std::span<const std::string> hyp) {
  const std::size_t n = ref.size(), m = hyp.size();
  std::vector<std::vector<std::size_t>> d(n + 1, std::vector<std::size_t>(m + 1));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j)
      d[i][j] = std::min({d[i - 1][j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1), d[i - 1][j] + 1,
                          d[i][j - 1] + 1});
  AlignmentCounts c;
  c.ref_length = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const std::size_t sub = ref[i - 1] == hyp[j - 1] ? 0 : 1;
      if (d[i][j] == d[i - 1][j - 1] + sub) {
        c.substitutions += sub;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      ++c.deletions;
      --i;
    } else {
      ++c.insertions;
      --j;
    }
  }
  return c;
}

double weighted_f1(std::span<const std::string> gold, std::span<const std::string> pred) {
  if (gold.empty()) throw ValidationError("weighted F1: empty input");
  if (gold.size() != pred.size()) throw ValidationError("weighted F1: length mismatch");
  std::map<std::string, std::size_t> support, predicted, correct;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    ++support[gold[i]];
    ++predicted[pred[i]];
    if (gold[i] == pred[i]) ++correct[gold[i]];
  }
  double total = 0.0;
  for (const auto& [cls, sup] : support) {
    const double tp = static_cast<double>(correct[cls]);
    const double np = static_cast<double>(predicted[cls]);
    const double p = np > 0 ? tp / np : 0.0;
    const double r = tp / static_cast<double>(sup);
    const double f1 = p + r > 0 ? 2 * p * r / (p + r) : 0.0;
    total += f1 * static_cast<double>(sup);
  }
  return total / static_cast<double>(gold.size());
}

// ---------------------------------------------------------------------------

double student_t_cdf(double t, double df) {
  if (!(df > 0)) throw ValidationError("student t: degrees of freedom must be positive");
  const double x = df / (df + t * t);
  const double tail = 0.5 * boost::math::ibeta(df / 2.0, 0.5, x);
  return t >= 0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double df) {
  if (!(p > 0.0 && p < 1.0)) throw ValidationError("student t: probability must be in (0, 1)");
  double lo = -1.0, hi = 1.0;
  while (student_t_cdf(lo, df) > p) lo *= 2.0;
  while (student_t_cdf(hi, df) < p) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * std::max(1.0, std::abs(hi)); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, df) < p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

nlohmann::json ConfidenceInterval::to_json() const {
  return {{"mean", mean}, {"half_width", half_width}, {"std", stddev}, {"n", n}, {"level", level}};
}

ConfidenceInterval t_confidence_interval(std::span<const double> values, double level) {
  if (values.size() < 2) throw ValidationError("confidence interval needs at least 2 values");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("confidence level must be in (0, 1)");
  ConfidenceInterval ci;
  ci.n = values.size();
  ci.level = level;
  const double n = static_cast<double>(values.size());
  ci.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - ci.mean) * (v - ci.mean);
  ci.stddev = std::sqrt(ss / (n - 1.0));
  ci.half_width = ci.stddev == 0.0
                      ? 0.0
                      : student_t_quantile((1.0 + level) / 2.0, n - 1.0) * ci.stddev / std::sqrt(n);
  return ci;
}

std::string format_pm(double mean, double half_width, int decimals) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.*f ± %.*f", decimals, mean, decimals, half_width);
  return buf;
}

std::string text_table(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows) {
  auto width = [](const std::string& s) { return decode_utf8(s).size(); };
  std::vector<std::size_t> w(header.size(), 0);
  for (std::size_t c = 0; c < header.size(); ++c) w[c] = width(header[c]);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < r.size() && c < w.size(); ++c) w[c] = std::max(w[c], width(r[c]));
  auto line = [&](const std::vector<std::string>& r) {
    std::string out;
    for (std::size_t c = 0; c < w.size(); ++c) {
      const std::string cell = c < r.size() ? r[c] : "";
      const std::string pad(w[c] - width(cell), ' ');
      if (c) out += "  ";
      out += c == 0 ? cell + pad : pad + cell;
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out + "\n";
  };
  std::string out = line(header);
  std::size_t total = 0;
  for (auto x : w) total += x;
  out += std::string(total + 2 * (w.size() - 1), '-') + "\n";
  for (const auto& r : rows) out += line(r);
  return out;
}

}  // namespace oral
