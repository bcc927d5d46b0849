#include "oral/corpus.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "oral/error.hpp"
#include "oral/util.hpp"

namespace oral {

using nlohmann::json;
using nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// util

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\n' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && !(s[j] == ' ' || s[j] == '\t' || s[j] == '\n' || s[j] == '\r')) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_on(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::uint64_t fnv1a64(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

namespace {
std::atomic<unsigned> g_max_threads{0};
}

void set_max_threads(unsigned n) { g_max_threads = n; }

unsigned max_threads() {
  unsigned n = g_max_threads.load();
  if (n == 0) n = std::max(1u, std::thread::hardware_concurrency());
  return n;
}

// ---------------------------------------------------------------------------
// Utterance

Utterance Utterance::from_words(std::span<const std::string> words, std::string recording_id,
                                std::string id) {
  Utterance u;
  u.id = std::move(id);
  u.recording_id = std::move(recording_id);
  u.tokens.reserve(words.size());
  int i = 1;
  for (const auto& w : words) u.tokens.push_back(Token{w, i++, std::nullopt, false});
  return u;
}

std::string Utterance::text() const {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i].surface;
  }
  return out;
}

void validate(const Utterance& u) {
  if (u.tokens.empty()) throw ValidationError("utterance '" + u.id + "' has no tokens");
  for (std::size_t i = 0; i < u.tokens.size(); ++i) {
    const auto& t = u.tokens[i];
    if (t.surface.empty())
      throw ValidationError("utterance '" + u.id + "': empty token at " + std::to_string(i + 1));
    if (t.index != static_cast<int>(i) + 1)
      throw ValidationError("utterance '" + u.id + "': token indices not contiguous at " +
                            std::to_string(i + 1));
  }
  if (u.time_span && u.time_span->start > u.time_span->end)
    throw ValidationError("utterance '" + u.id + "': time span start after end");
}

// ---------------------------------------------------------------------------
// TagSet

TagSet TagSet::load(const std::filesystem::path& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  TagSet t;
  if (j.contains("upos")) t.pos = j.at("upos").get<std::vector<std::string>>();
  if (j.contains("deprel")) t.labels = j.at("deprel").get<std::vector<std::string>>();
  return t;
}

bool TagSet::accepts_pos(std::string_view p) const {
  return pos.empty() || std::find(pos.begin(), pos.end(), p) != pos.end();
}

bool TagSet::accepts_label(std::string_view l) const {
  return labels.empty() || std::find(labels.begin(), labels.end(), l) != labels.end();
}

// ---------------------------------------------------------------------------
// DepTree

std::vector<std::string> DepTree::forms() const {
  std::vector<std::string> out;
  out.reserve(utterance.tokens.size());
  for (const auto& t : utterance.tokens) out.push_back(t.surface);
  return out;
}

bool has_cycle(std::span<const int> heads) {
  const int n = static_cast<int>(heads.size());
  // 0 = unvisited, 1 = on current path, 2 = known to reach root
  std::vector<char> state(n + 1, 0);
  state[0] = 2;
  for (int start = 1; start <= n; ++start) {
    int v = start;
    std::vector<int> path;
    while (state[v] == 0) {
      state[v] = 1;
      path.push_back(v);
      int h = heads[v - 1];
      if (h < 0 || h > n) return true;
      v = h;
    }
    if (state[v] == 1) return true;
    for (int p : path) state[p] = 2;
  }
  return false;
}

void validate(const DepTree& tree, const TagSet* tagset) {
  const auto& id = tree.utterance.id;
  validate(tree.utterance);
  const std::size_t n = tree.utterance.tokens.size();
  if (tree.heads.size() != n || tree.labels.size() != n || tree.pos.size() != n)
    throw ValidationError("tree '" + id + "': column sizes differ from token count");
  for (std::size_t i = 0; i < n; ++i) {
    if (tree.heads[i] < 0 || tree.heads[i] > static_cast<int>(n))
      throw ValidationError("tree '" + id + "': head of token " + std::to_string(i + 1) +
                            " out of range");
  }
  if (has_cycle(tree.heads)) throw ValidationError("tree '" + id + "': cyclic head structure");
  if (tagset) {
    for (std::size_t i = 0; i < n; ++i) {
      if (!tagset->accepts_pos(tree.pos[i]))
        throw ValidationError("tree '" + id + "': unknown POS '" + tree.pos[i] + "'");
      if (!tagset->accepts_label(tree.labels[i]))
        throw ValidationError("tree '" + id + "': unknown label '" + tree.labels[i] + "'");
    }
  }
}

namespace {

bool parse_int(const std::string& s, int& out) {
  if (s.empty()) return false;
  std::size_t i = 0;
  bool neg = false;
  if (s[0] == '-') {
    neg = true;
    i = 1;
    if (s.size() == 1) return false;
  }
  long v = 0;
  for (; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
    if (v > 1'000'000'000L) return false;
  }
  out = static_cast<int>(neg ? -v : v);
  return true;
}

bool take_meta(const std::string& comment, std::string_view key, std::string& value) {
  // "# key = value"
  std::string_view c = comment;
  if (c.size() < 2 || c[0] != '#') return false;
  c.remove_prefix(1);
  while (!c.empty() && c.front() == ' ') c.remove_prefix(1);
  if (c.substr(0, key.size()) != key) return false;
  c.remove_prefix(key.size());
  while (!c.empty() && c.front() == ' ') c.remove_prefix(1);
  if (c.empty() || c.front() != '=') return false;
  c.remove_prefix(1);
  while (!c.empty() && c.front() == ' ') c.remove_prefix(1);
  value = std::string(c);
  return true;
}

struct BlockBuilder {
  DepTree tree;
  bool open = false;
  std::size_t first_line = 0;
};

}  // namespace

std::vector<DepTree> parse_conllu(std::istream& in, const std::string& source) {
  std::vector<DepTree> trees;
  BlockBuilder cur;
  std::string line;
  std::size_t lineno = 0;

  auto flush = [&] {
    if (!cur.open) return;
    if (cur.tree.utterance.tokens.empty()) {
      throw ParseError(source, cur.first_line, "sentence block without token lines");
    }
    try {
      validate(cur.tree);
    } catch (const ValidationError& e) {
      throw ValidationError(source + ":" + std::to_string(cur.first_line) + ": " + e.what());
    }
    trees.push_back(std::move(cur.tree));
    cur = BlockBuilder{};
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (!cur.open) {
      cur.open = true;
      cur.first_line = lineno;
    }
    if (line[0] == '#') {
      std::string v;
      if (take_meta(line, "sent_id", v)) {
        cur.tree.utterance.id = v;
      } else if (take_meta(line, "recording_id", v)) {
        cur.tree.utterance.recording_id = v;
      } else if (take_meta(line, "speaker_id", v)) {
        cur.tree.utterance.speaker_id = v;
      } else {
        cur.tree.comments.push_back(line);
      }
      continue;
    }
    auto cols = split_on(line, '\t');
    if (cols.size() != 10)
      throw ParseError(source, lineno,
                       "expected 10 tab-separated columns, found " + std::to_string(cols.size()));
    int id = 0;
    if (!parse_int(cols[0], id))
      throw ParseError(source, lineno, "unsupported token id '" + cols[0] + "'");
    const int expected = static_cast<int>(cur.tree.utterance.tokens.size()) + 1;
    if (id != expected)
      throw ParseError(source, lineno,
                       "token id " + cols[0] + " out of sequence (expected " +
                           std::to_string(expected) + ")");
    int head = 0;
    if (!parse_int(cols[6], head) || head < 0)
      throw ParseError(source, lineno, "non-integer HEAD '" + cols[6] + "'");
    if (cols[1].empty()) throw ParseError(source, lineno, "empty FORM");
    cur.tree.utterance.tokens.push_back(Token{cols[1], id, std::nullopt, false});
    cur.tree.pos.push_back(cols[3]);
    cur.tree.heads.push_back(head);
    cur.tree.labels.push_back(cols[7]);
    cur.tree.extra.push_back({cols[2], cols[4], cols[5], cols[8], cols[9]});
  }
  flush();
  return trees;
}

std::vector<DepTree> read_conllu(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_conllu(in, path.string());
}

void write_conllu(std::ostream& out, std::span<const DepTree> trees) {
  for (const auto& t : trees) {
    if (!t.utterance.id.empty()) out << "# sent_id = " << t.utterance.id << '\n';
    if (!t.utterance.recording_id.empty())
      out << "# recording_id = " << t.utterance.recording_id << '\n';
    if (t.utterance.speaker_id) out << "# speaker_id = " << *t.utterance.speaker_id << '\n';
    for (const auto& c : t.comments) out << c << '\n';
    for (std::size_t i = 0; i < t.size(); ++i) {
      static const std::array<std::string, 5> blank{"_", "_", "_", "_", "_"};
      const auto& x = i < t.extra.size() ? t.extra[i] : blank;
      const auto& pos = t.pos[i].empty() ? std::string("_") : t.pos[i];
      const auto& lab = t.labels[i].empty() ? std::string("_") : t.labels[i];
      out << (i + 1) << '\t' << t.utterance.tokens[i].surface << '\t' << x[0] << '\t' << pos
          << '\t' << x[1] << '\t' << x[2] << '\t' << t.heads[i] << '\t' << lab << '\t' << x[3]
          << '\t' << x[4] << '\n';
    }
    out << '\n';
  }
}

void write_conllu(const std::filesystem::path& path, std::span<const DepTree> trees) {
  auto out = open_out(path);
  write_conllu(out, trees);
  if (!out) throw IoError("write failed: " + path.string());
}

// ---------------------------------------------------------------------------
// SLU TSV

void validate(const SluSample& s) {
  validate(s.utterance);
  if (s.bio.size() != s.utterance.tokens.size())
    throw ValidationError("slu sample '" + s.utterance.id + "': tag count differs from tokens");
  std::string prev = "O";
  for (std::size_t i = 0; i < s.bio.size(); ++i) {
    const auto& t = s.bio[i];
    if (t == "O") {
      prev = t;
      continue;
    }
    if (t.size() < 3 || (t[0] != 'B' && t[0] != 'I') || t[1] != '-')
      throw ValidationError("slu sample '" + s.utterance.id + "': malformed tag '" + t + "'");
    if (t[0] == 'I') {
      std::string name = t.substr(2);
      if (prev == "O" || prev.substr(2) != name)
        throw ValidationError("slu sample '" + s.utterance.id + "': '" + t +
                              "' without preceding B-/I-" + name);
    }
    prev = t;
  }
}

std::vector<SluSample> parse_slu_tsv(std::istream& in, const std::string& source) {
  std::vector<SluSample> out;
  SluSample cur;
  std::vector<std::string> words;
  std::string line;
  std::size_t lineno = 0;
  auto flush = [&] {
    if (words.empty()) return;
    std::string id = cur.utterance.id;
    if (id.empty()) id = std::to_string(out.size() + 1);
    cur.utterance = Utterance::from_words(words, {}, id);
    out.push_back(std::move(cur));
    cur = SluSample{};
    words.clear();
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      flush();
      continue;
    }
    if (line[0] == '#') {
      std::string v;
      if (take_meta(line, "id", v)) cur.utterance.id = v;
      continue;
    }
    auto cols = split_on(line, '\t');
    if (cols.size() != 2 || cols[0].empty() || cols[1].empty())
      throw ParseError(source, lineno, "expected 'token<TAB>tag'");
    // stray I- tags are accepted here; bio_decode repairs them
    const auto& t = cols[1];
    if (t != "O" && (t.size() < 3 || (t[0] != 'B' && t[0] != 'I') || t[1] != '-'))
      throw ValidationError(source + ":" + std::to_string(lineno) + ": malformed tag '" + t + "'");
    words.push_back(cols[0]);
    cur.bio.push_back(cols[1]);
  }
  flush();
  return out;
}

std::vector<SluSample> read_slu_tsv(const std::filesystem::path& path) {
  auto in = open_in(path);
  return parse_slu_tsv(in, path.string());
}

void write_slu_tsv(std::ostream& out, std::span<const SluSample> samples) {
  for (const auto& s : samples) {
    if (!s.utterance.id.empty()) out << "# id = " << s.utterance.id << '\n';
    for (std::size_t i = 0; i < s.utterance.tokens.size(); ++i)
      out << s.utterance.tokens[i].surface << '\t' << s.bio[i] << '\n';
    out << '\n';
  }
}

void write_slu_tsv(const std::filesystem::path& path, std::span<const SluSample> samples) {
  auto out = open_out(path);
  write_slu_tsv(out, samples);
}

// ---------------------------------------------------------------------------
// Documents

std::vector<LabeledDocument> read_documents(const std::filesystem::path& path,
                                            std::span<const std::string> categories) {
  auto in = open_in(path);
  std::vector<LabeledDocument> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    LabeledDocument d;
    try {
      d.id = j.contains("id") ? j.at("id").get<std::string>() : std::to_string(lineno);
      d.text = j.at("text").get<std::string>();
      d.category = j.at("category").get<std::string>();
      if (j.contains("channel") && !j.at("channel").is_null())
        d.channel = j.at("channel").get<std::string>();
      if (j.contains("date") && !j.at("date").is_null()) d.date = j.at("date").get<std::string>();
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
    if (!categories.empty() &&
        std::find(categories.begin(), categories.end(), d.category) == categories.end())
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": category '" +
                            d.category + "' not in the declared inventory");
    docs.push_back(std::move(d));
  }
  return docs;
}

void write_documents(const std::filesystem::path& path, std::span<const LabeledDocument> docs) {
  auto out = open_out(path);
  for (const auto& d : docs) {
    ordered_json j;
    j["id"] = d.id;
    j["text"] = d.text;
    j["category"] = d.category;
    if (d.channel) j["channel"] = *d.channel;
    if (d.date) j["date"] = *d.date;
    out << j.dump() << '\n';
  }
}

// ---------------------------------------------------------------------------
// Utterance JSON lines

ordered_json utterance_to_json(const Utterance& u) {
  ordered_json j;
  j["id"] = u.id;
  j["recording_id"] = u.recording_id;
  if (u.speaker_id) j["speaker"] = *u.speaker_id;
  if (u.time_span) {
    j["start"] = u.time_span->start;
    j["end"] = u.time_span->end;
  }
  j["text"] = u.text();
  std::vector<int> synth;
  for (const auto& t : u.tokens)
    if (t.synthetic) synth.push_back(t.index);
  if (!synth.empty()) j["synthetic"] = synth;
  return j;
}

Utterance utterance_from_json(const json& j) {
  auto words = split_ws(j.at("text").get<std::string>());
  Utterance u = Utterance::from_words(words, j.value("recording_id", std::string{}),
                                      j.value("id", std::string{}));
  if (j.contains("speaker") && !j.at("speaker").is_null())
    u.speaker_id = j.at("speaker").get<std::string>();
  if (j.contains("start") && j.contains("end"))
    u.time_span = TimeSpan{j.at("start").get<double>(), j.at("end").get<double>()};
  if (j.contains("synthetic")) {
    for (int p : j.at("synthetic").get<std::vector<int>>()) {
      if (p < 1 || p > static_cast<int>(u.tokens.size()))
        throw ValidationError("synthetic position out of range in utterance '" + u.id + "'");
      u.tokens[p - 1].synthetic = true;
    }
  }
  return u;
}

std::vector<Utterance> read_utterances(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<Utterance> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(utterance_from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

void write_utterances(std::ostream& out, std::span<const Utterance> utts) {
  for (const auto& u : utts) out << utterance_to_json(u).dump() << '\n';
}

void write_utterances(const std::filesystem::path& path, std::span<const Utterance> utts) {
  auto out = open_out(path);
  write_utterances(out, utts);
}

// ---------------------------------------------------------------------------
// Splits

std::string_view to_string(Part p) {
  switch (p) {
    case Part::train: return "train";
    case Part::dev: return "dev";
    case Part::test: return "test";
  }
  return "?";
}

Part part_from_string(std::string_view s) {
  if (s == "train") return Part::train;
  if (s == "dev") return Part::dev;
  if (s == "test") return Part::test;
  throw ValidationError("unknown split part '" + std::string(s) + "'");
}

std::array<std::size_t, 3> SplitSpec::sizes() const {
  std::array<std::size_t, 3> n{0, 0, 0};
  for (const auto& [id, p] : assignment) ++n[static_cast<int>(p)];
  return n;
}

std::optional<Part> SplitSpec::part_of(std::string_view id) const {
  auto it = std::lower_bound(assignment.begin(), assignment.end(), id,
                             [](const auto& a, std::string_view k) { return a.first < k; });
  if (it == assignment.end() || it->first != id) return std::nullopt;
  return it->second;
}

std::vector<std::string> SplitSpec::members(Part p) const {
  std::vector<std::string> out;
  for (const auto& [id, q] : assignment)
    if (q == p) out.push_back(id);
  return out;
}

SplitSpec stratified_split(std::span<const SplitItem> items, std::array<double, 3> ratios,
                           std::uint64_t seed) {
  if (items.empty()) throw ValidationError("stratified_split: empty input");
  double total = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ValidationError("stratified_split: negative ratio");
    total += r;
  }
  if (std::abs(total - 1.0) > 1e-9) throw ValidationError("stratified_split: ratios must sum to 1");

  std::map<std::string, std::vector<std::size_t>> strata;
  for (std::size_t i = 0; i < items.size(); ++i) strata[items[i].stratum].push_back(i);

  std::mt19937_64 rng(seed);
  SplitSpec spec;
  spec.seed = seed;
  spec.assignment.reserve(items.size());
  for (auto& [name, members] : strata) {
    const std::size_t m = members.size();
    std::array<std::size_t, 3> quota{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
      double exact = static_cast<double>(m) * ratios[k];
      // guard against 0.1 * 100 = 10.000000000000002 style noise
      double fl = std::floor(exact + 1e-9);
      quota[k] = static_cast<std::size_t>(fl);
      frac[k] = exact - fl;
      assigned += quota[k];
    }
    while (assigned > m) {
      int k = static_cast<int>(std::min_element(frac.begin(), frac.end()) - frac.begin());
      if (quota[k] == 0) {
        frac[k] = 2.0;
        continue;
      }
      --quota[k];
      --assigned;
      frac[k] += 1.0;
    }
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b] + 1e-12; });
    for (std::size_t r = 0; assigned < m; ++r) {
      ++quota[order[r % 3]];
      ++assigned;
    }
    std::vector<std::size_t> shuffled = members;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::size_t pos = 0;
    for (int k = 0; k < 3; ++k)
      for (std::size_t c = 0; c < quota[k]; ++c)
        spec.assignment.emplace_back(items[shuffled[pos++]].id, static_cast<Part>(k));
  }
  std::sort(spec.assignment.begin(), spec.assignment.end());
  for (std::size_t i = 1; i < spec.assignment.size(); ++i)
    if (spec.assignment[i].first == spec.assignment[i - 1].first)
      throw ValidationError("stratified_split: duplicate id '" + spec.assignment[i].first + "'");
  return spec;
}

ordered_json to_json(const SplitSpec& s) {
  ordered_json j;
  j["schema_version"] = 1;
  j["seed"] = s.seed;
  ordered_json a = ordered_json::object();
  for (const auto& [id, p] : s.assignment) a[id] = std::string(to_string(p));
  j["assignment"] = std::move(a);
  return j;
}

SplitSpec split_from_json(const json& j) {
  SplitSpec s;
  s.seed = j.at("seed").get<std::uint64_t>();
  for (const auto& [id, p] : j.at("assignment").items())
    s.assignment.emplace_back(id, part_from_string(p.get<std::string>()));
  std::sort(s.assignment.begin(), s.assignment.end());
  return s;
}

}  // namespace oral
