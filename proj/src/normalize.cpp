#include "oral/normalize.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include <unicode/uchar.h>

#include <json.hpp>

#include "oral/error.hpp"
#include "oral/util.hpp"

namespace oral {

std::u32string decode_utf8(std::string_view s) {
  std::u32string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    unsigned char c = static_cast<unsigned char>(s[i]);
    char32_t cp = 0;
    int extra = 0;
    if (c < 0x80) {
      cp = c;
    } else if ((c & 0xE0) == 0xC0) {
      cp = c & 0x1F;
      extra = 1;
    } else if ((c & 0xF0) == 0xE0) {
      cp = c & 0x0F;
      extra = 2;
    } else if ((c & 0xF8) == 0xF0) {
      cp = c & 0x07;
      extra = 3;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool ok = true;
    for (int k = 1; k <= extra; ++k) {
      if (i + k >= s.size()) {
        ok = false;
        break;
      }
      unsigned char cc = static_cast<unsigned char>(s[i + k]);
      if ((cc & 0xC0) != 0x80) {
        ok = false;
        break;
      }
      cp = (cp << 6) | (cc & 0x3F);
    }
    if (!ok || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(cp);
    i += extra + 1;
  }
  return out;
}

std::string encode_utf8(std::u32string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char32_t cp : s) {
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

bool is_punctuation(char32_t c) {
  switch (c) {
    case U'«':
    case U'»':
    case U'\u2014':
    case U'…':
      return true;
    default:
      return u_ispunct(static_cast<UChar32>(c));
  }
}

bool is_letter(char32_t c) { return u_isalpha(static_cast<UChar32>(c)); }

bool is_uppercase(char32_t c) { return u_isupper(static_cast<UChar32>(c)); }

namespace {

bool is_space(char32_t c) { return u_isUWhiteSpace(static_cast<UChar32>(c)) || c == U'\t'; }

bool is_apostrophe(char32_t c) { return c == U'\'' || c == U'’'; }

}  // namespace

std::string normalize_text(std::string_view raw) {
  // Case mapping first, so apostrophe flanking is judged on what is emitted.
  std::u32string mapped;
  for (char32_t c : decode_utf8(raw)) {
    char32_t lower = static_cast<char32_t>(u_tolower(static_cast<UChar32>(c)));
    // A handful of uppercase symbols (e.g. U+03D2) have no lowercase form.
    if (is_uppercase(lower)) continue;
    mapped.push_back(lower);
  }

  std::u32string out;
  out.reserve(mapped.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < mapped.size(); ++i) {
    char32_t c = mapped[i];
    bool blank = is_space(c);
    if (!blank && is_punctuation(c)) {
      bool keep = is_apostrophe(c) && i > 0 && i + 1 < mapped.size() && is_letter(mapped[i - 1]) &&
                  is_letter(mapped[i + 1]);
      blank = !keep;
    }
    if (blank) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(U' ');
    pending_space = false;
    out.push_back(c);
  }
  return encode_utf8(out);
}

std::vector<DiarizationTurn> read_turns(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<DiarizationTurn> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      auto j = nlohmann::json::parse(line);
      DiarizationTurn t;
      t.recording_id = j.at("recording_id").get<std::string>();
      t.speaker_id = j.value("speaker", std::string{});
      t.start = j.value("start", 0.0);
      t.end = j.value("end", t.start);
      t.raw_text = j.value("text", std::string{});
      if (t.start > t.end) throw ParseError(path.string(), lineno, "turn start after end");
      out.push_back(std::move(t));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(path.string(), lineno, e.what());
    }
  }
  return out;
}

std::vector<Utterance> segment_turns(std::span<const DiarizationTurn> turns, SegmentStats* stats) {
  SegmentStats st;
  std::vector<Utterance> out;
  std::unordered_set<std::string> seen;
  std::unordered_map<std::string, int> per_recording;
  for (const auto& t : turns) {
    ++st.turns;
    std::string norm = normalize_text(t.raw_text);
    if (norm.empty()) {
      ++st.empty;
      continue;
    }
    if (!seen.insert(norm).second) {
      ++st.duplicates;
      continue;
    }
    auto words = split_ws(norm);
    int k = ++per_recording[t.recording_id];
    Utterance u = Utterance::from_words(words, t.recording_id, t.recording_id + "-" + std::to_string(k));
    if (!t.speaker_id.empty()) u.speaker_id = t.speaker_id;
    u.time_span = TimeSpan{t.start, t.end};
    st.words += words.size();
    out.push_back(std::move(u));
  }
  st.kept = out.size();
  if (stats) *stats = st;
  return out;
}

NameInventory::NameInventory(std::vector<std::string> names) : names_(std::move(names)) {
  std::unordered_set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty() || normalize_text(n) != n || split_ws(n).size() != 1)
      throw ValidationError("name '" + n + "' is not a single normalized word");
    if (!seen.insert(n).second) throw ValidationError("duplicate name '" + n + "'");
  }
}

NameInventory NameInventory::load(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) names.push_back(line);
  }
  return NameInventory(std::move(names));
}

std::vector<Utterance> deanonymize(std::span<const Utterance> utts, std::string_view placeholder,
                                   const NameInventory& names, std::uint64_t seed) {
  if (names.size() == 0) throw ValidationError("deanonymize: empty name inventory");
  struct RecordingState {
    std::vector<std::size_t> order;
    std::size_t used = 0;
  };
  std::unordered_map<std::string, RecordingState> recordings;
  std::vector<Utterance> out(utts.begin(), utts.end());
  for (auto& u : out) {
    for (auto& t : u.tokens) {
      if (t.surface != placeholder) continue;
      auto [it, fresh] = recordings.try_emplace(u.recording_id);
      auto& rs = it->second;
      if (fresh) {
        rs.order.resize(names.size());
        for (std::size_t i = 0; i < rs.order.size(); ++i) rs.order[i] = i;
        std::mt19937_64 rng(mix64(seed ^ fnv1a64(u.recording_id)));
        std::shuffle(rs.order.begin(), rs.order.end(), rng);
      }
      if (rs.used >= rs.order.size())
        throw ValidationError("deanonymize: recording '" + u.recording_id + "' has more than " +
                              std::to_string(names.size()) + " placeholder slots");
      t.surface = names.names()[rs.order[rs.used++]];
    }
  }
  return out;
}

std::vector<Utterance> repunctuate(std::span<const Utterance> utts) {
  std::vector<Utterance> out(utts.begin(), utts.end());
  for (auto& u : out) {
    Token dot;
    dot.surface = ".";
    dot.index = static_cast<int>(u.tokens.size()) + 1;
    dot.synthetic = true;
    u.tokens.push_back(std::move(dot));
  }
  return out;
}

Utterance strip_synthetic(const Utterance& u) {
  Utterance out = u;
  out.tokens.clear();
  for (const auto& t : u.tokens) {
    if (t.synthetic) continue;
    Token c = t;
    c.index = static_cast<int>(out.tokens.size()) + 1;
    out.tokens.push_back(std::move(c));
  }
  return out;
}

std::vector<Utterance> strip_synthetic(std::span<const Utterance> utts) {
  std::vector<Utterance> out;
  out.reserve(utts.size());
  for (const auto& u : utts) out.push_back(strip_synthetic(u));
  return out;
}

}  // namespace oral
