#include "oral/bpe.hpp"

#include <algorithm>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "oral/error.hpp"
#include "oral/normalize.hpp"
#include "oral/util.hpp"

namespace oral {

std::vector<std::string> initial_symbols(std::string_view word, std::string_view end_marker) {
  std::vector<std::string> out;
  for (char32_t c : decode_utf8(word)) out.push_back(encode_utf8(std::u32string_view(&c, 1)));
  if (!out.empty()) out.back() += end_marker;
  return out;
}

BpeModel::BpeModel(std::vector<Merge> merges, std::set<std::string> vocab, std::string end_marker)
    : merges_(std::move(merges)), vocab_(std::move(vocab)), end_marker_(std::move(end_marker)) {
  for (std::size_t i = 0; i < merges_.size(); ++i) {
    if (!rank_.emplace(merges_[i], i).second)
      throw ValidationError("bpe: duplicate merge '" + merges_[i].first + " " + merges_[i].second +
                            "'");
  }
}

std::vector<std::string> BpeModel::encode(std::string_view word) const {
  auto sym = initial_symbols(word, end_marker_);
  while (sym.size() > 1) {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (std::size_t i = 0; i + 1 < sym.size(); ++i) {
      auto it = rank_.find(Merge{sym[i], sym[i + 1]});
      if (it != rank_.end()) best = std::min(best, it->second);
    }
    if (best == std::numeric_limits<std::size_t>::max()) break;
    const auto& [l, r] = merges_[best];
    std::vector<std::string> next;
    next.reserve(sym.size());
    for (std::size_t i = 0; i < sym.size();) {
      if (i + 1 < sym.size() && sym[i] == l && sym[i + 1] == r) {
        next.push_back(l + r);
        i += 2;
      } else {
        next.push_back(std::move(sym[i]));
        ++i;
      }
    }
    sym = std::move(next);
  }
  return sym;
}

std::string BpeModel::decode(std::span<const std::string> units) const {
  std::string out;
  for (const auto& u : units) out += u;
  if (out.size() >= end_marker_.size() &&
      out.compare(out.size() - end_marker_.size(), end_marker_.size(), end_marker_) == 0)
    out.resize(out.size() - end_marker_.size());
  return out;
}

void BpeModel::save(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << "bpe v1 " << merges_.size() << ' ' << end_marker_ << '\n';
  for (const auto& [l, r] : merges_) out << l << ' ' << r << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void BpeModel::save_vocab(const std::filesystem::path& path) const {
  auto out = open_out(path);
  for (const auto& v : vocab_) out << v << '\n';
}

BpeModel BpeModel::load(const std::filesystem::path& path,
                        const std::optional<std::filesystem::path>& vocab_path) {
  auto in = open_in(path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path.string(), 1, "missing header");
  auto head = split_ws(line);
  if (head.size() != 4 || head[0] != "bpe" || head[1] != "v1")
    throw ParseError(path.string(), 1, "expected 'bpe v1 <n_merges> <end_marker>'");
  std::size_t n = 0;
  try {
    n = std::stoul(head[2]);
  } catch (const std::exception&) {
    throw ParseError(path.string(), 1, "bad merge count '" + head[2] + "'");
  }
  std::vector<Merge> merges;
  std::set<std::string> vocab;
  std::size_t lineno = 1;
  while (merges.size() < n && std::getline(in, line)) {
    ++lineno;
    auto parts = split_ws(line);
    if (parts.size() != 2) throw ParseError(path.string(), lineno, "expected 'left right'");
    vocab.insert(parts[0]);
    vocab.insert(parts[1]);
    vocab.insert(parts[0] + parts[1]);
    merges.emplace_back(std::move(parts[0]), std::move(parts[1]));
  }
  if (merges.size() != n)
    throw ParseError(path.string(), lineno, "header announces " + std::to_string(n) + " merges");
  if (vocab_path) {
    vocab.clear();
    auto vin = open_in(*vocab_path);
    while (std::getline(vin, line))
      if (!line.empty()) vocab.insert(line);
  }
  return BpeModel(std::move(merges), std::move(vocab), head[3]);
}

namespace {

using PairKey = std::uint64_t;
PairKey key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

}  // namespace

BpeModel bpe_train(std::span<const std::string> corpus, std::size_t target_vocab,
                   std::string_view end_marker) {
  std::map<std::string, long> word_freq;
  for (const auto& line : corpus)
    for (auto& w : split_ws(line)) ++word_freq[w];
  if (word_freq.empty()) throw ValidationError("bpe_train: empty corpus");

  std::vector<std::string> symbols;
  std::unordered_map<std::string, int> symbol_id;
  auto intern = [&](const std::string& s) {
    auto [it, fresh] = symbol_id.try_emplace(s, static_cast<int>(symbols.size()));
    if (fresh) symbols.push_back(s);
    return it->second;
  };

  std::vector<std::vector<int>> words;
  std::vector<long> freq;
  std::set<std::string> vocab;
  for (const auto& [w, f] : word_freq) {
    std::vector<int> ids;
    for (auto& s : initial_symbols(w, end_marker)) {
      vocab.insert(s);
      ids.push_back(intern(s));
    }
    words.push_back(std::move(ids));
    freq.push_back(f);
  }
  if (target_vocab < vocab.size())
    throw ValidationError("bpe_train: target vocabulary " + std::to_string(target_vocab) +
                          " is below the " + std::to_string(vocab.size()) + " base symbols");

  std::unordered_map<PairKey, long> counts;
  std::unordered_map<PairKey, std::unordered_set<std::size_t>> where;
  auto add_word = [&](std::size_t w, long sign) {
    const auto& ids = words[w];
    for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
      PairKey k = key(ids[i], ids[i + 1]);
      counts[k] += sign * freq[w];
      if (sign > 0) where[k].insert(w);
    }
  };
  for (std::size_t w = 0; w < words.size(); ++w) add_word(w, +1);

  std::vector<BpeModel::Merge> merges;
  while (vocab.size() < target_vocab) {
    PairKey best = 0;
    long best_count = 0;
    for (const auto& [k, c] : counts) {
      if (c < 2) continue;
      if (c > best_count) {
        best = k;
        best_count = c;
      } else if (c == best_count) {
        const auto& a = symbols[k >> 32];
        const auto& b = symbols[k & 0xffffffffu];
        const auto& ba = symbols[best >> 32];
        const auto& bb = symbols[best & 0xffffffffu];
        if (std::tie(a, b) < std::tie(ba, bb)) best = k;
      }
    }
    if (best_count < 2) break;

    const int left = static_cast<int>(best >> 32);
    const int right = static_cast<int>(best & 0xffffffffu);
    std::string merged = symbols[left] + symbols[right];
    merges.emplace_back(symbols[left], symbols[right]);
    vocab.insert(merged);
    const int merged_id = intern(merged);

    auto affected_set = std::move(where[best]);
    where.erase(best);
    std::vector<std::size_t> affected(affected_set.begin(), affected_set.end());
    std::sort(affected.begin(), affected.end());
    for (std::size_t w : affected) {
      add_word(w, -1);
      auto& ids = words[w];
      std::vector<int> next;
      next.reserve(ids.size());
      for (std::size_t i = 0; i < ids.size();) {
        if (i + 1 < ids.size() && ids[i] == left && ids[i + 1] == right) {
          next.push_back(merged_id);
          i += 2;
        } else {
          next.push_back(ids[i++]);
        }
      }
      ids = std::move(next);
      add_word(w, +1);
    }
    // Stale entries (count 0) are harmless but keep the scan short.
    for (auto it = counts.begin(); it != counts.end();) {
      if (it->second <= 0)
        it = counts.erase(it);
      else
        ++it;
    }
  }
  return BpeModel(std::move(merges), std::move(vocab), std::string(end_marker));
}

double vocab_overlap(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty()) throw ValidationError("vocab_overlap: empty vocabulary");
  std::size_t shared = 0;
  for (const auto& v : a) shared += b.count(v);
  return 100.0 * static_cast<double>(shared) / static_cast<double>(a.size());
}

VocabOverlap vocab_overlap(const BpeModel& a, const BpeModel& b) {
  const auto& va = a.vocab();
  const auto& vb = b.vocab();
  if (va.empty() || vb.empty()) throw ValidationError("vocab_overlap: empty vocabulary");
  VocabOverlap r;
  for (const auto& v : va) r.shared += vb.count(v);
  const double uni = static_cast<double>(va.size() + vb.size() - r.shared);
  r.of_first = 100.0 * static_cast<double>(r.shared) / static_cast<double>(va.size());
  r.of_second = 100.0 * static_cast<double>(r.shared) / static_cast<double>(vb.size());
  r.jaccard = 100.0 * static_cast<double>(r.shared) / uni;
  return r;
}

}  // namespace oral
