#include "oral/slu.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "oral/error.hpp"
#include "oral/util.hpp"

namespace oral {

namespace {

bool starts_with(const std::string& s, std::string_view p) { return s.rfind(p, 0) == 0; }

void check_tag(const std::string& t) {
  if (t != "O" && !((starts_with(t, "B-") || starts_with(t, "I-")) && t.size() > 2))
    throw ValidationError("bad BIO tag '" + t + "'");
}

}  // namespace

std::vector<ConceptSpan> bio_decode(std::span<const std::string> tags,
                                    std::span<const std::string> words, std::size_t* repairs) {
  if (tags.size() != words.size())
    throw ValidationError("bio_decode: " + std::to_string(tags.size()) + " tags for " +
                          std::to_string(words.size()) + " tokens");
  std::vector<ConceptSpan> spans;
  std::size_t fixed = 0;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const auto& t = tags[i];
    check_tag(t);
    if (t == "O") continue;
    const std::string c = t.substr(2);
    const bool cont = t[0] == 'I' && !spans.empty() && spans.back().end == static_cast<int>(i) &&
                      spans.back().concept_name == c;
    if (cont) {
      spans.back().end = static_cast<int>(i) + 1;
      spans.back().surface += " " + words[i];
      spans.back().value = spans.back().surface;
    } else {
      if (t[0] == 'I') ++fixed;
      spans.push_back({c, static_cast<int>(i) + 1, static_cast<int>(i) + 1, words[i], words[i]});
    }
  }
  if (repairs) *repairs = fixed;
  return spans;
}

std::vector<ConceptSpan> bio_decode(std::span<const std::string> tags, const Utterance& u,
                                    std::size_t* repairs) {
  std::vector<std::string> words;
  for (const auto& t : u.tokens) words.push_back(t.surface);
  return bio_decode(tags, words, repairs);
}

std::vector<std::string> bio_encode(std::span<const ConceptSpan> spans, std::size_t n_tokens) {
  std::vector<std::string> tags(n_tokens, "O");
  int last = 0;
  for (const auto& s : spans) {
    if (s.start < 1 || s.end < s.start || s.end > static_cast<int>(n_tokens))
      throw ValidationError("bio_encode: span " + std::to_string(s.start) + "-" +
                            std::to_string(s.end) + " out of range");
    if (s.start <= last)
      throw ValidationError("bio_encode: span at " + std::to_string(s.start) +
                            " overlaps or precedes the previous span");
    if (s.concept_name.empty()) throw ValidationError("bio_encode: empty concept");
    tags[s.start - 1] = "B-" + s.concept_name;
    for (int k = s.start + 1; k <= s.end; ++k) tags[k - 1] = "I-" + s.concept_name;
    last = s.end;
  }
  return tags;
}

std::vector<std::string> repair_bio(std::span<const std::string> tags) {
  std::vector<std::string> out(tags.begin(), tags.end());
  for (std::size_t i = 0; i < out.size(); ++i) {
    check_tag(out[i]);
    if (out[i][0] != 'I') continue;
    const std::string c = out[i].substr(2);
    const bool ok = i > 0 && out[i - 1] != "O" && out[i - 1].substr(2) == c;
    if (!ok) out[i] = "B-" + c;
  }
  return out;
}

bool is_valid_bio(std::span<const std::string> tags) {
  try {
    return repair_bio(tags) == std::vector<std::string>(tags.begin(), tags.end());
  } catch (const ValidationError&) {
    return false;
  }
}

// ---------------------------------------------------------------------------

ValueRules ValueRules::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ValidationError("value rules: expected an object keyed by concept");
  ValueRules r;
  for (const auto& [concept_name, list] : j.items()) {
    if (!list.is_array()) throw ValidationError("value rules: '" + concept_name + "' is not a list");
    auto& out = r.rules_[concept_name];
    for (const auto& rule : list) {
      if (!rule.is_array() || rule.size() != 2)
        throw ValidationError("value rules: '" + concept_name + "' needs [pattern, value] pairs");
      Rule x;
      x.pattern = rule[0].get<std::string>();
      x.value = rule[1].get<std::string>();
      try {
        x.re = std::regex(x.pattern, std::regex::ECMAScript);
      } catch (const std::regex_error& e) {
        throw ValidationError("value rules: bad pattern '" + x.pattern + "' for '" + concept_name +
                              "': " + e.what());
      }
      out.push_back(std::move(x));
    }
  }
  return r;
}

ValueRules ValueRules::load(const std::filesystem::path& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  return from_json(j);
}

std::string ValueRules::apply(const std::string& concept_name, const std::string& surface) const {
  auto it = rules_.find(concept_name);
  if (it == rules_.end()) return surface;
  for (const auto& r : it->second) {
    std::smatch m;
    if (std::regex_search(surface, m, r.re)) return m.format(r.value);
  }
  return surface;
}

std::size_t ValueRules::size() const {
  std::size_t n = 0;
  for (const auto& [c, v] : rules_) n += v.size();
  return n;
}

std::vector<ConceptSpan> extract_values(std::vector<ConceptSpan> spans, const ValueRules& rules) {
  for (auto& s : spans) s.value = rules.apply(s.concept_name, s.surface);
  return spans;
}

std::vector<std::string> concept_items(std::span<const ConceptSpan> spans, SluMetric metric) {
  std::vector<std::string> out;
  for (const auto& s : spans)
    out.push_back(metric == SluMetric::cer ? s.concept_name : s.concept_name + "=" + s.value);
  return out;
}

nlohmann::json SluScore::to_json() const {
  nlohmann::json j{{"metric", metric == SluMetric::cer ? "cer" : "cver"},
                   {"rate", counts.ref_length ? 100.0 * rate() : 0.0},
                   {"substitutions", counts.substitutions},
                   {"deletions", counts.deletions},
                   {"insertions", counts.insertions},
                   {"ref_concepts", counts.ref_length},
                   {"ci_unit", unit == CiUnit::utterance ? "utterance" : "split"}};
  if (ci) j["ci"] = ci->to_json();
  return j;
}

SluScore score_slu(std::span<const SluSample> gold, std::span<const SluSample> hyp,
                   const ValueRules& rules, SluMetric metric, CiUnit unit, std::size_t folds) {
  if (gold.size() != hyp.size())
    throw ValidationError("slu score: " + std::to_string(gold.size()) + " reference vs " +
                          std::to_string(hyp.size()) + " hypothesis utterances");
  SluScore s;
  s.metric = metric;
  s.unit = unit;
  std::vector<AlignmentCounts> per;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (gold[i].utterance.size() != hyp[i].utterance.size())
      throw ValidationError("slu score: utterance " + std::to_string(i + 1) + " ('" +
                            gold[i].utterance.id + "') differs in length");
    auto r = extract_values(bio_decode(gold[i].bio, gold[i].utterance), rules);
    auto h = extract_values(bio_decode(hyp[i].bio, hyp[i].utterance), rules);
    auto ri = concept_items(r, metric);
    auto hi = concept_items(h, metric);
    per.push_back(align_error_rate(ri, hi));
    s.counts += per.back();
  }
  if (unit == CiUnit::utterance) {
    for (const auto& c : per)
      if (c.ref_length) s.unit_rates.push_back(100.0 * c.rate());
  } else {
    if (folds == 0) throw ValidationError("slu score: folds must be positive");
    const std::size_t k = std::min(folds, per.size());
    for (std::size_t f = 0; f < k; ++f) {
      AlignmentCounts acc;
      for (std::size_t i = f * per.size() / k; i < (f + 1) * per.size() / k; ++i) acc += per[i];
      if (acc.ref_length) s.unit_rates.push_back(100.0 * acc.rate());
    }
  }
  if (s.unit_rates.size() >= 2) s.ci = t_confidence_interval(s.unit_rates);
  return s;
}

std::vector<std::string> bio_inventory(std::span<const std::string> concepts) {
  std::set<std::string> sorted(concepts.begin(), concepts.end());
  std::vector<std::string> out{"O"};
  for (const auto& c : sorted) out.push_back("B-" + c);
  for (const auto& c : sorted) out.push_back("I-" + c);
  return out;
}

// ---------------------------------------------------------------------------

SluTagger::SluTagger(std::vector<std::string> tags, int window_lo, int window_hi, MlpSpec mlp,
                     nlohmann::json provider, std::optional<LookupProvider> lookup,
                     std::uint64_t seed)
    : tags_(std::move(tags)), lo_(window_lo), hi_(window_hi), provider_(std::move(provider)),
      lookup_(std::move(lookup)) {
  if (tags_.empty() || tags_.front() != "O") throw ValidationError("slu tagger: inventory must start with O");
  if (lo_ > 0 || hi_ < 0) throw ValidationError("slu tagger: window must contain 0");
  const std::size_t dim = provider_.at("dim").get<std::size_t>();
  if (lookup_ && lookup_->dim() != dim) throw ValidationError("slu tagger: lookup dim mismatch");
  mlp.input_dim = static_cast<std::size_t>(hi_ - lo_ + 1) * dim;
  mlp.heads = {{"bio", tags_.size()}};
  mlp_ = Mlp(std::move(mlp), seed);
  pad_ = Tensor("pad", 1, dim);
  std::mt19937_64 rng(mix64(seed + 2));
  std::uniform_real_distribution<double> u(-std::sqrt(3.0 / dim), std::sqrt(3.0 / dim));
  for (auto& x : pad_.value) x = u(rng);
}

std::size_t SluTagger::input_dim() const { return mlp_.spec().input_dim; }

int SluTagger::tag_id(const std::string& t) const {
  auto it = std::find(tags_.begin(), tags_.end(), t);
  if (it == tags_.end()) throw ValidationError("slu tagger: tag '" + t + "' not in the inventory");
  return static_cast<int>(it - tags_.begin());
}

std::vector<int> SluTagger::word_ids(const Utterance& u) const {
  std::vector<int> ids;
  if (lookup_)
    for (const auto& t : u.tokens) ids.push_back(lookup_->id(t.surface));
  return ids;
}

std::vector<Matrix> SluTagger::prepare(std::span<const Utterance> utts,
                                       const EmbeddingProvider* provider) const {
  if (lookup_) return std::vector<Matrix>(utts.size());
  if (!provider) throw ValidationError("slu tagger: an embedding provider is required");
  if (provider->dim() != pad_.cols || to_string(provider->kind()) != provider_.at("kind"))
    throw ValidationError("slu tagger: provider does not match the model");
  return embed_corpus(*provider, utts);
}

std::vector<double> SluTagger::features(const Matrix& words, const std::vector<int>& ids, int pos,
                                        std::vector<std::pair<Tensor*, std::size_t>>* sources) const {
  const int n = static_cast<int>(lookup_ ? ids.size() : words.rows());
  std::vector<double> x;
  x.reserve(input_dim());
  if (sources) sources->clear();
  for (int off = lo_; off <= hi_; ++off) {
    const int k = pos + off;
    const Tensor* table = nullptr;
    std::size_t row = 0;
    std::span<const double> v;
    if (k < 0 || k >= n) {
      table = &pad_;
    } else if (lookup_) {
      table = &lookup_->table();
      row = static_cast<std::size_t>(ids[k]);
    } else {
      v = words.row(static_cast<std::size_t>(k));
    }
    if (table) v = table->row(row);
    x.insert(x.end(), v.begin(), v.end());
    if (sources) sources->emplace_back(const_cast<Tensor*>(table), row);
  }
  return x;
}

std::vector<std::string> SluTagger::tag(const Utterance& u, const Matrix& words) const {
  auto ids = word_ids(u);
  std::vector<std::string> out;
  for (int i = 0; i < static_cast<int>(u.size()); ++i) {
    auto p = mlp_.forward(features(words, ids, i), 0);
    out.push_back(tags_[std::max_element(p.begin(), p.end()) - p.begin()]);
  }
  return repair_bio(out);
}

std::vector<Tensor*> SluTagger::parameters() {
  auto out = mlp_.parameters();
  out.push_back(&pad_);
  if (lookup_) out.push_back(&lookup_->table());
  return out;
}

nlohmann::json SluTagger::to_json() const {
  std::vector<const Tensor*> emb{&pad_};
  if (lookup_) emb.push_back(&lookup_->table());
  return {{"format", "oral-slu"}, {"version", 1},          {"tags", tags_},
          {"window", {lo_, hi_}}, {"provider", provider_}, {"mlp", mlp_.to_json()},
          {"embeddings", tensors_to_json(emb)}};
}

SluTagger SluTagger::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "oral-slu" || j.value("version", 0) != 1)
    throw ValidationError("not an oral-slu v1 checkpoint");
  const auto& prov = j.at("provider");
  std::optional<LookupProvider> lookup;
  if (prov.at("kind") == "lookup")
    lookup.emplace(prov.at("vocab").get<std::vector<std::string>>(),
                   prov.at("dim").get<std::size_t>(), 0);
  Mlp mlp = Mlp::from_json(j.at("mlp"));
  SluTagger t(j.at("tags").get<std::vector<std::string>>(), j.at("window")[0].get<int>(),
              j.at("window")[1].get<int>(), mlp.spec(), prov, std::move(lookup), 0);
  t.mlp_ = std::move(mlp);
  std::vector<Tensor*> emb{&t.pad_};
  if (t.lookup_) emb.push_back(&t.lookup_->table());
  tensors_from_json(j.at("embeddings"), emb);
  return t;
}

void SluTagger::save(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << to_json().dump() << '\n';
}

SluTagger SluTagger::load(const std::filesystem::path& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  return from_json(j);
}

std::vector<SluSample> slu_decode(const SluTagger& tagger, std::span<const Utterance> utts,
                                  const EmbeddingProvider* provider) {
  auto words = tagger.prepare(utts, provider);
  std::vector<SluSample> out(utts.size());
  parallel_for(utts.size(), [&](std::size_t i) {
    out[i].utterance = utts[i];
    out[i].bio = tagger.tag(utts[i], words[i]);
  });
  return out;
}

SluTrainResult train_slu_tagger(SluTagger& tagger, std::span<const SluSample> train,
                                std::span<const SluSample> dev, const SluRegime& regime,
                                const EmbeddingProvider* provider,
                                const std::function<void(const SluEpochLog&)>& on_epoch) {
  if (train.empty()) throw ValidationError("train_slu_tagger: empty training set");
  if (dev.empty()) throw ValidationError("train_slu_tagger: empty development set");
  if (regime.epochs < 1 || regime.batch_size == 0)
    throw ValidationError("train_slu_tagger: epochs and batch size must be positive");
  std::vector<std::vector<int>> targets;
  std::vector<Utterance> train_utts, dev_utts;
  for (const auto& s : train) {
    validate(s);
    std::vector<int> t;
    for (const auto& tag : s.bio) t.push_back(tagger.tag_id(tag));
    targets.push_back(std::move(t));
    train_utts.push_back(s.utterance);
  }
  for (const auto& s : dev) {
    for (const auto& tag : s.bio) tagger.tag_id(tag);
    dev_utts.push_back(s.utterance);
  }
  const auto train_words = tagger.prepare(train_utts, provider);
  std::vector<std::vector<int>> train_ids;
  for (const auto& u : train_utts) train_ids.push_back(tagger.word_ids(u));

  std::mt19937_64 rng(regime.seed);
  Adam adam(regime.adam);
  auto params = tagger.parameters();
  zero_grad(params);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);
  SluTrainResult result;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_values;
  Mlp& mlp = tagger.mlp();
  const ValueRules no_rules;

  for (int epoch = 1; epoch <= regime.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss = 0.0;
    std::size_t count = 0, in_batch = 0;
    MlpCache cache;
    std::vector<std::pair<Tensor*, std::size_t>> sources;
    for (std::size_t idx : order) {
      for (int i = 0; i < static_cast<int>(targets[idx].size()); ++i) {
        auto x = tagger.features(train_words[idx], train_ids[idx], i, &sources);
        auto p = mlp.forward(x, 0, {}, Mode::train, &rng, &cache);
        loss += cross_entropy(p, targets[idx][i]);
        ++count;
        auto dx = mlp.backward(cache, targets[idx][i]);
        std::size_t off = 0;
        const std::size_t d = dx.size() / sources.size();
        for (const auto& [table, row] : sources) {
          if (table) {
            auto g = table->grad_row(row);
            for (std::size_t k = 0; k < d; ++k) g[k] += dx[off + k];
          }
          off += d;
        }
        if (++in_batch == regime.batch_size) {
          adam.step(params, 1.0 / static_cast<double>(in_batch));
          in_batch = 0;
        }
      }
    }
    if (in_batch > 0) adam.step(params, 1.0 / static_cast<double>(in_batch));
    auto hyp = slu_decode(tagger, dev_utts, provider);
    auto score = score_slu(dev, hyp, no_rules, SluMetric::cer);
    const double cer = score.counts.ref_length ? 100.0 * score.rate() : 0.0;
    SluEpochLog log{epoch, count ? loss / static_cast<double>(count) : 0.0, cer};
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (cer < best) {
      best = cer;
      result.best_epoch = epoch;
      result.best_dev_cer = cer;
      best_values.clear();
      for (const Tensor* p : params) best_values.push_back(p->value);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  return result;
}

}  // namespace oral
