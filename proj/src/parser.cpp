#include "oral/parser.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "oral/error.hpp"
#include "oral/normalize.hpp"
#include "oral/util.hpp"

namespace oral {

nlohmann::json FeatureSpec::to_json() const {
  return {{"stack_slots", stack_slots}, {"window_lo", window_lo}, {"window_hi", window_hi},
          {"history_len", history_len}, {"d_w", d_w},             {"d_t", d_t},
          {"d_a", d_a}};
}

FeatureSpec FeatureSpec::from_json(const nlohmann::json& j) {
  FeatureSpec f;
  f.stack_slots = j.at("stack_slots").get<std::size_t>();
  f.window_lo = j.at("window_lo").get<int>();
  f.window_hi = j.at("window_hi").get<int>();
  f.history_len = j.at("history_len").get<std::size_t>();
  f.d_w = j.at("d_w").get<std::size_t>();
  f.d_t = j.at("d_t").get<std::size_t>();
  f.d_a = j.at("d_a").get<std::size_t>();
  if (f.window_lo > 0 || f.window_hi < 0) throw ValidationError("feature window must contain 0");
  return f;
}

// ---------------------------------------------------------------------------

namespace {

void init_uniform(Tensor& t, std::mt19937_64& rng) {
  const double a = std::sqrt(3.0 / static_cast<double>(t.cols));
  std::uniform_real_distribution<double> u(-a, a);
  for (auto& x : t.value) x = u(rng);
}

}  // namespace

ParserModel::ParserModel(ActionInventory inv, FeatureSpec fs, MlpSpec mlp, nlohmann::json provider,
                         std::optional<LookupProvider> lookup, std::uint64_t seed)
    : inv_(std::move(inv)), fs_(fs), provider_(std::move(provider)), lookup_(std::move(lookup)) {
  if (lookup_ && lookup_->dim() != fs_.d_w)
    throw ValidationError("parser: lookup table dim differs from feature spec");
  if (!provider_.contains("kind") || !provider_.contains("dim") ||
      provider_.at("dim").get<std::size_t>() != fs_.d_w)
    throw ValidationError("parser: provider description must give kind and dim = d_w");
  mlp.input_dim = fs_.input_dim();
  mlp.heads = {{"tag", inv_.tag_classes()}, {"transition", inv_.transition_classes()}};
  mlp_ = Mlp(std::move(mlp), seed);
  std::mt19937_64 rng(mix64(seed + 1));
  tag_emb_ = Tensor("tag_emb", inv_.tag_classes() + 3, fs_.d_t);
  act_emb_ = Tensor("act_emb", inv_.total() + 1, fs_.d_a);
  word_special_ = Tensor("word_special", 2, fs_.d_w);
  init_uniform(tag_emb_, rng);
  init_uniform(act_emb_, rng);
  init_uniform(word_special_, rng);
}

ProviderKind ParserModel::provider_kind() const {
  const auto k = provider_.at("kind").get<std::string>();
  if (k == "lookup") return ProviderKind::lookup;
  if (k == "char_ngram") return ProviderKind::char_ngram;
  if (k == "external") return ProviderKind::external;
  throw ValidationError("parser: unknown provider kind '" + k + "'");
}

std::size_t ParserModel::tag_row(int tag) const { return static_cast<std::size_t>(3 + tag); }

std::vector<SentenceInput> ParserModel::prepare(std::span<const Utterance> utts,
                                                const EmbeddingProvider* provider) const {
  std::vector<SentenceInput> out(utts.size());
  if (lookup_) {
    for (std::size_t i = 0; i < utts.size(); ++i)
      for (const auto& t : utts[i].tokens)
        if (!t.synthetic) out[i].word_ids.push_back(lookup_->id(t.surface));
    return out;
  }
  if (!provider) throw ValidationError("parser: an embedding provider is required");
  if (provider->kind() != provider_kind() || provider->dim() != fs_.d_w)
    throw ValidationError("parser: provider (" + std::string(to_string(provider->kind())) + ", dim " +
                          std::to_string(provider->dim()) + ") does not match the model");
  auto mats = embed_corpus(*provider, utts);
  for (std::size_t i = 0; i < utts.size(); ++i) {
    std::size_t keep = 0;
    for (const auto& t : utts[i].tokens) keep += !t.synthetic;
    Matrix m(keep, fs_.d_w);
    std::size_t r = 0;
    for (std::size_t k = 0; k < utts[i].tokens.size(); ++k) {
      if (utts[i].tokens[k].synthetic) continue;
      auto src = mats[i].row(k);
      std::copy(src.begin(), src.end(), m.row(r++).begin());
    }
    out[i].vectors = std::move(m);
  }
  return out;
}

std::vector<double> ParserModel::features(const ParserConfig& c, const SentenceInput& in,
                                          std::vector<SlotSource>* sources) const {
  const int n = c.size();
  if (in.size() != n) throw ValidationError("parser: sentence input length differs from config");
  std::vector<double> x;
  x.reserve(fs_.input_dim());
  if (sources) sources->clear();
  auto put = [&](const Tensor* table, std::size_t row, std::span<const double> fixed) {
    std::span<const double> v = table ? table->row(row) : fixed;
    x.insert(x.end(), v.begin(), v.end());
    if (sources) sources->push_back({const_cast<Tensor*>(table), row});
  };
  auto put_token = [&](int k) {
    if (k < 0) {
      put(&word_special_, kWordPad, {});
      put(&tag_emb_, 0, {});
    } else if (k == 0) {
      put(&word_special_, kWordRoot, {});
      put(&tag_emb_, 1, {});
    } else {
      if (lookup_)
        put(&lookup_->table(), static_cast<std::size_t>(in.word_ids[k - 1]), {});
      else
        put(nullptr, 0, in.vectors.row(static_cast<std::size_t>(k - 1)));
      put(&tag_emb_, c.tag(k) < 0 ? 2 : tag_row(c.tag(k)), {});
    }
  };
  const auto& st = c.stack();
  for (std::size_t i = 0; i < fs_.stack_slots; ++i)
    put_token(i < st.size() ? st[st.size() - 1 - i] : -1);
  for (int off = fs_.window_lo; off <= fs_.window_hi; ++off) {
    const int k = c.front() + off;
    put_token(k >= 1 && k <= n ? k : -1);
  }
  const auto& h = c.history();
  for (std::size_t j = 0; j < fs_.history_len; ++j) {
    const long idx = static_cast<long>(h.size()) - static_cast<long>(fs_.history_len) +
                     static_cast<long>(j);
    put(&act_emb_, idx < 0 ? 0 : 1 + static_cast<std::size_t>(inv_.global_index(h[idx])), {});
  }
  if (x.size() != fs_.input_dim()) throw ContractError("parser: feature vector has wrong length");
  return x;
}

void ParserModel::backprop_features(std::span<const double> dx, std::span<const SlotSource> sources) {
  std::size_t off = 0;
  for (const auto& s : sources) {
    const std::size_t width = s.table ? s.table->cols : fs_.d_w;
    if (s.table) {
      auto g = s.table->grad_row(s.row);
      for (std::size_t i = 0; i < width; ++i) g[i] += dx[off + i];
    }
    off += width;
  }
}

std::vector<Tensor*> ParserModel::parameters() {
  auto out = mlp_.parameters();
  out.push_back(&tag_emb_);
  out.push_back(&act_emb_);
  out.push_back(&word_special_);
  if (lookup_) out.push_back(&lookup_->table());
  return out;
}

std::vector<const Tensor*> ParserModel::parameters() const {
  auto out = mlp_.parameters();
  out.push_back(&tag_emb_);
  out.push_back(&act_emb_);
  out.push_back(&word_special_);
  if (lookup_) out.push_back(&lookup_->table());
  return out;
}

nlohmann::json ParserModel::to_json() const {
  std::vector<const Tensor*> emb{&tag_emb_, &act_emb_, &word_special_};
  if (lookup_) emb.push_back(&lookup_->table());
  return {{"format", "oral-parser"},       {"version", 1},
          {"actions", inv_.serialize()},   {"features", fs_.to_json()},
          {"provider", provider_},         {"mlp", mlp_.to_json()},
          {"embeddings", tensors_to_json(emb)}};
}

ParserModel ParserModel::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "oral-parser" || j.value("version", 0) != 1)
    throw ValidationError("not an oral-parser v1 checkpoint");
  auto actions = j.at("actions").get<std::vector<std::string>>();
  auto inv = ActionInventory::from_strings(actions);
  auto fs = FeatureSpec::from_json(j.at("features"));
  const auto& prov = j.at("provider");
  std::optional<LookupProvider> lookup;
  if (prov.at("kind") == "lookup")
    lookup.emplace(prov.at("vocab").get<std::vector<std::string>>(), fs.d_w, 0);
  Mlp mlp = Mlp::from_json(j.at("mlp"));
  ParserModel m(std::move(inv), fs, mlp.spec(), prov, std::move(lookup), 0);
  m.mlp_ = std::move(mlp);
  std::vector<Tensor*> emb{&m.tag_emb_, &m.act_emb_, &m.word_special_};
  if (m.lookup_) emb.push_back(&m.lookup_->table());
  tensors_from_json(j.at("embeddings"), emb);
  return m;
}

void ParserModel::save(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << to_json().dump() << '\n';
}

ParserModel ParserModel::load(const std::filesystem::path& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string(), 1, e.what());
  }
  return from_json(j);
}

// ---------------------------------------------------------------------------

std::vector<char> legal_mask(const ParserConfig& c, const ActionInventory& inv, int head) {
  std::vector<char> mask(head == kTagHead ? inv.tag_classes() : inv.transition_classes(), 0);
  for (Action a : legal_actions(c, inv)) {
    const bool is_tag = a.kind == ActionKind::tag;
    if (is_tag == (head == kTagHead)) mask[inv.head_class(a)] = 1;
  }
  return mask;
}

std::vector<double> ModelScorer::score(const ParserConfig& c, int head, std::span<const char> legal) {
  auto x = model_.features(c, input_);
  return model_.mlp().forward(x, head, legal);
}

std::vector<double> OracleScorer::score(const ParserConfig& c, int head, std::span<const char> legal) {
  std::vector<double> s(legal.size(), 0.0);
  for (Action a : zero_cost_actions(c, gold_, inv_))
    if ((a.kind == ActionKind::tag) == (head == kTagHead)) s[inv_.head_class(a)] = 1.0;
  return s;
}

namespace {

int head_for(const ParserConfig& c) { return c.tag(c.front()) < 0 ? kTagHead : kTransitionHead; }

int best_legal(std::span<const double> scores, std::span<const char> legal) {
  int best = -1;
  for (std::size_t k = 0; k < scores.size(); ++k)
    if (legal[k] && (best < 0 || scores[k] > scores[best])) best = static_cast<int>(k);
  return best;
}

Action class_action(const ActionInventory& inv, int head, int cls) {
  return head == kTagHead ? inv.tag_action(cls) : inv.transition_action(cls);
}

std::vector<DepTree> decode_inputs(const ParserModel& model, std::span<const Utterance> utts,
                                   std::span<const SentenceInput> inputs) {
  std::vector<DepTree> out(utts.size());
  parallel_for(utts.size(), [&](std::size_t i) {
    ModelScorer scorer(model, inputs[i]);
    auto c = greedy_decode(inputs[i].size(), model.inventory(), scorer);
    out[i] = finalize(c, strip_synthetic(utts[i]), model.inventory());
  });
  return out;
}

}  // namespace

ParserConfig greedy_decode(int n_tokens, const ActionInventory& inv, ActionScorer& scorer) {
  ParserConfig c(n_tokens);
  const int limit = 3 * n_tokens + 1;
  while (!c.terminal()) {
    if (static_cast<int>(c.history().size()) >= limit)
      throw ContractError("decode: no progress after " + std::to_string(limit) + " actions");
    const int head = head_for(c);
    auto legal = legal_mask(c, inv, head);
    auto scores = scorer.score(c, head, legal);
    const int cls = best_legal(scores, legal);
    if (cls < 0) throw ContractError("decode: no legal action");
    c.apply(class_action(inv, head, cls));
  }
  return c;
}

std::vector<DepTree> decode(const ParserModel& model, std::span<const Utterance> utts,
                            const EmbeddingProvider* provider) {
  auto inputs = model.prepare(utts, provider);
  return decode_inputs(model, utts, inputs);
}

nlohmann::json EpochLog::to_json() const {
  return {{"epoch", epoch},     {"train_loss", train_loss}, {"states", states},
          {"dev_las", dev_las}, {"dev_uas", dev_uas},       {"dev_upos", dev_upos}};
}

TrainResult train_parser(ParserModel& model, std::span<const DepTree> train,
                         std::span<const DepTree> dev, const TrainRegime& regime,
                         const EmbeddingProvider* train_provider,
                         const EmbeddingProvider* dev_provider,
                         const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.empty()) throw ValidationError("train_parser: empty training set");
  if (dev.empty()) throw ValidationError("train_parser: empty development set");
  if (regime.epochs < 1) throw ValidationError("train_parser: epochs must be at least 1");
  if (!(regime.explore_prob >= 0.0 && regime.explore_prob <= 1.0))
    throw ValidationError("train_parser: explore_prob must lie in [0, 1]");
  if (regime.batch_size == 0) throw ValidationError("train_parser: batch size must be positive");
  const ActionInventory& inv = model.inventory();

  auto inputs_of = [&](std::span<const DepTree> trees) {
    std::vector<Utterance> u;
    for (const auto& t : trees) {
      if (regime.repunc)
        u.push_back(repunctuate(std::span<const Utterance>(&t.utterance, 1)).front());
      else
        u.push_back(t.utterance);
    }
    return u;
  };
  const auto train_utts = inputs_of(train);
  const auto dev_utts = inputs_of(dev);
  const auto train_in = model.prepare(train_utts, train_provider);
  const auto dev_in = model.prepare(dev_utts, dev_provider ? dev_provider : train_provider);

  std::vector<GoldAnnotation> gold;
  for (std::size_t i = 0; i < train.size(); ++i) {
    validate(train[i]);
    if (static_cast<int>(train[i].size()) != train_in[i].size())
      throw ValidationError("train_parser: sentence '" + train[i].utterance.id +
                            "' has synthetic tokens in its gold tree");
    gold.push_back(projectivize(GoldAnnotation::from_tree(train[i], inv)));
  }

  std::mt19937_64 rng(regime.seed);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  Adam adam(regime.adam);
  auto params = model.parameters();
  zero_grad(params);
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  TrainResult result;
  double best_las = -1.0;
  std::vector<std::vector<double>> best_values;
  Mlp& mlp = model.mlp();

  for (int epoch = 1; epoch <= regime.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const bool explore = epoch >= regime.explore_start_epoch && regime.explore_prob > 0.0;
    double loss = 0.0;
    std::size_t states = 0, in_batch = 0;
    std::vector<SlotSource> sources;
    MlpCache cache;
    for (std::size_t idx : order) {
      const auto& g = gold[idx];
      ParserConfig c(g.size());
      while (!c.terminal()) {
        const int head = head_for(c);
        auto legal = legal_mask(c, inv, head);
        auto x = model.features(c, train_in[idx], &sources);
        auto probs = mlp.forward(x, head, legal, Mode::train, &rng, &cache);
        int target = -1;
        for (Action a : zero_cost_actions(c, g, inv)) {
          const int cls = inv.head_class(a);
          if (target < 0 || probs[cls] > probs[target]) target = cls;
        }
        if (target < 0) throw ContractError("train_parser: no zero-cost action");
        loss += cross_entropy(probs, target);
        ++states;
        auto dx = mlp.backward(cache, target);
        model.backprop_features(dx, sources);
        if (++in_batch == regime.batch_size) {
          adam.step(params, 1.0 / static_cast<double>(in_batch));
          in_batch = 0;
        }
        int next = target;
        if (explore && coin(rng) < regime.explore_prob) next = best_legal(probs, legal);
        c.apply(class_action(inv, head, next));
      }
    }
    if (in_batch > 0) adam.step(params, 1.0 / static_cast<double>(in_batch));

    auto pred = decode_inputs(model, dev_utts, dev_in);
    auto report = attachment_scores(dev, pred);
    EpochLog log{epoch, states ? loss / static_cast<double>(states) : 0.0, states,
                 report.las(), report.uas(), report.upos()};
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
    if (report.las() > best_las) {
      best_las = report.las();
      result.best_epoch = epoch;
      result.best_dev = report;
      best_values.clear();
      for (const Tensor* p : params) best_values.push_back(p->value);
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  return result;
}

}  // namespace oral
