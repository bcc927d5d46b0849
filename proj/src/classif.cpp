#include "oral/classif.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "oral/error.hpp"
#include "oral/simd.hpp"
#include "oral/util.hpp"

namespace oral {

double SparseVector::norm2() const {
  double s = 0.0;
  for (const auto& [i, v] : entries) s += v * v;
  return s;
}

double sparse_dot(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto i = a.entries.begin(), j = b.entries.begin();
  while (i != a.entries.end() && j != b.entries.end()) {
    if (i->first < j->first) {
      ++i;
    } else if (j->first < i->first) {
      ++j;
    } else {
      s += i->second * j->second;
      ++i;
      ++j;
    }
  }
  return s;
}

double sparse_sq_dist(const SparseVector& a, const SparseVector& b) {
  double s = 0.0;
  auto i = a.entries.begin(), j = b.entries.begin();
  while (i != a.entries.end() || j != b.entries.end()) {
    double d;
    if (j == b.entries.end() || (i != a.entries.end() && i->first < j->first)) {
      d = i->second;
      ++i;
    } else if (i == a.entries.end() || j->first < i->first) {
      d = j->second;
      ++j;
    } else {
      d = i->second - j->second;
      ++i;
      ++j;
    }
    s += d * d;
  }
  return s;
}

SparseVector to_sparse(std::span<const double> dense) {
  SparseVector v;
  for (std::size_t i = 0; i < dense.size(); ++i)
    if (dense[i] != 0.0) v.entries.emplace_back(static_cast<int>(i), dense[i]);
  return v;
}

// ---------------------------------------------------------------------------

TfidfModel TfidfModel::fit(std::span<const std::string> docs, std::size_t max_vocab) {
  if (docs.empty()) throw ValidationError("tfidf: empty corpus");
  if (max_vocab == 0) throw ValidationError("tfidf: vocabulary size must be positive");
  std::map<std::string, std::size_t> df;
  for (const auto& d : docs) {
    auto words = split_ws(d);
    std::set<std::string> uniq(words.begin(), words.end());
    for (const auto& w : uniq) ++df[w];
  }
  const std::size_t n = docs.size();
  std::vector<std::pair<std::string, std::size_t>> cand;
  for (const auto& [w, c] : df)
    if (c < n) cand.emplace_back(w, c);
  std::stable_sort(cand.begin(), cand.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (cand.size() > max_vocab) cand.resize(max_vocab);
  std::sort(cand.begin(), cand.end());
  TfidfModel m;
  m.fitted_ = true;
  for (const auto& [w, c] : cand) {
    m.index_[w] = static_cast<int>(m.vocab_.size());
    m.vocab_.push_back(w);
    m.idf_.push_back(std::log(static_cast<double>(n) / static_cast<double>(c)));
  }
  return m;
}

int TfidfModel::column(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? -1 : it->second;
}

SparseVector TfidfModel::transform(std::string_view doc) const {
  if (!fitted_) throw ContractError("tfidf: transform before fit");
  std::map<int, double> counts;
  for (const auto& w : split_ws(doc))
    if (int c = column(w); c >= 0) counts[c] += 1.0;
  SparseVector v;
  double norm = 0.0;
  for (const auto& [c, cnt] : counts) {
    const double w = cnt * idf_[c];
    v.entries.emplace_back(c, w);
    norm += w * w;
  }
  if (norm > 0.0) {
    norm = std::sqrt(norm);
    for (auto& e : v.entries) e.second /= norm;
  }
  return v;
}

// ---------------------------------------------------------------------------

std::string_view to_string(KernelKind k) {
  return k == KernelKind::triangular ? "triangular: -||x-z||" : "linear: <x,z>";
}

double kernel(KernelKind k, const SparseVector& a, const SparseVector& b) {
  if (k == KernelKind::linear) return sparse_dot(a, b);
  return -std::sqrt(sparse_sq_dist(a, b));
}

KernelCache::KernelCache(std::span<const SparseVector> x, KernelKind k)
    : x_(x), kind_(k), rows_(x.size()) {}

const std::vector<double>& KernelCache::row(std::size_t i) {
  auto& r = rows_[i];
  if (r.empty()) {
    r.resize(x_.size());
    for (std::size_t j = 0; j < x_.size(); ++j) r[j] = kernel(kind_, x_[i], x_[j]);
  }
  return r;
}

double SvmModel::decision(const SparseVector& x) const {
  double f = b;
  for (std::size_t i = 0; i < support.size(); ++i) f += coef[i] * oral::kernel(kernel, support[i], x);
  return f;
}

double SvmModel::dual_residual() const {
  double s = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) s += alpha[i] * y[i];
  return s;
}

SvmModel svm_train(std::span<const SparseVector> x, std::span<const int> y, const SvmConfig& cfg) {
  KernelCache cache(x, cfg.kernel);
  return svm_train(x, y, cfg, cache);
}

SvmModel svm_train(std::span<const SparseVector> x, std::span<const int> y, const SvmConfig& cfg,
                   KernelCache& cache) {
  const std::size_t n = x.size();
  if (n != y.size()) throw ValidationError("svm: label count differs from example count");
  if (cache.size() != n) throw ValidationError("svm: kernel cache built for another data set");
  if (!(cfg.C > 0)) throw ValidationError("svm: C must be positive");
  bool pos = false, neg = false;
  for (int v : y) {
    if (v != 1 && v != -1) throw ValidationError("svm: labels must be +1 or -1");
    (v > 0 ? pos : neg) = true;
  }
  if (!pos || !neg) throw ValidationError("svm: training data has a single class");

  const double C = cfg.C;
  constexpr double kTau = 1e-12;
  std::vector<double> alpha(n, 0.0), G(n, -1.0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = kernel(cfg.kernel, x[i], x[i]);
  auto up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < C) || (y[t] < 0 && alpha[t] > 0); };
  auto low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < C); };

  long iter = 0;
  for (; iter < cfg.max_iter; ++iter) {
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    std::size_t i = n, j = n;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = -y[t] * G[t];
      if (up(t) && v > gmax) {
        gmax = v;
        i = t;
      }
      if (low(t) && v < gmin) {
        gmin = v;
        j = t;
      }
    }
    if (i == n || j == n || gmax - gmin < cfg.tol) break;

    const auto& Ki = cache.row(i);
    const auto& Kj = cache.row(j);
    double quad = diag[i] + diag[j] - 2.0 * Ki[j];
    if (quad <= 0) quad = kTau;
    const double ai = alpha[i], aj = alpha[j];
    if (y[i] != y[j]) {
      const double delta = (-G[i] - G[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) {
          alpha[j] = 0;
          alpha[i] = diff;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = -diff;
      }
      if (diff > 0) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = C - diff;
        }
      } else if (alpha[j] > C) {
        alpha[j] = C;
        alpha[i] = C + diff;
      }
    } else {
      const double delta = (G[i] - G[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > C) {
        if (alpha[i] > C) {
          alpha[i] = C;
          alpha[j] = sum - C;
        }
      } else if (alpha[j] < 0) {
        alpha[j] = 0;
        alpha[i] = sum;
      }
      if (sum > C) {
        if (alpha[j] > C) {
          alpha[j] = C;
          alpha[i] = sum - C;
        }
      } else if (alpha[i] < 0) {
        alpha[i] = 0;
        alpha[j] = sum;
      }
    }
    const double di = alpha[i] - ai, dj = alpha[j] - aj;
    for (std::size_t t = 0; t < n; ++t)
      G[t] += y[t] * (y[i] * Ki[t] * di + y[j] * Kj[t] * dj);
  }

  // Bias from free vectors, else the midpoint of the feasible range.
  double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
  std::size_t n_free = 0;
  for (std::size_t t = 0; t < n; ++t) {
    const double yg = y[t] * G[t];
    if (alpha[t] >= C) {
      if (y[t] < 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg);
      else lb = std::max(lb, yg);
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  const double rho = n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;

  SvmModel m;
  m.kernel = cfg.kernel;
  m.C = C;
  m.b = -rho;
  m.alpha = alpha;
  m.y.assign(y.begin(), y.end());
  m.iterations = iter;
  for (std::size_t t = 0; t < n; ++t) {
    if (alpha[t] > 0) {
      m.support.push_back(x[t]);
      m.coef.push_back(alpha[t] * y[t]);
    }
  }
  return m;
}

OneVsRestSvm OneVsRestSvm::train(std::span<const SparseVector> x,
                                 std::span<const std::string> labels, const SvmConfig& cfg) {
  if (x.size() != labels.size()) throw ValidationError("svm: label count differs from example count");
  std::set<std::string> cls(labels.begin(), labels.end());
  if (cls.size() < 2) throw ValidationError("svm: training data has a single class");
  OneVsRestSvm m;
  m.classes_.assign(cls.begin(), cls.end());
  KernelCache cache(x, cfg.kernel);
  for (const auto& c : m.classes_) {
    std::vector<int> y;
    for (const auto& l : labels) y.push_back(l == c ? 1 : -1);
    m.machines_.push_back(svm_train(x, y, cfg, cache));
  }
  return m;
}

std::string OneVsRestSvm::predict(const SparseVector& x) const {
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < machines_.size(); ++k) {
    const double v = machines_[k].decision(x);
    if (v > best_v) {
      best_v = v;
      best = k;
    }
  }
  return classes_.at(best);
}

// ---------------------------------------------------------------------------

void TfidfSvmClassifier::fit(std::span<const LabeledDocument> docs) {
  std::vector<std::string> texts, labels;
  for (const auto& d : docs) {
    texts.push_back(d.text);
    labels.push_back(d.category);
  }
  tfidf_ = TfidfModel::fit(texts, vocab_size_);
  std::vector<SparseVector> x;
  for (const auto& t : texts) x.push_back(tfidf_.transform(t));
  svm_ = OneVsRestSvm::train(x, labels, cfg_);
}

std::vector<std::string> TfidfSvmClassifier::predict(std::span<const LabeledDocument> docs) const {
  std::vector<std::string> out;
  for (const auto& d : docs) out.push_back(svm_.predict(tfidf_.transform(d.text)));
  return out;
}

nlohmann::json TfidfSvmClassifier::describe() const {
  return {{"model", "tfidf-svm"},
          {"vocab", vocab_size_},
          {"kernel", std::string(to_string(cfg_.kernel))},
          {"C", cfg_.C},
          {"tol", cfg_.tol}};
}

std::vector<double> PooledMlpClassifier::pooled(const LabeledDocument& d) const {
  auto u = Utterance::from_words(split_ws(d.text), d.id, d.id);
  std::vector<double> mean(provider_->dim(), 0.0);
  if (u.tokens.empty()) return mean;
  Matrix m = embed_tokens(*provider_, u.tokens, d.id);
  std::vector<std::vector<double>> rows;
  for (std::size_t r = 0; r < m.rows(); ++r) rows.emplace_back(m.row(r).begin(), m.row(r).end());
  return pool_subwords(rows);
}

void PooledMlpClassifier::fit(std::span<const LabeledDocument> docs) {
  if (docs.empty()) throw ValidationError("mlp classifier: empty training set");
  std::set<std::string> cls;
  for (const auto& d : docs) cls.insert(d.category);
  classes_.assign(cls.begin(), cls.end());
  MlpSpec spec;
  spec.input_dim = provider_->dim();
  spec.hidden_dims = cfg_.hidden_dims;
  spec.input_dropout = 0.0;
  spec.hidden_dropout = 0.0;
  spec.heads = {{"category", classes_.size()}};
  mlp_ = Mlp(spec, cfg_.seed);
  std::vector<std::vector<double>> x;
  std::vector<int> y;
  for (const auto& d : docs) {
    x.push_back(pooled(d));
    y.push_back(static_cast<int>(std::lower_bound(classes_.begin(), classes_.end(), d.category) -
                                 classes_.begin()));
  }
  std::mt19937_64 rng(cfg_.seed);
  Adam adam(cfg_.adam);
  auto params = mlp_.parameters();
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  MlpCache cache;
  for (int e = 0; e < cfg_.epochs; ++e) {
    std::shuffle(order.begin(), order.end(), rng);
    std::size_t in_batch = 0;
    for (std::size_t i : order) {
      mlp_.forward(x[i], 0, {}, Mode::train, &rng, &cache);
      mlp_.backward(cache, y[i]);
      if (++in_batch == cfg_.batch_size) {
        adam.step(params, 1.0 / static_cast<double>(in_batch));
        in_batch = 0;
      }
    }
    if (in_batch) adam.step(params, 1.0 / static_cast<double>(in_batch));
  }
}

std::vector<std::string> PooledMlpClassifier::predict(std::span<const LabeledDocument> docs) const {
  std::vector<std::string> out;
  for (const auto& d : docs) {
    auto p = mlp_.forward(pooled(d), 0);
    out.push_back(classes_[std::max_element(p.begin(), p.end()) - p.begin()]);
  }
  return out;
}

nlohmann::json PooledMlpClassifier::describe() const {
  return {{"model", "pooled-mlp"},
          {"provider", provider_->describe()},
          {"hidden_dims", cfg_.hidden_dims},
          {"epochs", cfg_.epochs},
          {"lr", cfg_.adam.lr}};
}

// ---------------------------------------------------------------------------

nlohmann::json SplitsReport::to_json() const {
  nlohmann::json j{{"f1", f1}, {"mean", mean}, {"std", stddev}, {"model", model}};
  nlohmann::json sz = nlohmann::json::array();
  for (const auto& s : sizes) sz.push_back({{"train", s[0]}, {"test", s[1]}});
  j["sizes"] = sz;
  if (ci) j["ci"] = ci->to_json();
  return j;
}

SplitsReport run_splits(std::span<const LabeledDocument> docs, std::size_t n_splits,
                        std::size_t train_size, std::size_t test_size,
                        const ClassifierFactory& factory, std::uint64_t seed) {
  const std::size_t n = docs.size();
  if (n_splits == 0) throw ValidationError("run_splits: need at least one split");
  if (train_size == 0 || test_size == 0 || train_size + test_size > n)
    throw ValidationError("run_splits: cannot draw " + std::to_string(train_size) + " train + " +
                          std::to_string(test_size) + " test documents from " + std::to_string(n));
  std::vector<SplitItem> items;
  std::map<std::string, const LabeledDocument*> by_id;
  for (const auto& d : docs) {
    items.push_back({d.id, d.category, 1});
    if (!by_id.emplace(d.id, &d).second)
      throw ValidationError("run_splits: duplicate document id '" + d.id + "'");
  }
  const double N = static_cast<double>(n);
  const double tr = static_cast<double>(train_size) / N;
  const double te = static_cast<double>(test_size) / N;
  const std::array<double, 3> ratios{tr, std::max(0.0, 1.0 - tr - te), te};

  SplitsReport rep;
  rep.f1.assign(n_splits, 0.0);
  rep.sizes.assign(n_splits, {0, 0});
  std::vector<nlohmann::json> models(n_splits);
  parallel_for(n_splits, [&](std::size_t s) {
    const std::uint64_t split_seed = mix64(seed + s);
    auto spec = stratified_split(items, ratios, split_seed);
    std::vector<LabeledDocument> train, test;
    for (const auto& id : spec.members(Part::train)) train.push_back(*by_id.at(id));
    for (const auto& id : spec.members(Part::test)) test.push_back(*by_id.at(id));
    auto model = factory(split_seed);
    model->fit(train);
    auto pred = model->predict(test);
    std::vector<std::string> gold;
    for (const auto& d : test) gold.push_back(d.category);
    rep.f1[s] = weighted_f1(gold, pred);
    rep.sizes[s] = {train.size(), test.size()};
    models[s] = model->describe();
  });
  rep.model = models.front();
  rep.mean = std::accumulate(rep.f1.begin(), rep.f1.end(), 0.0) / static_cast<double>(n_splits);
  if (n_splits >= 2) {
    rep.ci = t_confidence_interval(rep.f1);
    rep.stddev = rep.ci->stddev;
  }
  return rep;
}

}  // namespace oral
