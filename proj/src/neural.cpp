#include "oral/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "oral/error.hpp"
#include "oral/simd.hpp"

namespace oral {

void MlpSpec::validate() const {
  if (input_dim == 0) throw ValidationError("mlp: input_dim must be positive");
  for (auto h : hidden_dims)
    if (h == 0) throw ValidationError("mlp: hidden dims must be positive");
  if (!(input_dropout >= 0.0 && input_dropout < 1.0) ||
      !(hidden_dropout >= 0.0 && hidden_dropout < 1.0))
    throw ValidationError("mlp: dropout rates must lie in [0, 1)");
  if (heads.empty()) throw ValidationError("mlp: at least one head required");
  for (const auto& [name, arity] : heads)
    if (arity == 0) throw ValidationError("mlp: head '" + name + "' has no classes");
}

int MlpSpec::head_index(std::string_view name) const {
  for (std::size_t i = 0; i < heads.size(); ++i)
    if (heads[i].first == name) return static_cast<int>(i);
  throw ValidationError("mlp: unknown head '" + std::string(name) + "'");
}

nlohmann::json MlpSpec::to_json() const {
  nlohmann::json h = nlohmann::json::array();
  for (const auto& [name, arity] : heads) h.push_back({{"name", name}, {"arity", arity}});
  return {{"input_dim", input_dim},
          {"hidden_dims", hidden_dims},
          {"input_dropout", input_dropout},
          {"hidden_dropout", hidden_dropout},
          {"heads", h}};
}

MlpSpec MlpSpec::from_json(const nlohmann::json& j) {
  MlpSpec s;
  s.input_dim = j.at("input_dim").get<std::size_t>();
  s.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  s.input_dropout = j.at("input_dropout").get<double>();
  s.hidden_dropout = j.at("hidden_dropout").get<double>();
  for (const auto& h : j.at("heads"))
    s.heads.emplace_back(h.at("name").get<std::string>(), h.at("arity").get<std::size_t>());
  s.validate();
  return s;
}

// ---------------------------------------------------------------------------

Mlp::Mlp(MlpSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  std::mt19937_64 rng(seed);
  auto he_uniform = [&](Tensor& w, std::size_t fan_in) {
    const double a = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> u(-a, a);
    for (auto& x : w.value) x = u(rng);
  };
  std::size_t in = spec_.input_dim;
  for (std::size_t l = 0; l < spec_.hidden_dims.size(); ++l) {
    const std::size_t out = spec_.hidden_dims[l];
    hidden_.emplace_back("W" + std::to_string(l), out, in);
    he_uniform(hidden_.back(), in);
    hidden_.emplace_back("b" + std::to_string(l), 1, out);
    in = out;
  }
  for (const auto& [name, arity] : spec_.heads) {
    heads_.emplace_back("head." + name + ".W", arity, in);
    he_uniform(heads_.back(), in);
    heads_.emplace_back("head." + name + ".b", 1, arity);
  }
}

namespace {

void dropout(std::vector<double>& a, double p, std::mt19937_64& rng, std::vector<double>& mask) {
  mask.assign(a.size(), 0.0);
  if (p <= 0.0) {
    std::fill(mask.begin(), mask.end(), 1.0);
    return;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double keep = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < a.size(); ++i) {
    mask[i] = u(rng) < p ? 0.0 : keep;
    a[i] *= mask[i];
  }
}

std::vector<double> masked_softmax(std::vector<double> z, std::span<const char> legal) {
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!legal.empty() && !legal[k]) continue;
    mx = std::max(mx, z[k]);
  }
  if (mx == -std::numeric_limits<double>::infinity())
    throw ContractError("softmax: every class is masked");
  double sum = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    if (!legal.empty() && !legal[k]) {
      z[k] = 0.0;
      continue;
    }
    z[k] = std::exp(z[k] - mx);
    sum += z[k];
  }
  for (auto& p : z) p /= sum;
  return z;
}

}  // namespace

std::vector<double> Mlp::forward(std::span<const double> x, int head, std::span<const char> legal,
                                 Mode mode, std::mt19937_64* rng, MlpCache* cache) const {
  if (x.size() != spec_.input_dim)
    throw ValidationError("mlp: input has " + std::to_string(x.size()) + " values, expected " +
                          std::to_string(spec_.input_dim));
  if (head < 0 || head >= static_cast<int>(spec_.heads.size()))
    throw ValidationError("mlp: head index out of range");
  const std::size_t arity = spec_.heads[head].second;
  if (!legal.empty() && legal.size() != arity)
    throw ValidationError("mlp: legality mask has wrong length");
  const bool train = mode == Mode::train;
  if (train && !rng && (spec_.input_dropout > 0 || spec_.hidden_dropout > 0))
    throw ContractError("mlp: train mode needs a random generator");
  const auto& k = simd::active();

  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  c.head = head;
  c.acts.assign(1, std::vector<double>(x.begin(), x.end()));
  c.masks.assign(1, {});
  if (train && spec_.input_dropout > 0) dropout(c.acts[0], spec_.input_dropout, *rng, c.masks[0]);

  for (std::size_t l = 0; l < spec_.hidden_dims.size(); ++l) {
    const Tensor& w = hidden_[2 * l];
    const Tensor& b = hidden_[2 * l + 1];
    std::vector<double> a(w.rows);
    k.gemv(w.value.data(), c.acts.back().data(), b.value.data(), a.data(), w.rows, w.cols);
    for (auto& v : a) v = v > 0.0 ? v : 0.0;
    c.masks.emplace_back();
    if (train && spec_.hidden_dropout > 0) dropout(a, spec_.hidden_dropout, *rng, c.masks.back());
    c.acts.push_back(std::move(a));
  }
  const Tensor& w = heads_[2 * head];
  const Tensor& b = heads_[2 * head + 1];
  std::vector<double> z(w.rows);
  k.gemv(w.value.data(), c.acts.back().data(), b.value.data(), z.data(), w.rows, w.cols);
  c.legal.assign(legal.begin(), legal.end());
  c.probs = masked_softmax(std::move(z), legal);
  return c.probs;
}

std::vector<std::vector<double>> Mlp::forward_all(std::span<const double> x) const {
  std::vector<std::vector<double>> out;
  for (std::size_t h = 0; h < spec_.heads.size(); ++h)
    out.push_back(forward(x, static_cast<int>(h)));
  return out;
}

std::vector<double> Mlp::backward(const MlpCache& cache, int target) {
  if (cache.head < 0 || cache.probs.empty()) throw ContractError("mlp: backward without forward");
  if (target < 0 || target >= static_cast<int>(cache.probs.size()))
    throw ValidationError("mlp: target class out of range");
  std::vector<double> t(cache.probs.size(), 0.0);
  t[target] = 1.0;
  return backward(cache, t);
}

std::vector<double> Mlp::backward(const MlpCache& cache, std::span<const double> target) {
  if (cache.head < 0 || cache.probs.empty()) throw ContractError("mlp: backward without forward");
  if (target.size() != cache.probs.size())
    throw ValidationError("mlp: target distribution has wrong length");
  for (std::size_t k = 0; k < target.size(); ++k)
    if (target[k] != 0.0 && !cache.legal.empty() && !cache.legal[k])
      throw ValidationError("mlp: target class " + std::to_string(k) + " is masked as illegal");
  const auto& kt = simd::active();

  // dL/dz = p - t on legal classes; masked logits carry no gradient.
  std::vector<double> g(cache.probs.size());
  for (std::size_t k = 0; k < g.size(); ++k)
    g[k] = (cache.legal.empty() || cache.legal[k]) ? cache.probs[k] - target[k] : 0.0;

  Tensor& hw = heads_[2 * cache.head];
  Tensor& hb = heads_[2 * cache.head + 1];
  const auto& top = cache.acts.back();
  kt.ger_acc(g.data(), top.data(), hw.grad.data(), hw.rows, hw.cols);
  kt.axpy(1.0, g.data(), hb.grad.data(), g.size());
  std::vector<double> d(hw.cols, 0.0);
  kt.gemv_t_acc(hw.value.data(), g.data(), d.data(), hw.rows, hw.cols);

  for (std::size_t l = spec_.hidden_dims.size(); l-- > 0;) {
    const auto& out = cache.acts[l + 1];
    const auto& mask = cache.masks[l + 1];
    // out = relu(pre) * mask, so the local derivative is mask where out > 0.
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double m = mask.empty() ? 1.0 : mask[i];
      d[i] = out[i] > 0.0 ? d[i] * m : 0.0;
    }
    Tensor& w = hidden_[2 * l];
    Tensor& b = hidden_[2 * l + 1];
    kt.ger_acc(d.data(), cache.acts[l].data(), w.grad.data(), w.rows, w.cols);
    kt.axpy(1.0, d.data(), b.grad.data(), d.size());
    std::vector<double> prev(w.cols, 0.0);
    kt.gemv_t_acc(w.value.data(), d.data(), prev.data(), w.rows, w.cols);
    d = std::move(prev);
  }
  if (!cache.masks[0].empty())
    for (std::size_t i = 0; i < d.size(); ++i) d[i] *= cache.masks[0][i];
  return d;
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> out;
  for (auto& t : hidden_) out.push_back(&t);
  for (auto& t : heads_) out.push_back(&t);
  return out;
}

std::vector<const Tensor*> Mlp::parameters() const {
  std::vector<const Tensor*> out;
  for (const auto& t : hidden_) out.push_back(&t);
  for (const auto& t : heads_) out.push_back(&t);
  return out;
}

nlohmann::json Mlp::to_json() const {
  return {{"format", "oral-mlp"},
          {"version", 1},
          {"spec", spec_.to_json()},
          {"params", tensors_to_json(parameters())}};
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "oral-mlp" || j.value("version", 0) != 1)
    throw ValidationError("mlp: not an oral-mlp v1 checkpoint");
  Mlp m(MlpSpec::from_json(j.at("spec")), 0);
  tensors_from_json(j.at("params"), m.parameters());
  return m;
}

double cross_entropy(std::span<const double> probs, int target) {
  return -std::log(std::max(probs[target], std::numeric_limits<double>::min()));
}

// ---------------------------------------------------------------------------

void Adam::step(std::span<Tensor* const> params, double grad_scale) {
  for (const Tensor* p : params)
    for (double g : p->grad)
      if (!std::isfinite(g)) throw ValidationError("adam: non-finite gradient in '" + p->name + "'");
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (Tensor* p : params) {
    for (std::size_t i = 0; i < p->size(); ++i) {
      const double g = p->grad[i] * grad_scale;
      p->m[i] = cfg_.beta1 * p->m[i] + (1.0 - cfg_.beta1) * g;
      p->v[i] = cfg_.beta2 * p->v[i] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = p->m[i] / c1;
      const double vhat = p->v[i] / c2;
      p->value[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
      p->grad[i] = 0.0;
    }
  }
}

void zero_grad(std::span<Tensor* const> params) {
  for (Tensor* p : params) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

nlohmann::json tensors_to_json(std::span<const Tensor* const> params) {
  nlohmann::json out = nlohmann::json::array();
  for (const Tensor* p : params)
    out.push_back({{"name", p->name}, {"rows", p->rows}, {"cols", p->cols}, {"value", p->value}});
  return out;
}

void tensors_from_json(const nlohmann::json& j, std::span<Tensor* const> params) {
  if (!j.is_array() || j.size() != params.size())
    throw ValidationError("checkpoint: expected " + std::to_string(params.size()) + " tensors");
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = *params[i];
    const auto& e = j[i];
    if (e.at("name").get<std::string>() != p.name || e.at("rows").get<std::size_t>() != p.rows ||
        e.at("cols").get<std::size_t>() != p.cols)
      throw ValidationError("checkpoint: tensor '" + e.at("name").get<std::string>() +
                            "' does not match '" + p.name + "'");
    p.value = e.at("value").get<std::vector<double>>();
    if (p.value.size() != p.rows * p.cols)
      throw ValidationError("checkpoint: tensor '" + p.name + "' has wrong size");
  }
}

}  // namespace oral
