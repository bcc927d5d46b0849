#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oral/tensor.hpp"

namespace oral {

inline const std::vector<std::size_t> kDeskHiddenDims{320, 160};
inline const std::vector<std::size_t> kFullHiddenDims{3200, 1600};

struct MlpSpec {
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims = kDeskHiddenDims;
  double input_dropout = 0.5;
  double hidden_dropout = 0.4;
  std::vector<std::pair<std::string, std::size_t>> heads;  // name -> arity

  void validate() const;
  int head_index(std::string_view name) const;  // throws if unknown
  nlohmann::json to_json() const;
  static MlpSpec from_json(const nlohmann::json& j);
  bool operator==(const MlpSpec&) const = default;
};

enum class Mode { train, eval };

// Activations kept by forward() for backward().
struct MlpCache {
  int head = -1;
  std::vector<std::vector<double>> acts;   // acts[0] input after dropout, acts[l+1] hidden l output
  std::vector<std::vector<double>> masks;  // inverted-dropout multipliers per acts level; empty = none
  std::vector<double> probs;
  std::vector<char> legal;  // empty = all classes legal
};

// Input -> dropout -> [Linear -> ReLU -> dropout]* -> per-head Linear -> masked softmax.
class Mlp {
 public:
  Mlp() = default;
  Mlp(MlpSpec spec, std::uint64_t seed);

  const MlpSpec& spec() const { return spec_; }

  // Probabilities of one head. Illegal classes (legal[k] == 0) get exactly 0.
  // Train mode draws dropout masks from `rng`; eval mode ignores it.
  std::vector<double> forward(std::span<const double> x, int head, std::span<const char> legal = {},
                              Mode mode = Mode::eval, std::mt19937_64* rng = nullptr,
                              MlpCache* cache = nullptr) const;
  // Eval-mode distributions of every head, unmasked.
  std::vector<std::vector<double>> forward_all(std::span<const double> x) const;

  // Cross-entropy against a class index or a target distribution. Gradients
  // are added to each tensor's grad; the return value is dLoss/dx.
  std::vector<double> backward(const MlpCache& cache, int target);
  std::vector<double> backward(const MlpCache& cache, std::span<const double> target);

  std::vector<Tensor*> parameters();
  std::vector<const Tensor*> parameters() const;

  nlohmann::json to_json() const;
  static Mlp from_json(const nlohmann::json& j);

 private:
  MlpSpec spec_;
  std::vector<Tensor> hidden_;  // W0, b0, W1, b1, ...
  std::vector<Tensor> heads_;   // W, b per head
};

double cross_entropy(std::span<const double> probs, int target);

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam. step() applies grad * grad_scale, then clears the grads.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
  void step(std::span<Tensor* const> params, double grad_scale = 1.0);
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
};

void zero_grad(std::span<Tensor* const> params);

// Flat parameter arrays; doubles are written with enough digits to round-trip.
nlohmann::json tensors_to_json(std::span<const Tensor* const> params);
void tensors_from_json(const nlohmann::json& j, std::span<Tensor* const> params);

}  // namespace oral
