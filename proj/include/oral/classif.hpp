#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oral/corpus.hpp"
#include "oral/embed.hpp"
#include "oral/metrics.hpp"
#include "oral/neural.hpp"

namespace oral {

// Sorted by column index.
struct SparseVector {
  std::vector<std::pair<int, double>> entries;
  double norm2() const;
  bool operator==(const SparseVector&) const = default;
};

double sparse_dot(const SparseVector& a, const SparseVector& b);
double sparse_sq_dist(const SparseVector& a, const SparseVector& b);
SparseVector to_sparse(std::span<const double> dense);

// Vocabulary = the K most document-frequent tokens (ties: lexicographic)
// among tokens missing from at least one document; weight = count * ln(N/df),
// rows L2-normalised.
class TfidfModel {
 public:
  TfidfModel() = default;
  static TfidfModel fit(std::span<const std::string> docs, std::size_t max_vocab);
  SparseVector transform(std::string_view doc) const;
  bool fitted() const { return fitted_; }
  std::size_t size() const { return vocab_.size(); }
  const std::vector<std::string>& vocabulary() const { return vocab_; }
  const std::vector<double>& idf() const { return idf_; }
  int column(const std::string& token) const;  // -1 when absent

 private:
  bool fitted_ = false;
  std::vector<std::string> vocab_;
  std::map<std::string, int> index_;
  std::vector<double> idf_;
};

enum class KernelKind { triangular, linear };
std::string_view to_string(KernelKind k);
double kernel(KernelKind k, const SparseVector& a, const SparseVector& b);

struct SvmConfig {
  KernelKind kernel = KernelKind::triangular;
  double C = 1.0;
  double tol = 1e-3;
  long max_iter = 10'000'000;
};

// Binary machine: f(x) = sum_i coef_i K(sv_i, x) + b with coef_i = alpha_i y_i.
struct SvmModel {
  KernelKind kernel = KernelKind::triangular;
  double C = 1.0;
  std::vector<SparseVector> support;
  std::vector<double> coef;
  std::vector<double> alpha;  // all training alphas, in input order
  std::vector<int> y;         // training labels in {-1, +1}
  double b = 0.0;
  long iterations = 0;
  double decision(const SparseVector& x) const;
  int predict(const SparseVector& x) const { return decision(x) >= 0 ? 1 : -1; }
  double dual_residual() const;  // sum alpha_i y_i
};

// Lazily computed, memoised Gram rows.
class KernelCache {
 public:
  KernelCache(std::span<const SparseVector> x, KernelKind k);
  const std::vector<double>& row(std::size_t i);
  std::size_t size() const { return x_.size(); }

 private:
  std::span<const SparseVector> x_;
  KernelKind kind_;
  std::vector<std::vector<double>> rows_;
};

// SMO with maximal-violating-pair selection. Labels must be +1/-1 with both present.
SvmModel svm_train(std::span<const SparseVector> x, std::span<const int> y, const SvmConfig& cfg = {});
SvmModel svm_train(std::span<const SparseVector> x, std::span<const int> y, const SvmConfig& cfg,
                   KernelCache& cache);

class OneVsRestSvm {
 public:
  static OneVsRestSvm train(std::span<const SparseVector> x, std::span<const std::string> labels,
                            const SvmConfig& cfg = {});
  // Highest decision value; ties go to the lowest class index.
  std::string predict(const SparseVector& x) const;
  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<SvmModel>& machines() const { return machines_; }

 private:
  std::vector<std::string> classes_;
  std::vector<SvmModel> machines_;
};

class DocClassifier {
 public:
  virtual ~DocClassifier() = default;
  virtual void fit(std::span<const LabeledDocument> docs) = 0;
  virtual std::vector<std::string> predict(std::span<const LabeledDocument> docs) const = 0;
  virtual nlohmann::json describe() const = 0;
};

class TfidfSvmClassifier final : public DocClassifier {
 public:
  TfidfSvmClassifier(std::size_t vocab_size, SvmConfig cfg = {}) : vocab_size_(vocab_size), cfg_(cfg) {}
  void fit(std::span<const LabeledDocument> docs) override;
  std::vector<std::string> predict(std::span<const LabeledDocument> docs) const override;
  nlohmann::json describe() const override;

 private:
  std::size_t vocab_size_;
  SvmConfig cfg_;
  TfidfModel tfidf_;
  OneVsRestSvm svm_;
};

struct PooledMlpConfig {
  std::vector<std::size_t> hidden_dims;  // empty = a single softmax layer
  int epochs = 50;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 1;
};

// Mean of the provider's token vectors, then an MLP with one head.
class PooledMlpClassifier final : public DocClassifier {
 public:
  PooledMlpClassifier(std::shared_ptr<const EmbeddingProvider> provider, PooledMlpConfig cfg)
      : provider_(std::move(provider)), cfg_(std::move(cfg)) {}
  void fit(std::span<const LabeledDocument> docs) override;
  std::vector<std::string> predict(std::span<const LabeledDocument> docs) const override;
  nlohmann::json describe() const override;
  std::vector<double> pooled(const LabeledDocument& d) const;

 private:
  std::shared_ptr<const EmbeddingProvider> provider_;
  PooledMlpConfig cfg_;
  std::vector<std::string> classes_;
  Mlp mlp_;
};

using ClassifierFactory = std::function<std::unique_ptr<DocClassifier>(std::uint64_t seed)>;

struct SplitsReport {
  std::vector<double> f1;
  std::vector<std::array<std::size_t, 2>> sizes;  // achieved (train, test)
  double mean = 0.0;
  double stddev = 0.0;
  std::optional<ConfidenceInterval> ci;
  nlohmann::json model;
  nlohmann::json to_json() const;
};

// Each split draws a category-stratified train/test sample (the remaining
// documents are left out), fits a fresh model, and scores weighted F1.
SplitsReport run_splits(std::span<const LabeledDocument> docs, std::size_t n_splits,
                        std::size_t train_size, std::size_t test_size,
                        const ClassifierFactory& factory, std::uint64_t seed);

}  // namespace oral
