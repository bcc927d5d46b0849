#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Dense double-precision kernels behind the MLP, the embedding pooling and
// the SVM distance computations. Every kernel has a scalar reference
// implementation; vector variants are picked once at runtime from the CPU
// features (set ORAL_SIMD=scalar to force the reference path).

namespace oral::simd {

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // y = W x + b, W row-major rows x cols. b may be null.
  void (*gemv)(const double* w, const double* x, const double* b, double* y, std::size_t rows,
               std::size_t cols);
  // x_grad += W^T g
  void (*gemv_t_acc)(const double* w, const double* g, double* x_grad, std::size_t rows,
                     std::size_t cols);
  // W_grad += g x^T
  void (*ger_acc)(const double* g, const double* x, double* w_grad, std::size_t rows,
                  std::size_t cols);
  // sum_i (a[i] - b[i])^2
  double (*sq_dist)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar_kernels();
// Null when the variant was not compiled in or the CPU lacks the feature.
const KernelTable* avx2_kernels();
const KernelTable* neon_kernels();

// The table selected for this process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}
inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}
inline double sq_dist(std::span<const double> a, std::span<const double> b) {
  return active().sq_dist(a.data(), b.data(), a.size());
}

}  // namespace oral::simd
