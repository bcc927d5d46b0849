#include "oral/simd.hpp"

namespace oral::simd {

namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_scalar(const double* w, const double* x, const double* b, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    y[r] = dot_scalar(w + r * cols, x, cols) + (b ? b[r] : 0.0);
}

void gemv_t_acc_scalar(const double* w, const double* g, double* x_grad, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    if (g[r] != 0.0) axpy_scalar(g[r], w + r * cols, x_grad, cols);
}

void ger_acc_scalar(const double* g, const double* x, double* w_grad, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r)
    if (g[r] != 0.0) axpy_scalar(g[r], x, w_grad + r * cols, cols);
}

double sq_dist_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar",          dot_scalar,     axpy_scalar,
                                 gemv_scalar,       gemv_t_acc_scalar, ger_acc_scalar,
                                 sq_dist_scalar};
  return table;
}

}  // namespace oral::simd
