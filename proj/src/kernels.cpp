#include "dirt/kernels.hpp"

#include <vector>

#ifdef DIRT_HAVE_OPENMP
#include <omp.h>
#endif

namespace dirt::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelWork = 1u << 15;

inline void axpy(double alpha, const double* __restrict x, double* __restrict y, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) y[j] += alpha * x[j];
}

}  // namespace

int max_threads() {
#ifdef DIRT_HAVE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const bool parallel = m * k * n >= kParallelWork && m > 1;
  (void)parallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    double* ci = C + i * n;
    for (std::size_t j = 0; j < n; ++j) ci[j] = 0.0;
    const double* ai = A + i * k;
    for (std::size_t p = 0; p < k; ++p) axpy(ai[p], B + p * n, ci, n);
  }
}

void matmul_add_bt(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t n, std::size_t k) {
  // Transposing b once turns the inner dot products into contiguous axpys.
  std::vector<double> bt(n * k);
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t j = 0; j < n; ++j) bt[j * k + r] = b[r * n + j];
  const double* A = a.data();
  const double* BT = bt.data();
  double* C = c.data();
  const bool parallel = m * k * n >= kParallelWork && m > 1;
  (void)parallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(m); ++i) {
    double* ci = C + i * k;
    const double* ai = A + i * n;
    for (std::size_t j = 0; j < n; ++j) axpy(ai[j], BT + j * k, ci, k);
  }
}

void matmul_add_at(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n) {
  const double* A = a.data();
  const double* B = b.data();
  double* C = c.data();
  const bool parallel = m * k * n >= kParallelWork && k > 1;
  (void)parallel;
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(k); ++r) {
    double* cr = C + r * n;
    for (std::size_t i = 0; i < m; ++i) axpy(A[i * k + r], B + i * n, cr, n);
  }
}

namespace reference {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += a[i * k + p] * b[p * n + j];
      c[i * n + j] = s;
    }
}

void matmul_add_bt(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < k; ++r) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * b[r * n + j];
      c[i * k + r] += s;
    }
}

void matmul_add_at(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t r = 0; r < k; ++r)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (std::size_t i = 0; i < m; ++i) s += a[i * k + r] * b[i * n + j];
      c[r * n + j] += s;
    }
}

}  // namespace reference
}  // namespace dirt::kernels
