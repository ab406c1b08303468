#pragma once

#include <cstddef>
#include <span>

// Dense matrix kernels behind the autodiff primitives. The top-level
// functions are the production path: cache-friendly loop orders, OpenMP over
// output rows when the problem is large enough. Every output element is owned
// by exactly one thread and accumulated in a fixed order, so results do not
// depend on the thread count.
//
// `reference` holds straight textbook versions of the same contracts. They are
// kept for the kernel tests and the benchmark, never called by the library.
//
// All matrices are row-major.

namespace dirt::kernels {

/// c[m×n] = a[m×k] · b[k×n]
void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);

/// c[m×k] += a[m×n] · b[k×n]ᵀ
void matmul_add_bt(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t n, std::size_t k);

/// c[k×n] += a[m×k]ᵀ · b[m×n]
void matmul_add_at(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n);

/// Number of threads the parallel kernels may use.
int max_threads();

namespace reference {

void matmul(std::span<const double> a, std::span<const double> b, std::span<double> c,
            std::size_t m, std::size_t k, std::size_t n);
void matmul_add_bt(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t n, std::size_t k);
void matmul_add_at(std::span<const double> a, std::span<const double> b, std::span<double> c,
                   std::size_t m, std::size_t k, std::size_t n);

}  // namespace reference
}  // namespace dirt::kernels
