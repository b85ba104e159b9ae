#pragma once

// Data-parallel inner loops. Every kernel exists twice: a plain serial
// reference and an OpenMP version that splits the outermost output dimension
// across threads. Each output element is accumulated in the same order by
// both, so results are bitwise identical (the library is built with
// -ffp-contract=off to keep it that way).

#include <cstddef>
#include <cstdint>
#include <span>

#include "sshash/matrix.hpp"

namespace sshash::kernels {

namespace serial {
// c[m x n] = a[m x k] * b[k x n]
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[k x n] = a^T * b with a[m x k], b[m x n]
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
// c[m x k] = a * b^T with a[m x n], b[k x n]
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k);
// out[q * n_items + i] = popcount(query_q ^ item_i), codes packed `words` u64 each.
void hamming_scan(std::span<const std::uint64_t> queries, std::span<const std::uint64_t> items,
                  std::size_t words, std::span<std::uint32_t> out);
}  // namespace serial

namespace parallel {
void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n);
void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k);
void hamming_scan(std::span<const std::uint64_t> queries, std::span<const std::uint64_t> items,
                  std::size_t words, std::span<std::uint32_t> out);
}  // namespace parallel

/// True when the parallel namespace was compiled with OpenMP.
bool openmp_enabled() noexcept;
int max_threads() noexcept;

// Dispatching front ends: parallel when worthwhile, serial otherwise.
Matrix matmul(const Matrix& a, const Matrix& b);     // a * b
Matrix matmul_tn(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_nt(const Matrix& a, const Matrix& b);  // a * b^T
void hamming_scan(std::span<const std::uint64_t> queries, std::span<const std::uint64_t> items,
                  std::size_t words, std::span<std::uint32_t> out);

}  // namespace sshash::kernels
