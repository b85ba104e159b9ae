#include "sshash/kernels.hpp"

#include <algorithm>
#include <bit>

#ifdef SSHASH_HAVE_OPENMP
#include <omp.h>
#endif

namespace sshash::kernels {

namespace {

constexpr std::size_t kParallelWork = std::size_t{1} << 15;

inline void row_nn(const double* a_row, const double* b, double* c_row, std::size_t k,
                   std::size_t n) {
    std::fill_n(c_row, n, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
        const double av = a_row[p];
        const double* b_row = b + p * n;
        for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

// Row p of a^T * b: sum over the m rows in ascending order.
inline void row_tn(const double* a, const double* b, double* c_row, std::size_t p,
                   std::size_t m, std::size_t k, std::size_t n) {
    std::fill_n(c_row, n, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
        const double av = a[i * k + p];
        if (av == 0.0) continue;
        const double* b_row = b + i * n;
        for (std::size_t j = 0; j < n; ++j) c_row[j] += av * b_row[j];
    }
}

inline void row_nt(const double* a_row, const double* b, double* c_row, std::size_t n,
                   std::size_t k) {
    for (std::size_t p = 0; p < k; ++p) {
        const double* b_row = b + p * n;
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) acc += a_row[j] * b_row[j];
        c_row[p] = acc;
    }
}

inline void hamming_row(const std::uint64_t* q, const std::uint64_t* items, std::size_t n_items,
                        std::size_t words, std::uint32_t* out) {
    for (std::size_t i = 0; i < n_items; ++i) {
        const std::uint64_t* it = items + i * words;
        std::uint32_t d = 0;
        for (std::size_t w = 0; w < words; ++w) d += std::popcount(q[w] ^ it[w]);
        out[i] = d;
    }
}

void check_gemm(std::size_t a, std::size_t b, std::size_t c, std::size_t ea, std::size_t eb,
                std::size_t ec) {
    if (a < ea || b < eb || c < ec) throw InvalidInput("gemm: buffer smaller than shape");
}

std::size_t scan_items(std::span<const std::uint64_t> queries,
                       std::span<const std::uint64_t> items, std::size_t words,
                       std::span<std::uint32_t> out) {
    if (words == 0) throw InvalidInput("hamming_scan: zero words per code");
    const std::size_t nq = queries.size() / words;
    const std::size_t ni = items.size() / words;
    if (out.size() < nq * ni) throw InvalidInput("hamming_scan: output buffer too small");
    return ni;
}

}  // namespace

namespace serial {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    check_gemm(a.size(), b.size(), c.size(), m * k, k * n, m * n);
    for (std::size_t i = 0; i < m; ++i) row_nn(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    check_gemm(a.size(), b.size(), c.size(), m * k, m * n, k * n);
    for (std::size_t p = 0; p < k; ++p) row_tn(a.data(), b.data(), c.data() + p * n, p, m, k, n);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k) {
    check_gemm(a.size(), b.size(), c.size(), m * n, k * n, m * k);
    for (std::size_t i = 0; i < m; ++i) row_nt(a.data() + i * n, b.data(), c.data() + i * k, n, k);
}

void hamming_scan(std::span<const std::uint64_t> queries, std::span<const std::uint64_t> items,
                  std::size_t words, std::span<std::uint32_t> out) {
    const std::size_t ni = scan_items(queries, items, words, out);
    const std::size_t nq = queries.size() / words;
    for (std::size_t q = 0; q < nq; ++q)
        hamming_row(queries.data() + q * words, items.data(), ni, words, out.data() + q * ni);
}

}  // namespace serial

namespace parallel {

void gemm_nn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    check_gemm(a.size(), b.size(), c.size(), m * k, k * n, m * n);
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        row_nn(a.data() + i * k, b.data(), c.data() + i * n, k, n);
}

void gemm_tn(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t k, std::size_t n) {
    check_gemm(a.size(), b.size(), c.size(), m * k, m * n, k * n);
    const auto rows = static_cast<std::ptrdiff_t>(k);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t p = 0; p < rows; ++p)
        row_tn(a.data(), b.data(), c.data() + p * n, static_cast<std::size_t>(p), m, k, n);
}

void gemm_nt(std::span<const double> a, std::span<const double> b, std::span<double> c,
             std::size_t m, std::size_t n, std::size_t k) {
    check_gemm(a.size(), b.size(), c.size(), m * n, k * n, m * k);
    const auto rows = static_cast<std::ptrdiff_t>(m);
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t i = 0; i < rows; ++i)
        row_nt(a.data() + i * n, b.data(), c.data() + i * k, n, k);
}

void hamming_scan(std::span<const std::uint64_t> queries, std::span<const std::uint64_t> items,
                  std::size_t words, std::span<std::uint32_t> out) {
    const std::size_t ni = scan_items(queries, items, words, out);
    const auto nq = static_cast<std::ptrdiff_t>(queries.size() / words);
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t q = 0; q < nq; ++q)
        hamming_row(queries.data() + q * words, items.data(), ni, words, out.data() + q * ni);
}

}  // namespace parallel

bool openmp_enabled() noexcept {
#ifdef SSHASH_HAVE_OPENMP
    return true;
#else
    return false;
#endif
}

int max_threads() noexcept {
#ifdef SSHASH_HAVE_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {
bool use_parallel(std::size_t work) {
#ifdef SSHASH_HAVE_OPENMP
    return work >= kParallelWork && omp_get_max_threads() > 1 && !omp_in_parallel();
#else
    (void)work;
    return false;
#endif
}
}  // namespace

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows())
        throw InvalidInput("matmul: " + shape_string(a) + " * " + shape_string(b));
    Matrix c(a.rows(), b.cols());
    if (use_parallel(a.rows() * a.cols() * b.cols()))
        parallel::gemm_nn(a.values(), b.values(), c.values(), a.rows(), a.cols(), b.cols());
    else
        serial::gemm_nn(a.values(), b.values(), c.values(), a.rows(), a.cols(), b.cols());
    return c;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows())
        throw InvalidInput("matmul_tn: " + shape_string(a) + "^T * " + shape_string(b));
    Matrix c(a.cols(), b.cols());
    if (use_parallel(a.rows() * a.cols() * b.cols()))
        parallel::gemm_tn(a.values(), b.values(), c.values(), a.rows(), a.cols(), b.cols());
    else
        serial::gemm_tn(a.values(), b.values(), c.values(), a.rows(), a.cols(), b.cols());
    return c;
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols())
        throw InvalidInput("matmul_nt: " + shape_string(a) + " * " + shape_string(b) + "^T");
    Matrix c(a.rows(), b.rows());
    if (use_parallel(a.rows() * a.cols() * b.rows()))
        parallel::gemm_nt(a.values(), b.values(), c.values(), a.rows(), a.cols(), b.rows());
    else
        serial::gemm_nt(a.values(), b.values(), c.values(), a.rows(), a.cols(), b.rows());
    return c;
}

void hamming_scan(std::span<const std::uint64_t> queries, std::span<const std::uint64_t> items,
                  std::size_t words, std::span<std::uint32_t> out) {
    if (use_parallel(queries.size() * items.size()))
        parallel::hamming_scan(queries, items, words, out);
    else
        serial::hamming_scan(queries, items, words, out);
}

}  // namespace sshash::kernels
