#include <doctest.h>

#include <bit>

#include "sshash/kernels.hpp"
#include "test_util.hpp"

#ifdef SSHASH_HAVE_OPENMP
#include <omp.h>
#endif

using namespace sshash;
namespace k = sshash::kernels;

namespace {

Matrix naive_nn(const Matrix& a, const Matrix& b) {
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            double s = 0.0;
            for (std::size_t t = 0; t < a.cols(); ++t) s += a(i, t) * b(t, j);
            c(i, j) = s;
        }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

void check_close(const Matrix& x, const Matrix& y) {
    REQUIRE(x.rows() == y.rows());
    REQUIRE(x.cols() == y.cols());
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(x.values()[i] == doctest::Approx(y.values()[i]).epsilon(1e-12));
}

struct Shape {
    std::size_t m, kk, n;
};

const Shape kShapes[] = {{1, 1, 1}, {3, 5, 7}, {17, 33, 9}, {64, 100, 48}, {101, 7, 130}};

}  // namespace

TEST_CASE("serial gemm variants agree with the triple loop") {
    std::mt19937_64 rng(1);
    for (const auto& s : kShapes) {
        const Matrix a = testutil::random_matrix(s.m, s.kk, rng);
        const Matrix b = testutil::random_matrix(s.kk, s.n, rng);
        Matrix c(s.m, s.n);
        k::serial::gemm_nn(a.values(), b.values(), c.values(), s.m, s.kk, s.n);
        check_close(c, naive_nn(a, b));

        const Matrix at = transpose(a);
        Matrix ctn(s.m, s.n);
        k::serial::gemm_tn(at.values(), b.values(), ctn.values(), s.kk, s.m, s.n);
        check_close(ctn, naive_nn(a, b));

        const Matrix bt = transpose(b);
        Matrix cnt(s.m, s.n);
        k::serial::gemm_nt(a.values(), bt.values(), cnt.values(), s.m, s.kk, s.n);
        check_close(cnt, naive_nn(a, b));
    }
}

TEST_CASE("parallel kernels are bitwise identical to the serial reference") {
#ifdef SSHASH_HAVE_OPENMP
    omp_set_num_threads(4);
#endif
    std::mt19937_64 rng(2);
    for (const auto& s : kShapes) {
        const Matrix a = testutil::random_matrix(s.m, s.kk, rng);
        const Matrix b = testutil::random_matrix(s.kk, s.n, rng);
        Matrix c1(s.m, s.n), c2(s.m, s.n);
        k::serial::gemm_nn(a.values(), b.values(), c1.values(), s.m, s.kk, s.n);
        k::parallel::gemm_nn(a.values(), b.values(), c2.values(), s.m, s.kk, s.n);
        CHECK(c1 == c2);

        const Matrix b2 = testutil::random_matrix(s.m, s.n, rng);
        Matrix t1(s.kk, s.n), t2(s.kk, s.n);
        k::serial::gemm_tn(a.values(), b2.values(), t1.values(), s.m, s.kk, s.n);
        k::parallel::gemm_tn(a.values(), b2.values(), t2.values(), s.m, s.kk, s.n);
        CHECK(t1 == t2);

        const Matrix b3 = testutil::random_matrix(s.n, s.kk, rng);
        Matrix n1(s.m, s.n), n2(s.m, s.n);
        k::serial::gemm_nt(a.values(), b3.values(), n1.values(), s.m, s.kk, s.n);
        k::parallel::gemm_nt(a.values(), b3.values(), n2.values(), s.m, s.kk, s.n);
        CHECK(n1 == n2);

        CHECK(k::matmul(a, b) == c1);
        CHECK(k::matmul_tn(a, b2) == t1);
        CHECK(k::matmul_nt(a, b3) == n1);
    }
}

TEST_CASE("hamming scans match a per-bit loop in both implementations") {
    std::mt19937_64 rng(3);
    for (std::size_t bits : {16u, 64u, 96u, 200u}) {
        const std::size_t words = BitCode::words_for(bits);
        std::vector<BitCode> qs, items;
        std::vector<std::uint64_t> qpacked, ipacked;
        for (int i = 0; i < 7; ++i) {
            qs.push_back(testutil::random_code(bits, rng));
            qpacked.insert(qpacked.end(), qs.back().words().begin(), qs.back().words().end());
        }
        for (int i = 0; i < 301; ++i) {
            items.push_back(testutil::random_code(bits, rng));
            ipacked.insert(ipacked.end(), items.back().words().begin(), items.back().words().end());
        }
        std::vector<std::uint32_t> s(qs.size() * items.size()), p(s.size()), d(s.size());
        k::serial::hamming_scan(qpacked, ipacked, words, s);
        k::parallel::hamming_scan(qpacked, ipacked, words, p);
        k::hamming_scan(qpacked, ipacked, words, d);
        CHECK(s == p);
        CHECK(s == d);
        for (std::size_t q = 0; q < qs.size(); ++q)
            for (std::size_t i = 0; i < items.size(); ++i) {
                std::uint32_t naive = 0;
                for (std::size_t b = 0; b < bits; ++b) naive += qs[q].test(b) != items[i].test(b);
                CHECK(s[q * items.size() + i] == naive);
            }
    }
}

TEST_CASE("dispatch reports its configuration") {
    CHECK(k::max_threads() >= 1);
#ifdef SSHASH_HAVE_OPENMP
    CHECK(k::openmp_enabled());
#else
    CHECK_FALSE(k::openmp_enabled());
#endif
}
