#include <doctest.h>

#include <cmath>

#include "sshash/diffnet.hpp"
#include "sshash/latent.hpp"
#include "test_util.hpp"

using namespace sshash;

TEST_CASE("balanced KL vanishes at one half and is symmetric about it") {
    const std::vector<double> half(16, 0.5);
    CHECK(kl_bernoulli_balanced(half) == 0.0);
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        std::vector<double> a(8), b(8);
        for (std::size_t i = 0; i < 8; ++i) {
            a[i] = u(rng);
            b[i] = 1.0 - a[i];
        }
        CHECK(kl_bernoulli_balanced(a) == doctest::Approx(kl_bernoulli_balanced(b)).epsilon(1e-12));
        CHECK(kl_bernoulli_balanced(a) >= 0.0);
    }
}

TEST_CASE("balanced KL against hand values") {
    // alpha = 1/4: 1/4 log(1/2) + 3/4 log(3/2).
    const std::vector<double> a{0.25};
    CHECK(kl_bernoulli_balanced(a) == doctest::Approx(0.25 * std::log(0.5) + 0.75 * std::log(1.5)));
    // A deterministic bit costs log 2 (up to the clamp).
    const std::vector<double> one{1.0};
    CHECK(kl_bernoulli_balanced(one) == doctest::Approx(std::log(2.0)).epsilon(1e-5));
}

TEST_CASE("balanced KL matches a plain Monte Carlo estimate within five standard errors") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int draws = 100000;
    for (int t = 0; t < 10; ++t) {
        std::vector<double> a(16);
        for (double& v : a) v = unit(rng);
        Matrix alpha(1, 16, a);
        double sum = 0.0, sq = 0.0;
        for (int s = 0; s < draws; ++s) {
            const Matrix b = sample_binary_concrete(alpha, 0.67, rng);
            double log_ratio = 0.0;
            for (std::size_t i = 0; i < 16; ++i) {
                const double q = clamp_probability(a[i]);
                log_ratio += b(0, i) > 0.5 ? std::log(2.0 * q) : std::log(2.0 * (1.0 - q));
            }
            sum += log_ratio;
            sq += log_ratio * log_ratio;
        }
        const double mean = sum / draws;
        const double se = std::sqrt((sq / draws - mean * mean) / draws);
        CHECK(std::abs(mean - kl_bernoulli_balanced(a)) < 5.0 * se + 1e-12);
    }
}

TEST_CASE("KL gradient is the logit and vanishes under the clamp") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    std::vector<double> a(10);
    for (double& v : a) v = u(rng);
    const auto fn = [](std::span<const double> p) {
        return LossAndGrad{kl_bernoulli_balanced(p), kl_bernoulli_balanced_grad(p)};
    };
    CHECK(grad_check(fn, a, 1e-6, 1e-6).passed);
    const std::vector<double> edge{0.0, 1.0};
    const auto g = kl_bernoulli_balanced_grad(edge);
    CHECK(g[0] == 0.0);
    CHECK(g[1] == 0.0);
}

TEST_CASE("thresholded binary-concrete samples follow alpha for every temperature") {
    std::mt19937_64 rng(4);
    Matrix alpha(1, 5);
    const double values[] = {0.05, 0.3, 0.5, 0.72, 0.93};
    for (std::size_t i = 0; i < 5; ++i) alpha(0, i) = values[i];
    for (double tau : {0.1, 0.67, 1.0, 5.0}) {
        std::vector<int> ones(5, 0);
        const int draws = 40000;
        for (int s = 0; s < draws; ++s) {
            const Matrix b = sample_binary_concrete(alpha, tau, rng);
            for (std::size_t i = 0; i < 5; ++i) ones[i] += b(0, i) > 0.5;
        }
        for (std::size_t i = 0; i < 5; ++i)
            CHECK(std::abs(static_cast<double>(ones[i]) / draws - values[i]) < 0.01);
    }
}

TEST_CASE("relaxation closed form and temperature validation") {
    Matrix alpha(1, 2);
    alpha(0, 0) = 0.8;
    alpha(0, 1) = 0.1;
    Matrix noise(1, 2);
    noise(0, 0) = 0.3;
    noise(0, 1) = -1.2;
    const Matrix b = sample_binary_concrete(alpha, 0.5, noise);
    CHECK(b(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-(std::log(4.0) + 0.3) / 0.5))));
    CHECK(b(0, 1) == doctest::Approx(1.0 / (1.0 + std::exp(-(std::log(1.0 / 9.0) - 1.2) / 0.5))));
    CHECK_THROWS_AS(sample_binary_concrete(alpha, 0.0, noise), InvalidInput);
    CHECK_THROWS_AS(sample_binary_concrete(alpha, -1.0, noise), InvalidInput);
}

TEST_CASE("relaxation backward matches central differences under frozen noise") {
    std::mt19937_64 rng(5);
    const Matrix alpha = testutil::random_matrix(3, 4, rng, 0.05, 0.95);
    const Matrix noise = draw_logistic_noise(3, 4, rng);
    const Matrix w = testutil::random_matrix(3, 4, rng);
    const double tau = 0.67;
    const auto fn = [&](std::span<const double> p) {
        const Matrix a(3, 4, std::vector<double>(p.begin(), p.end()));
        const Matrix b = sample_binary_concrete(a, tau, noise);
        double loss = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) loss += w.values()[i] * b.values()[i];
        const Matrix g = binary_concrete_backward(a, b, tau, w);
        return LossAndGrad{loss, std::vector<double>(g.values().begin(), g.values().end())};
    };
    CHECK(grad_check(fn, alpha.values(), 1e-7, 1e-5).passed);
}

TEST_CASE("gaussian head: KL, sampling, medians, binarization") {
    const std::vector<double> mean{0.0, 1.0}, var{1.0, 2.0};
    CHECK(kl_gaussian_standard(mean, var) ==
          doctest::Approx(0.5 * ((2.0 + 1.0 - 1.0 - std::log(2.0)))));
    const std::vector<double> zero{0.0, 0.0}, unit{1.0, 1.0};
    CHECK(kl_gaussian_standard(zero, unit) == 0.0);
    const std::vector<double> noise{0.5, -1.0};
    const auto z = sample_gaussian(mean, var, noise);
    CHECK(z[0] == doctest::Approx(0.5));
    CHECK(z[1] == doctest::Approx(1.0 - std::sqrt(2.0)));

    Matrix ref(4, 2);
    const double vals[] = {1, 10, 3, 40, 2, 20, 4, 30};
    for (std::size_t i = 0; i < 8; ++i) ref.values()[i] = vals[i];
    const auto med = column_medians(ref);
    CHECK(med[0] == 2.5);
    CHECK(med[1] == 25.0);
    CHECK_THROWS_AS(column_medians(Matrix()), InvalidInput);

    const std::vector<double> m{3.0, 25.0};
    const BitCode c = binarize_gaussian_median(m, med);
    CHECK(c.test(0));
    CHECK_FALSE(c.test(1));  // ties map to 0
    const std::vector<double> a{0.5, 0.51, 0.2};
    const BitCode h = binarize_bernoulli(a);
    CHECK_FALSE(h.test(0));
    CHECK(h.test(1));
    CHECK_FALSE(h.test(2));
}

TEST_CASE("sampled noise has the right moments") {
    std::mt19937_64 rng(6);
    const Matrix g = draw_logistic_noise(200, 100, rng);
    double mean = 0.0, sq = 0.0;
    for (double v : g.values()) {
        mean += v;
        sq += v * v;
    }
    mean /= g.size();
    sq /= g.size();
    CHECK(std::abs(mean) < 0.03);
    CHECK(sq == doctest::Approx(M_PI * M_PI / 3.0).epsilon(0.03));
}
