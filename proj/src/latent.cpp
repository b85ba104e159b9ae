#include "sshash/latent.hpp"

#include <algorithm>
#include <cmath>

namespace sshash {

double clamp_probability(double p) noexcept {
    return std::clamp(p, kProbabilityFloor, 1.0 - kProbabilityFloor);
}

double logit(double p) noexcept { return std::log(p) - std::log1p(-p); }

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

namespace {

bool clamped(double p) noexcept { return p < kProbabilityFloor || p > 1.0 - kProbabilityFloor; }

void check_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau))
        throw InvalidInput("temperature must be positive, got " + std::to_string(tau));
}

void check_same_shape(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInput(std::string(what) + ": shape " + shape_string(a) + " vs " +
                           shape_string(b));
}

}  // namespace

Matrix draw_logistic_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Matrix noise(rows, cols);
    for (double& g : noise.values()) {
        double u = unit(rng);
        while (u <= 0.0) u = unit(rng);
        g = std::log(u) - std::log1p(-u);
    }
    return noise;
}

Matrix draw_gaussian_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix noise(rows, cols);
    for (double& e : noise.values()) e = normal(rng);
    return noise;
}

Matrix sample_binary_concrete(const Matrix& alpha, double tau, const Matrix& noise) {
    check_tau(tau);
    check_same_shape(alpha, noise, "sample_binary_concrete");
    Matrix relaxed(alpha.rows(), alpha.cols());
    const auto a = alpha.values();
    const auto g = noise.values();
    auto out = relaxed.values();
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = sigmoid((logit(clamp_probability(a[i])) + g[i]) / tau);
    return relaxed;
}

Matrix sample_binary_concrete(const Matrix& alpha, double tau, std::mt19937_64& rng,
                              Matrix* noise_out) {
    check_tau(tau);
    Matrix noise = draw_logistic_noise(alpha.rows(), alpha.cols(), rng);
    Matrix relaxed = sample_binary_concrete(alpha, tau, noise);
    if (noise_out) *noise_out = std::move(noise);
    return relaxed;
}

Matrix binary_concrete_backward(const Matrix& alpha, const Matrix& relaxed, double tau,
                                const Matrix& relaxed_grad) {
    check_tau(tau);
    check_same_shape(alpha, relaxed, "binary_concrete_backward");
    check_same_shape(alpha, relaxed_grad, "binary_concrete_backward");
    Matrix grad(alpha.rows(), alpha.cols());
    const auto a = alpha.values();
    const auto b = relaxed.values();
    const auto g = relaxed_grad.values();
    auto out = grad.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (clamped(a[i])) {
            out[i] = 0.0;
            continue;
        }
        // d relaxed / d logit = b(1-b)/tau ; d logit / d alpha = 1 / (alpha(1-alpha))
        out[i] = g[i] * b[i] * (1.0 - b[i]) / (tau * a[i] * (1.0 - a[i]));
    }
    return grad;
}

double kl_bernoulli_balanced(std::span<const double> alpha) {
    double kl = 0.0;
    for (double raw : alpha) {
        const double p = clamp_probability(raw);
        kl += p * std::log(2.0 * p) + (1.0 - p) * std::log(2.0 * (1.0 - p));
    }
    return kl;
}

std::vector<double> kl_bernoulli_balanced_grad(std::span<const double> alpha) {
    std::vector<double> grad(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i)
        grad[i] = clamped(alpha[i]) ? 0.0 : logit(alpha[i]);
    return grad;
}

std::vector<double> sample_gaussian(std::span<const double> mean, std::span<const double> variance,
                                    std::span<const double> noise) {
    if (mean.size() != variance.size() || mean.size() != noise.size())
        throw InvalidInput("sample_gaussian: length mismatch");
    std::vector<double> out(mean.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(variance[i] > 0.0)) throw InvalidInput("sample_gaussian: variance must be positive");
        out[i] = mean[i] + std::sqrt(variance[i]) * noise[i];
    }
    return out;
}

std::vector<double> sample_gaussian(std::span<const double> mean, std::span<const double> variance,
                                    std::mt19937_64& rng) {
    const Matrix noise = draw_gaussian_noise(1, mean.size(), rng);
    return sample_gaussian(mean, variance, noise.values());
}

double kl_gaussian_standard(std::span<const double> mean, std::span<const double> variance) {
    if (mean.size() != variance.size()) throw InvalidInput("kl_gaussian_standard: length mismatch");
    double kl = 0.0;
    for (std::size_t i = 0; i < mean.size(); ++i) {
        if (!(variance[i] > 0.0))
            throw InvalidInput("kl_gaussian_standard: variance must be positive");
        kl += variance[i] + mean[i] * mean[i] - 1.0 - std::log(variance[i]);
    }
    return 0.5 * kl;
}

BitCode binarize_bernoulli(std::span<const double> alpha) {
    BitCode code(alpha.size());
    for (std::size_t i = 0; i < alpha.size(); ++i)
        if (alpha[i] > 0.5) code.set(i);
    return code;
}

std::vector<BitCode> binarize_bernoulli(const Matrix& alpha) {
    std::vector<BitCode> codes;
    codes.reserve(alpha.rows());
    for (std::size_t r = 0; r < alpha.rows(); ++r) codes.push_back(binarize_bernoulli(alpha.row(r)));
    return codes;
}

std::vector<double> column_medians(const Matrix& reference) {
    if (reference.rows() == 0) throw InvalidInput("column_medians: empty reference set");
    const std::size_t n = reference.rows();
    std::vector<double> medians(reference.cols());
    std::vector<double> column(n);
    for (std::size_t c = 0; c < reference.cols(); ++c) {
        for (std::size_t r = 0; r < n; ++r) column[r] = reference(r, c);
        const auto mid = column.begin() + static_cast<std::ptrdiff_t>(n / 2);
        std::nth_element(column.begin(), mid, column.end());
        double m = *mid;
        if (n % 2 == 0) m = 0.5 * (m + *std::max_element(column.begin(), mid));
        medians[c] = m;
    }
    return medians;
}

BitCode binarize_gaussian_median(std::span<const double> mean, std::span<const double> medians) {
    if (mean.size() != medians.size())
        throw InvalidInput("binarize_gaussian_median: " + std::to_string(mean.size()) +
                           " means vs " + std::to_string(medians.size()) + " medians");
    BitCode code(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i)
        if (mean[i] > medians[i]) code.set(i);
    return code;
}

std::vector<BitCode> binarize_gaussian_median(const Matrix& means, std::span<const double> medians) {
    std::vector<BitCode> codes;
    codes.reserve(means.rows());
    for (std::size_t r = 0; r < means.rows(); ++r)
        codes.push_back(binarize_gaussian_median(means.row(r), medians));
    return codes;
}

LatentSample draw_bernoulli_sample(const Matrix& alpha, double tau, std::mt19937_64& rng) {
    LatentSample s;
    s.relaxed = sample_binary_concrete(alpha, tau, rng, &s.noise);
    s.hard = binarize_bernoulli(s.relaxed);
    return s;
}

}  // namespace sshash
