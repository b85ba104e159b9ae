#pragma once

// Stochastic code layer: Bernoulli activation probabilities relaxed with the
// binary-concrete (logistic-noise) estimator, a Gaussian baseline head, the
// closed-form KL terms against each prior, and binarization to hard codes.

#include <random>
#include <span>
#include <vector>

#include "sshash/bitcode.hpp"
#include "sshash/matrix.hpp"

namespace sshash {

inline constexpr double kProbabilityFloor = 1e-7;

double clamp_probability(double p) noexcept;
double logit(double p) noexcept;
double sigmoid(double x) noexcept;

/// Standard-logistic noise log(u) - log(1 - u), u ~ Uniform(0, 1).
Matrix draw_logistic_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng);
/// Standard-normal noise.
Matrix draw_gaussian_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng);

/// relaxed = sigmoid((logit(clamp(alpha)) + noise) / tau). Throws on tau <= 0.
Matrix sample_binary_concrete(const Matrix& alpha, double tau, const Matrix& noise);
Matrix sample_binary_concrete(const Matrix& alpha, double tau, std::mt19937_64& rng,
                              Matrix* noise_out = nullptr);
/// dL/dalpha given dL/drelaxed under frozen noise. Entries where alpha was
/// clamped get zero gradient.
Matrix binary_concrete_backward(const Matrix& alpha, const Matrix& relaxed, double tau,
                                const Matrix& relaxed_grad);

/// KL(Ber(alpha) || Ber(0.5)) summed over bits, alpha clamped first.
double kl_bernoulli_balanced(std::span<const double> alpha);
/// d KL / d alpha = logit(alpha); zero where clamping is active.
std::vector<double> kl_bernoulli_balanced_grad(std::span<const double> alpha);

/// mean + sqrt(var) * noise.
std::vector<double> sample_gaussian(std::span<const double> mean, std::span<const double> variance,
                                    std::span<const double> noise);
std::vector<double> sample_gaussian(std::span<const double> mean, std::span<const double> variance,
                                    std::mt19937_64& rng);
/// KL(N(mean, diag(var)) || N(0, I)) = 0.5 * sum(var + mean^2 - 1 - log var).
double kl_gaussian_standard(std::span<const double> mean, std::span<const double> variance);

/// bit i = 1 iff alpha_i > 0.5 (ties map to 0).
BitCode binarize_bernoulli(std::span<const double> alpha);
std::vector<BitCode> binarize_bernoulli(const Matrix& alpha);

/// Per-dimension medians of a nonempty reference matrix (mean of the two
/// middle values for an even row count).
std::vector<double> column_medians(const Matrix& reference);
/// bit i = 1 iff mean_i > medians_i.
BitCode binarize_gaussian_median(std::span<const double> mean, std::span<const double> medians);
std::vector<BitCode> binarize_gaussian_median(const Matrix& means, std::span<const double> medians);

struct LatentSample {
    Matrix relaxed;
    std::vector<BitCode> hard;
    Matrix noise;
};

/// Draws noise, relaxes, and thresholds the relaxed code at 0.5.
LatentSample draw_bernoulli_sample(const Matrix& alpha, double tau, std::mt19937_64& rng);

}  // namespace sshash
