#pragma once

// Loss terms of the semi-supervised hashing objective and their composition.
// Every batch-level quantity here is a pure function of model outputs; the
// trainer chains the returned output gradients back through the networks.

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "sshash/matrix.hpp"

namespace sshash {

enum class ReconstructionKind { sigmoid, gaussian };
enum class LatentKind { bernoulli, gaussian };

/// Which supervised terms join the unsupervised ELBO loss.
enum class SupervisionMode {
    unsup,        // reconstruction + KL only
    pointwise,    // + cross-entropy on labelled rows
    pairwise_gt,  // + pairwise loss over labelled pairs (ground-truth similarity)
    selfsup,      // + pairwise loss over all pairs with predicted label similarity
};

std::string_view to_string(ReconstructionKind k) noexcept;
std::string_view to_string(LatentKind k) noexcept;
std::string_view to_string(SupervisionMode m) noexcept;
ReconstructionKind parse_reconstruction_kind(std::string_view s);
LatentKind parse_latent_kind(std::string_view s);
SupervisionMode parse_supervision_mode(std::string_view s);

struct LossWeights {
    double kl = 1.0;        // lambda
    double pointwise = 1.0; // beta
    double pairwise = 1.0;  // alpha_w, shared by the ground-truth and self-supervised pair terms
    double margin = 8.0;

    /// All weights nonnegative, 0 < margin <= bits.
    void validate(std::size_t bits) const;
};

/// Gaussian kind: 0.5 * ||xhat - x||^2. Sigmoid kind: binary cross-entropy with
/// xhat clamped into [1e-7, 1 - 1e-7]; x must lie in [0, 1].
double reconstruction_loss(std::span<const double> x, std::span<const double> xhat,
                           ReconstructionKind kind);
/// d loss / d xhat (zero where the sigmoid-kind clamp is active).
void reconstruction_grad(std::span<const double> x, std::span<const double> xhat,
                         ReconstructionKind kind, std::span<double> grad);

/// Cross-entropy -sum_k y_k log yhat_k. `strict` rejects y that is not one-hot.
double pointwise_loss(std::span<const double> y, std::span<const double> yhat, bool strict = true);
/// Per-tag binary cross-entropy used in multi-label mode.
double multilabel_pointwise_loss(std::span<const double> y, std::span<const double> yhat);

/// sum_i (a_i - b_i)^2; the Hamming distance when both inputs are binary.
double surrogate_hamming(std::span<const double> a, std::span<const double> b);

struct PairDistance {
    double positive = 0.0;  // D+ >= 0
    double negative = 0.0;  // D- = -(margin - D+)_+ <= 0
};
PairDistance pair_distance(std::span<const double> a, std::span<const double> b, double margin);

/// I(y = y') D+ - I(y != y') D-, labels one-hot.
double pairwise_loss_indicator(std::span<const double> b, std::span<const double> b2,
                               std::span<const double> y, std::span<const double> y2,
                               double margin);
/// y^T y' D+ - (1 - y^T y') D-.
double pairwise_loss_matrix(std::span<const double> b, std::span<const double> b2,
                            std::span<const double> y, std::span<const double> y2, double margin);
/// yhat^T yhat' D+ - (1 - yhat^T yhat') D-.
double selfsup_loss(std::span<const double> b, std::span<const double> b2,
                    std::span<const double> yhat, std::span<const double> yhat2, double margin);
/// Same value written as (D+ + D-) yhat^T yhat' - D-.
double selfsup_loss_reordered(std::span<const double> b, std::span<const double> b2,
                              std::span<const double> yhat, std::span<const double> yhat2,
                              double margin);

struct IndexPair {
    std::uint32_t first = 0;
    std::uint32_t second = 0;
    friend bool operator==(const IndexPair&, const IndexPair&) = default;
    friend auto operator<=>(const IndexPair&, const IndexPair&) = default;
};

/// Model outputs for one mini-batch of M rows. Pointers to absent pieces stay null.
struct BatchOutputs {
    const Matrix* features = nullptr;        // x, M x d
    const Matrix* reconstruction = nullptr;  // xhat, M x d
    const Matrix* alpha = nullptr;           // bernoulli: M x B activation probabilities
    const Matrix* mean = nullptr;            // gaussian: M x B
    const Matrix* log_variance = nullptr;    // gaussian: M x B
    const Matrix* codes = nullptr;           // relaxed (or sampled) codes, M x B
    const Matrix* predictions = nullptr;     // yhat, M x K
    const Matrix* labels = nullptr;          // y, M x K (rows of unlabelled examples ignored)
    std::span<const std::uint8_t> labelled;  // M flags
    std::span<const IndexPair> pairs;        // within-batch pairs
};

struct ObjectiveSettings {
    LossWeights weights;
    SupervisionMode mode = SupervisionMode::selfsup;
    LatentKind latent = LatentKind::bernoulli;
    ReconstructionKind reconstruction = ReconstructionKind::sigmoid;
    bool multi_label = false;
};

struct ObjectiveTerms {
    double total = 0.0;
    double reconstruction = 0.0;  // mean over rows
    double kl = 0.0;              // mean over rows, unweighted
    double supervised = 0.0;      // mean over labelled rows
    double pairwise = 0.0;        // mean over pairs used
    std::size_t labelled_rows = 0;
    std::size_t pairs_used = 0;
};

/// Gradients of the total with respect to each model output; shapes follow
/// BatchOutputs, unused ones are left empty.
struct ObjectiveGrads {
    Matrix reconstruction;
    Matrix alpha;
    Matrix mean;
    Matrix log_variance;
    Matrix codes;
    Matrix predictions;
};

/// mean(recon + lambda KL) + beta mean_labelled(CE) + alpha_w mean_pairs(pair term).
ObjectiveTerms total_objective(const BatchOutputs& batch, const ObjectiveSettings& settings,
                               ObjectiveGrads* grads = nullptr);

}  // namespace sshash
