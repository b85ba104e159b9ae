#pragma once

// Mini-batch semi-supervised training. Each batch runs encoder -> z ->
// (code statistics, label prediction) -> relaxed sample -> decoder, builds the
// within-batch pairs, and takes one Adam step on every network.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sshash/dataio.hpp"
#include "sshash/model.hpp"
#include "sshash/objective.hpp"

namespace sshash {

enum class MaskStrategy { first_s, random, stratified };

std::string_view to_string(MaskStrategy s) noexcept;
MaskStrategy parse_mask_strategy(std::string_view s);

/// Exactly floor(rho * n) true entries. `first_s` marks the leading rows,
/// `random` a seeded subset, `stratified` a seeded per-class allocation that
/// keeps every class represented when the budget allows.
std::vector<std::uint8_t> supervision_mask(std::size_t n, double rho,
                                           std::span<const LabelSet> labels, std::uint64_t seed,
                                           MaskStrategy strategy);

/// Sets the dataset's supervised flags over its train rows.
void apply_supervision(LabeledDataset& data, double rho, std::uint64_t seed, MaskStrategy strategy);

/// All unordered pairs (i < j) of a batch of `batch_size` rows, in lexicographic
/// order; with subsample > 0 and fewer than all pairs requested, a seeded
/// duplicate-free subset of that size (kept in lexicographic order).
std::vector<IndexPair> form_pairs(std::size_t batch_size, std::size_t subsample = 0,
                                  std::mt19937_64* rng = nullptr);

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 100;
    std::size_t bits = 16;
    LatentKind latent = LatentKind::bernoulli;
    SupervisionMode mode = SupervisionMode::selfsup;
    ReconstructionKind reconstruction = ReconstructionKind::sigmoid;
    LossWeights weights{};
    bool kl_weight_auto = true;  // lambda = 1 / bits, ignoring weights.kl
    bool margin_auto = true;     // margin = bits / 2, ignoring weights.margin
    double tau = 0.67;
    bool straight_through = false;
    std::size_t pair_subsample = 0;
    bool minmax_scale = false;
    std::uint64_t seed = 0;
    std::vector<std::size_t> encoder_hidden{1000};
    std::vector<std::size_t> decoder_hidden{1000};
    AdamConfig adam{};

    /// Weights with the automatic defaults filled in.
    LossWeights resolved_weights() const;
    void validate() const;
    /// Canonical one-line-per-field text, hashed into the config digest.
    std::string describe() const;
};

struct EpochRecord {
    std::size_t epoch = 0;
    double total = 0.0;
    double reconstruction = 0.0;
    double kl = 0.0;
    double supervised = 0.0;
    double pairwise = 0.0;
    std::size_t batches = 0;
    std::size_t batches_without_labels = 0;
    std::size_t batches_without_pairs = 0;
    double seconds = 0.0;
};

struct TrainLog {
    std::uint64_t seed = 0;
    std::string config_digest;
    std::vector<EpochRecord> epochs;
};

struct TrainResult {
    ModelBundle model;
    TrainLog log;
};

TrainResult train(const LabeledDataset& data, const TrainConfig& config);

struct ModelGradients {
    NetGradients trunk;
    NetGradients code_head;
    NetGradients predictor;  // empty in unsupervised mode
    NetGradients decoder;
};

struct BatchLoss {
    ObjectiveTerms terms;
    ModelGradients grads;
};

/// Loss and parameter gradients for one batch of prepared features under
/// frozen noise (logistic for bernoulli, standard normal for gaussian).
/// `labels` may be empty in unsupervised mode.
BatchLoss batch_loss(const ModelBundle& model, const Matrix& features, const Matrix& labels,
                     std::span<const std::uint8_t> labelled, std::span<const IndexPair> pairs,
                     const Matrix& noise, const ObjectiveSettings& settings,
                     bool straight_through = false);

ObjectiveSettings objective_settings(const TrainConfig& config, bool multi_label);
ModelSpec model_spec(const TrainConfig& config, const LabeledDataset& data);

}  // namespace sshash
