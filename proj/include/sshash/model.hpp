#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sshash/bitcode.hpp"
#include "sshash/diffnet.hpp"
#include "sshash/objective.hpp"

namespace sshash {

struct ModelSpec {
    std::size_t input_dim = 0;
    std::size_t bits = 16;
    int num_classes = 0;  // 0: no predictor
    LatentKind latent = LatentKind::bernoulli;
    ReconstructionKind reconstruction = ReconstructionKind::sigmoid;
    bool multi_label = false;
    double tau = 0.67;
    std::vector<std::size_t> encoder_hidden{1000};
    std::vector<std::size_t> decoder_hidden{1000};
};

/// Encoder trunk x -> z, code head z -> alpha (or [mean | log variance]),
/// label predictor z -> yhat, and decoder code -> xhat, with one Adam state each.
struct ModelBundle {
    LatentKind latent = LatentKind::bernoulli;
    ReconstructionKind reconstruction = ReconstructionKind::sigmoid;
    std::size_t bits = 0;
    double tau = 0.67;
    bool multi_label = false;
    int num_classes = 0;

    DenseNet trunk;
    DenseNet code_head;
    DenseNet predictor;
    DenseNet decoder;
    AdamState trunk_opt;
    AdamState head_opt;
    AdamState predictor_opt;
    AdamState decoder_opt;

    std::vector<double> medians;     // gaussian latent: thresholds fitted on training means
    std::vector<double> scale_low;   // optional min-max feature scaling
    std::vector<double> scale_high;
    std::string config_digest;

    std::size_t input_dim() const { return trunk.in_dim(); }
    bool has_predictor() const noexcept { return predictor.num_layers() > 0; }
    void reset_optimizers(const AdamConfig& config);

    /// Parameter tensors and metadata only (optimizer state excluded).
    friend bool same_parameters(const ModelBundle& a, const ModelBundle& b);
};

bool same_parameters(const ModelBundle& a, const ModelBundle& b);

/// Glorot-initialized model; each network draws from its own seeded stream.
ModelBundle init_model(const ModelSpec& spec, std::uint64_t seed, const AdamConfig& adam = {});

/// Independent RNG stream for (seed, stream id).
std::mt19937_64 stream_rng(std::uint64_t seed, std::uint64_t stream);

/// Applies the stored feature scaling (if any) to a copy of the features.
Matrix prepare_features(const ModelBundle& model, const Matrix& features);
/// Deterministic code statistics on already-prepared features: alpha for
/// bernoulli, mean for gaussian.
Matrix code_statistics(const ModelBundle& model, const Matrix& features);
/// Fits median thresholds for a gaussian model on raw reference features.
void fit_thresholds(ModelBundle& model, const Matrix& reference_features);
/// Hard codes for raw features: alpha > 0.5 (bernoulli) or mean > median (gaussian).
std::vector<BitCode> hash_features(const ModelBundle& model, const Matrix& features);

void save_checkpoint(std::ostream& out, const ModelBundle& model);
ModelBundle load_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const ModelBundle& model);
ModelBundle load_checkpoint(const std::filesystem::path& path);

/// 16 hex digits of FNV-1a over the text.
std::string digest_hex(std::string_view text);

}  // namespace sshash
