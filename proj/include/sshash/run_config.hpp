#pragma once

// Plain-text `key = value` run configuration shared by every command.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sshash/dataio.hpp"
#include "sshash/hamming_index.hpp"
#include "sshash/trainer.hpp"

namespace sshash {

/// Bad configuration or command line; maps to the usage exit code.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class FeatureScaling { automatic, minmax, none };

struct RunConfig {
    // Data.
    std::string dataset;        // feature file path, or "synthetic"
    std::string dataset_name;   // label used in sweep/stats outputs
    std::string format = "dense";
    std::string labels;         // dense sidecar label file
    bool multi_label = false;
    bool normalize = true;      // sparse rows max-normalized on load
    FeatureScaling scaling = FeatureScaling::automatic;
    SyntheticSpec synthetic{};
    SplitFractions fractions{0.8, 0.1, 0.1};
    std::size_t train_count = 0;  // nonzero counts override the fractions
    std::size_t val_count = 0;
    std::size_t test_count = 0;
    std::uint64_t data_seed = 0;

    // Training.
    TrainConfig train{};
    double rho = 1.0;
    MaskStrategy mask_strategy = MaskStrategy::stratified;

    // Evaluation.
    std::size_t k = 100;
    MapDefinition map_definition = MapDefinition::mean_precision;

    // Sweep and stats.
    std::vector<std::string> methods{"ssb-vae", "psh-gs", "vdsh-s"};
    std::vector<double> rhos{1.0, 0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.1};
    std::vector<double> alpha_grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0,
                                   1e1,  1e2,  1e3,  1e4,  1e5,  1e6};
    std::vector<double> beta_grid{1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1e0,
                                  1e1,  1e2,  1e3,  1e4,  1e5,  1e6};
    std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
    std::size_t max_runs = 0;  // 0: unlimited
    std::size_t threads = 1;
    double stats_level = 0.05;

    std::filesystem::path out = ".";

    /// Sets one key; throws UsageError naming the key on unknown keys or bad values.
    void set(std::string_view key, std::string_view value);
    /// Applies `key = value` lines; '#' starts a comment.
    void apply_text(std::istream& in, std::string_view source = "config");
    void apply_file(const std::filesystem::path& path);
    /// Applies a "key=value" override.
    void apply_override(std::string_view assignment);

    /// Every key in canonical order; re-applying it reproduces the config.
    std::string to_text() const;
    /// Writes to_text() to <out>/<name>.
    void write_resolved(const std::string& name = "config.resolved") const;

    /// Whether min-max scaling applies to the configured dataset.
    bool use_minmax() const;
    /// Validated TrainConfig with scaling resolved.
    TrainConfig resolved_train() const;
};

/// All known configuration keys in canonical order.
const std::vector<std::string>& config_keys();

/// "ssb-vae", "psh-gs", "vdsh-s" and "unsup" name (mode, latent) pairs.
bool is_method_name(std::string_view name);
void apply_method(TrainConfig& config, std::string_view method);
/// The method name for a (mode, latent) pair, or "<latent>-<mode>" when unnamed.
std::string method_name(SupervisionMode mode, LatentKind latent);

/// Loads the configured dataset and tags its split.
LabeledDataset load_dataset(const RunConfig& config);

/// 10^lo, 10^(lo+1), ..., 10^hi.
std::vector<double> decade_grid(int lo, int hi);

}  // namespace sshash
