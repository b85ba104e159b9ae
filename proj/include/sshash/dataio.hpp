#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "sshash/hamming_index.hpp"
#include "sshash/matrix.hpp"

namespace sshash {

enum class Split : std::uint8_t { train, val, test, unused };

struct LabeledDataset {
    Matrix features;                 // n x d
    std::vector<LabelSet> labels;    // n sorted label sets, or empty when unlabelled
    int num_classes = 0;
    bool multi_label = false;
    std::vector<Split> split;        // n tags
    std::vector<std::uint8_t> supervised;  // n flags, only ever set on train rows

    std::size_t size() const noexcept { return features.rows(); }
    std::size_t dim() const noexcept { return features.cols(); }
    bool has_labels() const noexcept { return !labels.empty(); }

    std::vector<std::size_t> rows_in(Split s) const;
    /// One-hot (multi-hot in multi-label mode) label rows for the given indices.
    Matrix label_matrix(std::span<const std::size_t> rows) const;
    /// Throws unless features are finite, labels valid, and tag arrays sized n.
    void validate() const;
};

/// Whitespace-separated rows; optional sidecar of one class id per line.
LabeledDataset load_dense(std::istream& features, std::istream* labels = nullptr);
LabeledDataset load_dense(const std::filesystem::path& features,
                          const std::optional<std::filesystem::path>& labels = std::nullopt);

/// Header "n d K" then "label idx:val idx:val ..." with 0-based indices;
/// multi-label rows use a comma-separated label list. Rows are max-normalized
/// into [0, 1] when `normalize` is set.
LabeledDataset load_sparse(std::istream& in, bool multi_label = false, bool normalize = true);
LabeledDataset load_sparse(const std::filesystem::path& path, bool multi_label = false,
                           bool normalize = true);

/// Shortest round-trip decimal text for every value.
void write_dense(std::ostream& out, const Matrix& features);
void write_labels(std::ostream& out, std::span<const LabelSet> labels);
void write_sparse(std::ostream& out, const LabeledDataset& data);

/// Divides each row by its maximum (rows of zeros unchanged). Rejects negatives.
void max_normalize_rows(Matrix& features);

struct MinMaxScaler {
    std::vector<double> low;
    std::vector<double> high;

    /// Maps each column into [0, 1] with the fitted range, clamping outliers.
    void apply(Matrix& features) const;
};
/// Fits per-column ranges on the given rows.
MinMaxScaler fit_minmax(const Matrix& features, std::span<const std::size_t> rows);

struct SplitFractions {
    double train = 1.0;
    double val = 0.0;
    double test = 0.0;
};

/// Seeded random partition with floor(fraction * n) rows per tag; when the
/// fractions sum to 1 the train split absorbs the rounding remainder.
void split(LabeledDataset& data, SplitFractions fractions, std::uint64_t seed);
void split_counts(LabeledDataset& data, std::size_t n_train, std::size_t n_val, std::size_t n_test,
                  std::uint64_t seed);

struct SyntheticSpec {
    int classes = 10;
    std::size_t per_class = 500;
    std::size_t dim = 128;
    double spread = 0.5;
    std::uint64_t seed = 0;
};

/// Gaussian clusters of radius about `spread` around unit-sphere class means
/// (per-coordinate deviation spread / sqrt(d)), squashed through a sigmoid
/// into [0, 1]. Row i belongs to class i mod C.
LabeledDataset make_synthetic(const SyntheticSpec& spec);

/// FNV-1a over features, labels and split tags.
std::uint64_t digest(const LabeledDataset& data);

}  // namespace sshash
