#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "sshash/bitcode.hpp"

namespace sshash {

/// Sorted class ids of one item; one entry for single-label data.
using LabelSet = std::vector<int>;

/// Relevance: the two label sets share at least one class.
bool labels_overlap(const LabelSet& a, const LabelSet& b);

/// Immutable bit-packed code table with parallel id and (optional) label arrays.
class HashIndex {
public:
    HashIndex() = default;
    HashIndex(std::size_t bits, std::span<const BitCode> codes, std::vector<std::uint64_t> ids,
              std::vector<LabelSet> labels = {});

    std::size_t bits() const noexcept { return bits_; }
    std::size_t size() const noexcept { return ids_.size(); }
    bool empty() const noexcept { return ids_.empty(); }
    std::size_t words_per_code() const noexcept { return words_; }

    std::span<const std::uint64_t> packed() const noexcept { return packed_; }
    std::span<const std::uint64_t> ids() const noexcept { return ids_; }
    bool has_labels() const noexcept { return !labels_.empty(); }
    const LabelSet& labels(std::size_t i) const { return labels_.at(i); }
    BitCode code(std::size_t i) const;

private:
    std::size_t bits_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> packed_;
    std::vector<std::uint64_t> ids_;
    std::vector<LabelSet> labels_;
};

struct Neighbor {
    std::uint64_t id = 0;
    std::uint32_t distance = 0;
    friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

struct Ranking {
    std::uint64_t query_id = 0;
    std::vector<Neighbor> neighbors;   // nondecreasing distance, ties by ascending id
    std::vector<std::uint8_t> relevant;  // filled when query labels are known
    bool truncated = false;            // index held fewer than k items
};

/// The k nearest codes (k capped at the index size).
Ranking top_k(const BitCode& query, const HashIndex& index, std::size_t k,
              std::uint64_t query_id = 0, const LabelSet* query_labels = nullptr);

/// Batch form; scans through the parallel kernel.
std::vector<Ranking> top_k_batch(std::span<const BitCode> queries, const HashIndex& index,
                                 std::size_t k, std::span<const std::uint64_t> query_ids = {},
                                 std::span<const LabelSet> query_labels = {});

/// Fraction of relevant items among the first min(k, length) entries.
double precision_at_k(const Ranking& ranking, std::size_t k);
/// Mean of p@j for j = 1..min(k, length).
double map_at_k(const Ranking& ranking, std::size_t k);
/// Conventional AP@k: mean of p@j over the relevant ranks j <= k.
double average_precision_at_k(const Ranking& ranking, std::size_t k);

enum class MapDefinition { mean_precision, relevant_ranks };

struct QueryMetrics {
    std::uint64_t query_id = 0;
    double precision = 0.0;
    double map = 0.0;
    std::size_t retrieved = 0;
    bool truncated = false;
};

struct EvalReport {
    std::size_t k = 0;
    std::vector<QueryMetrics> per_query;
    double mean_precision = 0.0;
    double mean_map = 0.0;
    bool truncated = false;
};

EvalReport evaluate_codes(std::span<const BitCode> queries, std::span<const LabelSet> query_labels,
                          const HashIndex& index, std::size_t k,
                          std::span<const std::uint64_t> query_ids = {},
                          MapDefinition map_definition = MapDefinition::mean_precision);

/// Header "B n", then n lines "<id> <hex code>".
void write_code_file(std::ostream& out, std::size_t bits, std::span<const std::uint64_t> ids,
                     std::span<const BitCode> codes);

struct CodeFile {
    std::size_t bits = 0;
    std::vector<std::uint64_t> ids;
    std::vector<BitCode> codes;
};

CodeFile read_code_file(std::istream& in);

}  // namespace sshash
