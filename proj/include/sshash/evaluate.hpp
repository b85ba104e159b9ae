#pragma once

// Model-level retrieval evaluation: hash a split, index it, query it.

#include <span>
#include <vector>

#include "sshash/dataio.hpp"
#include "sshash/hamming_index.hpp"
#include "sshash/model.hpp"

namespace sshash {

/// Hard codes for the listed dataset rows.
std::vector<BitCode> hash_rows(const ModelBundle& model, const LabeledDataset& data,
                               std::span<const std::size_t> rows);

/// Index over the listed rows; ids are dataset row numbers, labels attached when present.
HashIndex build_index(const ModelBundle& model, const LabeledDataset& data,
                      std::span<const std::size_t> rows);

/// Encodes the query rows and ranks them against the index. Throws InvalidInput
/// for unlabelled queries or a code length mismatch.
EvalReport evaluate(const ModelBundle& model, const LabeledDataset& data,
                    std::span<const std::size_t> query_rows, const HashIndex& index, std::size_t k,
                    MapDefinition map_definition = MapDefinition::mean_precision);

/// Queries from `query_split` against an index of the train split.
EvalReport evaluate_split(const ModelBundle& model, const LabeledDataset& data, Split query_split,
                          std::size_t k,
                          MapDefinition map_definition = MapDefinition::mean_precision);

}  // namespace sshash
